#pragma once

#include <json.hpp>
#include <string>

#include "styleobf/tape.hpp"

namespace styleobf {

// Self-describing binary checkpoint: magic + version, a JSON header with the
// model kind, config, vocabulary hash, and tensor manifest, then raw
// little-endian doubles in manifest order (column-major).
void write_checkpoint(const std::string& path, const nlohmann::json& header,
                      const ParamStore& params);

struct Checkpoint {
  nlohmann::json header;
  ParamStore params;
};

Checkpoint read_checkpoint(const std::string& path);

// Raises DataError unless the header kind/vocab hash match.
void require_kind(const Checkpoint& ckpt, const std::string& kind);
void require_vocab(const Checkpoint& ckpt, uint64_t vocab_hash);

}  // namespace styleobf
