#include "styleobf/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace styleobf {

using json = nlohmann::json;

namespace {
constexpr char kMagic[4] = {'S', 'O', 'B', 'F'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ofstream& out, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ofstream& out, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 8);
}

uint32_t read_u32(std::ifstream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}

uint64_t read_u64(std::ifstream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}
}  // namespace

void write_checkpoint(const std::string& path, const json& header,
                      const ParamStore& params) {
  json full = header;
  json manifest = json::array();
  for (const auto& t : params.tensors()) {
    manifest.push_back({{"name", t.name},
                        {"rows", t.value.rows()},
                        {"cols", t.value.cols()}});
  }
  full["tensors"] = std::move(manifest);
  const std::string header_str = full.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  write_u64(out, header_str.size());
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (const auto& t : params.tensors()) {
    out.write(reinterpret_cast<const char*>(t.value.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(t.value.size())));
  }
  if (!out) throw DataError("checkpoint write failed: " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw DataError("bad checkpoint magic: " + path);
  const uint32_t version = read_u32(in);
  if (version != kVersion)
    throw DataError("unsupported checkpoint version in " + path);
  const uint64_t header_len = read_u64(in);
  std::string header_str(header_len, '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw DataError("truncated checkpoint header: " + path);

  Checkpoint ckpt;
  try {
    ckpt.header = json::parse(header_str);
  } catch (const json::exception& e) {
    throw DataError("malformed checkpoint header in " + path + ": " + e.what());
  }
  if (!ckpt.header.contains("tensors"))
    throw DataError("checkpoint header missing tensor manifest: " + path);
  for (const auto& entry : ckpt.header["tensors"]) {
    const std::string name = entry.at("name").get<std::string>();
    const int rows = entry.at("rows").get<int>();
    const int cols = entry.at("cols").get<int>();
    const int id = ckpt.params.add(name, rows, cols);
    Tensor& t = ckpt.params.at(id);
    in.read(reinterpret_cast<char*>(t.value.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(t.value.size())));
    if (!in) throw DataError("truncated checkpoint tensor data: " + path);
  }
  return ckpt;
}

void require_kind(const Checkpoint& ckpt, const std::string& kind) {
  if (!ckpt.header.contains("kind") || ckpt.header["kind"].get<std::string>() != kind)
    throw DataError("checkpoint kind mismatch: expected '" + kind + "'");
}

void require_vocab(const Checkpoint& ckpt, uint64_t vocab_hash) {
  if (!ckpt.header.contains("vocab_hash") ||
      ckpt.header["vocab_hash"].get<std::string>() != to_hex(vocab_hash))
    throw DataError("checkpoint was trained on a different vocabulary");
}

}  // namespace styleobf
