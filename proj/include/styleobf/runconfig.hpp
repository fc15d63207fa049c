#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "styleobf/common.hpp"

namespace styleobf {

// Flat key=value configuration with a fixed key registry. Keys must be
// defined with a type and default before anything can set them; unknown or
// ill-typed assignments raise ConfigError. Precedence is command line over
// config file over default, which callers get by applying sources in that
// order (later set calls win).
class RunConfig {
 public:
  enum class Source { kDefault, kFile, kCli };

  void define_int(const std::string& key, long long value, const std::string& help);
  void define_real(const std::string& key, double value, const std::string& help);
  void define_flag(const std::string& key, bool value, const std::string& help);
  void define_string(const std::string& key, const std::string& value, const std::string& help);

  bool has(const std::string& key) const;
  long long get_int(const std::string& key) const;
  double get_real(const std::string& key) const;
  bool get_flag(const std::string& key) const;
  const std::string& get_string(const std::string& key) const;

  // Parses "key = value" lines; blank lines and lines starting with '#' are
  // ignored. Values keep their raw spelling and are checked against the
  // registered type.
  void load_file(const std::string& path);
  void set(const std::string& key, const std::string& raw_value, Source source);

  // Resolved configuration, one sorted "key=value" line each, with the
  // winning source in a trailing comment.
  std::string dump() const;
  nlohmann::json to_json() const;

 private:
  enum class Type { kInt, kReal, kFlag, kString };
  struct Entry {
    Type type;
    std::string help;
    Source source = Source::kDefault;
    long long int_value = 0;
    double real_value = 0;
    bool flag_value = false;
    std::string string_value;
  };

  Entry& require(const std::string& key, Type type);
  const Entry& require(const std::string& key, Type type) const;

  std::map<std::string, Entry> entries_;
};

// Record of one CLI invocation: what ran, when, with which resolved
// configuration, and the content hashes of every file read or written.
struct RunManifest {
  std::string command;
  std::string timestamp;
  uint64_t seed = 0;
  nlohmann::json config;
  std::vector<std::pair<std::string, std::string>> inputs;   // path, content hash
  std::vector<std::pair<std::string, std::string>> outputs;  // path, content hash
};

RunManifest make_manifest(const std::string& command, uint64_t seed, const RunConfig& cfg);
void manifest_add_input(RunManifest& manifest, const std::string& path);
void manifest_add_output(RunManifest& manifest, const std::string& path);
void save_manifest(const RunManifest& manifest, const std::string& path);

}  // namespace styleobf
