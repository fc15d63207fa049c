#include "styleobf/runconfig.hpp"

#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include "styleobf/dataset.hpp"

namespace styleobf {

namespace {

std::string trim(const std::string& s) {
  std::size_t begin = 0, end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
  return s.substr(begin, end - begin);
}

const char* source_name(RunConfig::Source source) {
  switch (source) {
    case RunConfig::Source::kDefault: return "default";
    case RunConfig::Source::kFile: return "file";
    case RunConfig::Source::kCli: return "cli";
  }
  return "?";
}

long long parse_int(const std::string& key, const std::string& raw) {
  errno = 0;
  char* end = nullptr;
  const long long value = std::strtoll(raw.c_str(), &end, 10);
  if (errno != 0 || end == raw.c_str() || *end != '\0')
    throw ConfigError("config key '" + key + "' expects an integer, got '" + raw + "'");
  return value;
}

double parse_real(const std::string& key, const std::string& raw) {
  errno = 0;
  char* end = nullptr;
  const double value = std::strtod(raw.c_str(), &end);
  if (errno != 0 || end == raw.c_str() || *end != '\0')
    throw ConfigError("config key '" + key + "' expects a number, got '" + raw + "'");
  return value;
}

bool parse_flag(const std::string& key, const std::string& raw) {
  if (raw == "true" || raw == "1" || raw == "yes" || raw == "on") return true;
  if (raw == "false" || raw == "0" || raw == "no" || raw == "off") return false;
  throw ConfigError("config key '" + key + "' expects a boolean, got '" + raw + "'");
}

}  // namespace

void RunConfig::define_int(const std::string& key, long long value, const std::string& help) {
  if (entries_.count(key)) throw ConfigError("config key '" + key + "' defined twice");
  Entry e;
  e.type = Type::kInt;
  e.help = help;
  e.int_value = value;
  entries_.emplace(key, std::move(e));
}

void RunConfig::define_real(const std::string& key, double value, const std::string& help) {
  if (entries_.count(key)) throw ConfigError("config key '" + key + "' defined twice");
  Entry e;
  e.type = Type::kReal;
  e.help = help;
  e.real_value = value;
  entries_.emplace(key, std::move(e));
}

void RunConfig::define_flag(const std::string& key, bool value, const std::string& help) {
  if (entries_.count(key)) throw ConfigError("config key '" + key + "' defined twice");
  Entry e;
  e.type = Type::kFlag;
  e.help = help;
  e.flag_value = value;
  entries_.emplace(key, std::move(e));
}

void RunConfig::define_string(const std::string& key, const std::string& value,
                              const std::string& help) {
  if (entries_.count(key)) throw ConfigError("config key '" + key + "' defined twice");
  Entry e;
  e.type = Type::kString;
  e.help = help;
  e.string_value = value;
  entries_.emplace(key, std::move(e));
}

bool RunConfig::has(const std::string& key) const { return entries_.count(key) > 0; }

RunConfig::Entry& RunConfig::require(const std::string& key, Type type) {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("unknown config key '" + key + "'");
  if (it->second.type != type)
    throw ConfigError("config key '" + key + "' accessed with the wrong type");
  return it->second;
}

const RunConfig::Entry& RunConfig::require(const std::string& key, Type type) const {
  return const_cast<RunConfig*>(this)->require(key, type);
}

long long RunConfig::get_int(const std::string& key) const {
  return require(key, Type::kInt).int_value;
}
double RunConfig::get_real(const std::string& key) const {
  return require(key, Type::kReal).real_value;
}
bool RunConfig::get_flag(const std::string& key) const {
  return require(key, Type::kFlag).flag_value;
}
const std::string& RunConfig::get_string(const std::string& key) const {
  return require(key, Type::kString).string_value;
}

void RunConfig::set(const std::string& key, const std::string& raw_value, Source source) {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("unknown config key '" + key + "'");
  Entry& e = it->second;
  const std::string raw = trim(raw_value);
  switch (e.type) {
    case Type::kInt: e.int_value = parse_int(key, raw); break;
    case Type::kReal: e.real_value = parse_real(key, raw); break;
    case Type::kFlag: e.flag_value = parse_flag(key, raw); break;
    case Type::kString: e.string_value = raw; break;
  }
  e.source = source;
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": expected 'key = value', got '" + text + "'");
    const std::string key = trim(text.substr(0, eq));
    if (key.empty())
      throw ConfigError(path + ":" + std::to_string(line_no) + ": empty config key");
    set(key, text.substr(eq + 1), Source::kFile);
  }
}

std::string RunConfig::dump() const {
  std::ostringstream out;
  for (const auto& [key, e] : entries_) {
    out << key << "=";
    switch (e.type) {
      case Type::kInt: out << e.int_value; break;
      case Type::kReal: out << e.real_value; break;
      case Type::kFlag: out << (e.flag_value ? "true" : "false"); break;
      case Type::kString: out << e.string_value; break;
    }
    out << "  # " << source_name(e.source) << "\n";
  }
  return out.str();
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, e] : entries_) {
    switch (e.type) {
      case Type::kInt: j[key] = e.int_value; break;
      case Type::kReal: j[key] = e.real_value; break;
      case Type::kFlag: j[key] = e.flag_value; break;
      case Type::kString: j[key] = e.string_value; break;
    }
  }
  return j;
}

RunManifest make_manifest(const std::string& command, uint64_t seed, const RunConfig& cfg) {
  RunManifest manifest;
  manifest.command = command;
  manifest.seed = seed;
  manifest.config = cfg.to_json();
  std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  manifest.timestamp = buf;
  return manifest;
}

void manifest_add_input(RunManifest& manifest, const std::string& path) {
  manifest.inputs.emplace_back(path, to_hex(file_hash(path)));
}

void manifest_add_output(RunManifest& manifest, const std::string& path) {
  manifest.outputs.emplace_back(path, to_hex(file_hash(path)));
}

void save_manifest(const RunManifest& manifest, const std::string& path) {
  nlohmann::json j;
  j["command"] = manifest.command;
  j["timestamp"] = manifest.timestamp;
  j["seed"] = manifest.seed;
  j["config"] = manifest.config;
  auto files = [](const std::vector<std::pair<std::string, std::string>>& list) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [p, h] : list) arr.push_back({{"path", p}, {"hash", h}});
    return arr;
  };
  j["inputs"] = files(manifest.inputs);
  j["outputs"] = files(manifest.outputs);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace styleobf
