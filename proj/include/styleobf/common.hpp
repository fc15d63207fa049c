#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace styleobf {

// Configuration problems: bad keys, bad values, incompatible options.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent data: files, vocab mismatches, shape errors.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure during optimization (non-finite loss, exploding step).
class TrainError : public std::runtime_error {
 public:
  explicit TrainError(const std::string& msg) : std::runtime_error(msg) {}
};

uint64_t fnv1a64(const void* data, size_t len);
uint64_t fnv1a64(const std::string& s);
uint64_t mix64(uint64_t a, uint64_t b);
std::string to_hex(uint64_t v);

// Deterministic random stream. All distributions are derived from the raw
// 64-bit output with fixed arithmetic so results are stable across platforms.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed), seed_tag_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). Rejection sampling, no modulo bias.
  uint64_t uniform_int(uint64_t n);

  double normal();   // standard normal, Box-Muller
  double gumbel();   // standard Gumbel, -log(-log(u))

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Independent child stream; deterministic in (parent seed, salt).
  Rng derive(uint64_t salt) const { return Rng(mix64(seed_tag_, salt)); }

 private:
  std::mt19937_64 engine_;
  uint64_t seed_tag_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace styleobf
