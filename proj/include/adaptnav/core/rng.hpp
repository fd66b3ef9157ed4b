#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace adaptnav {

// splitmix64 finalizer; used for seed derivation and hashing.
uint64_t mix64(uint64_t x);

// FNV-1a over bytes, for hashing strings into seed material.
uint64_t hash_str(const std::string& s);

// Combine seed material into a fresh stream seed.
uint64_t seed_combine(uint64_t a, uint64_t b);
uint64_t seed_combine(uint64_t a, uint64_t b, uint64_t c);

// Deterministic RNG. mt19937_64 gives a portable bit stream; the
// floating-point transforms below are written out so results do not
// depend on libstdc++'s distribution implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller (cosine branch only, no cached spare).
  double normal();

  // Uniform integer in [0, n). n must be > 0.
  uint64_t uniform_int(uint64_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace adaptnav
