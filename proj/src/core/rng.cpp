#include "adaptnav/core/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace adaptnav {

uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t hash_str(const std::string& s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

uint64_t seed_combine(uint64_t a, uint64_t b) { return mix64(a ^ mix64(b)); }

uint64_t seed_combine(uint64_t a, uint64_t b, uint64_t c) {
  return mix64(seed_combine(a, b) ^ mix64(c));
}

double Rng::normal() {
  // u1 in (0, 1] so log() stays finite.
  double u1 = 1.0 - uniform();
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

uint64_t Rng::uniform_int(uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::uniform_int: n must be > 0");
  // Multiply-shift map of a 64-bit draw onto [0, n).
  return static_cast<uint64_t>(
      (static_cast<__uint128_t>(next_u64()) * static_cast<__uint128_t>(n)) >> 64);
}

}  // namespace adaptnav
