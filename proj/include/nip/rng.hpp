#pragma once

// Seed plumbing: one top-level --seed fans out to named per-module streams so
// components stay reproducible in isolation and in full pipelines.

#include <cstdint>
#include <random>
#include <string_view>

namespace nip {

// splitmix64 finalizer; decorrelates derived seeds.
constexpr uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t base, std::string_view stream) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (char c : stream) {
    h ^= static_cast<uint8_t>(c);
    h *= 0x100000001b3ull;
  }
  return mix64(base ^ mix64(h));
}

inline std::mt19937_64 make_rng(uint64_t base, std::string_view stream) {
  return std::mt19937_64(derive_seed(base, stream));
}

// U(0,1) draw with both endpoints excluded.
inline double uniform_open01(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  double u;
  do {
    u = dist(rng);
  } while (u <= 0.0 || u >= 1.0);
  return u;
}

}  // namespace nip
