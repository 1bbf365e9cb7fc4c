#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace specnet {

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_name(std::string_view name) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Seed of a named sub-stream of `seed`, further keyed by indices (fold,
// epoch, sample...). Consumers on different names never share state.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view name,
                                 std::initializer_list<std::uint64_t> keys = {}) noexcept {
  std::uint64_t s = mix64(seed ^ hash_name(name));
  for (std::uint64_t k : keys) s = mix64(s ^ mix64(k));
  return s;
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::string_view name,
                    std::initializer_list<std::uint64_t> keys = {}) {
  return Rng(derive_seed(seed, name, keys));
}

}  // namespace specnet
