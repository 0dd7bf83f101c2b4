#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace progrisk {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent child streams.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed for a child stream identified by (master, path...). The result depends
// only on the arguments, never on which thread asks for it.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(master);
  for (std::uint64_t p : path) s = mix64(s ^ mix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

inline Rng make_rng(std::uint64_t master, std::initializer_list<std::uint64_t> path = {}) {
  return Rng(derive_seed(master, path));
}

}  // namespace progrisk
