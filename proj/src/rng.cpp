#include "hausr/rng.hpp"

namespace hausr {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

std::uint64_t Rng::scramble(std::uint64_t x) {
  // splitmix64 finalizer; spreads low-entropy seeds over the full state space.
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

Rng Rng::substream(std::uint64_t root_seed, std::string_view name) {
  return Rng(scramble(root_seed) ^ fnv1a(name));
}

int Rng::categorical(const double* weights, int n) {
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += weights[i];
  double r = uniform() * total;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += weights[i];
    if (r < acc) return i;
  }
  return n - 1;  // r landed on the top edge due to rounding
}

}  // namespace hausr
