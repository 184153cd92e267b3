#pragma once

#include <cstdint>

#include "ganax/tensor.hpp"

namespace ganax {

// splitmix64: tiny, portable, and stable across platforms, so seeded runs
// and golden files never drift.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, bound).
  std::uint64_t below(std::uint64_t bound) { return next() % bound; }

  // Uniform in [lo, hi] inclusive.
  int range(int lo, int hi) {
    return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  // Q8.8 raw value in [-256, 255], i.e. roughly [-1.0, 1.0). Keeps layer
  // accumulations far from the 32-bit wrap point.
  std::int16_t small_q88() { return static_cast<std::int16_t>(range(-256, 255)); }

 private:
  std::uint64_t state_;
};

// Seed-deterministic tensor fill used whenever no tensor files are given.
inline TensorQ random_tensor_q(std::vector<int> dims, std::uint64_t seed) {
  TensorQ t(std::move(dims));
  SplitMix64 rng(seed);
  for (auto& v : t.data()) v = rng.small_q88();
  return t;
}

inline TensorF to_float_tensor(const TensorQ& q) {
  TensorF t(q.dims());
  for (std::size_t i = 0; i < q.size(); ++i)
    t.data()[i] = static_cast<float>(q.data()[i]) / 256.0f;
  return t;
}

}  // namespace ganax
