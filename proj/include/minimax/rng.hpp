#pragma once

// Counter-based random numbers: every draw is addressed by (seed, stream, index),
// so distinct trials get independent streams by construction and identical
// (seed, index) pairs reproduce the same value with no shared state.

#include <cstdint>
#include <cmath>

#include "minimax/linalg.hpp"

namespace minimax {

namespace detail {
inline std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 33;
  x *= 0xc4ceb9fe1a85ec53ULL;
  x ^= x >> 33;
  return x;
}
inline std::uint64_t hash2(std::uint64_t a, std::uint64_t b) {
  return mix64(a + 0x9e3779b97f4a7c15ULL * (b + 1));
}
}  // namespace detail

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(detail::hash2(detail::mix64(seed), stream)) {}

  /// Uniform in the open interval (0,1); draw #i of this stream.
  double uniform_at(std::uint64_t i) const {
    const std::uint64_t bits = detail::hash2(key_, i);
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; consumes the two uniforms at (2i, 2i+1).
  double gaussian_at(std::uint64_t i) const {
    const double u1 = uniform_at(2 * i);
    const double u2 = uniform_at(2 * i + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double next_uniform() { return uniform_at(ctr_++); }

  double next_gaussian() {
    const double g = gaussian_at(ctr_);
    ++ctr_;
    return g;
  }

  Vec gaussian_vec(int n) {
    Vec v(static_cast<std::size_t>(n));
    for (double& x : v) x = next_gaussian();
    return v;
  }

  Vec uniform_vec(int n) {
    Vec v(static_cast<std::size_t>(n));
    for (double& x : v) x = next_uniform();
    return v;
  }

  /// Substream derived from a label; used to give named components
  /// (problem-gen, solver, mc, ...) independent streams under one seed.
  RngStream fork(std::uint64_t label) const {
    RngStream r(0, 0);
    r.key_ = detail::hash2(key_, 0x5bf03635ULL + label);
    return r;
  }

 private:
  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
};

}  // namespace minimax
