// Reproducible parallel random streams. Each (seed, stream_id) pair selects
// an independent xoshiro256** state via splitmix64 hashing; the same pair
// always reproduces the identical Gaussian sequence, so per-chain and
// per-instance streams can be consumed in parallel deterministically.
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace klmc {

struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
};

inline constexpr std::uint64_t kDefaultSeed = 0x5EED;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace detail

// xoshiro256** with state derived from (seed, stream_id). Uniforms land in
// (0, 1], which keeps log() in the Box-Muller transform finite.
class GaussianStream {
 public:
  explicit GaussianStream(RngStream id) : id_(id) {
    std::uint64_t h = id.seed;
    h = detail::splitmix64(h);
    h ^= id.stream_id + 0x9E3779B97F4A7C15ULL;
    for (auto& word : s_) word = detail::splitmix64(h);
  }

  GaussianStream(std::uint64_t seed, std::uint64_t stream_id)
      : GaussianStream(RngStream{seed, stream_id}) {}

  RngStream id() const { return id_; }

  std::uint64_t next_u64() {
    std::uint64_t result = detail::rotl(s_[1] * 5, 7) * 9;
    std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = detail::rotl(s_[3], 45);
    return result;
  }

  double next_uniform() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  double next_normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1 = next_uniform();
    double u2 = next_uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(theta);
    have_cached_ = true;
    return r * std::cos(theta);
  }

  void fill_normal(std::span<double> out) {
    for (double& x : out) x = next_normal();
  }

 private:
  RngStream id_;
  std::uint64_t s_[4];
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace klmc
