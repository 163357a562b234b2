#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>

namespace auctionflow {

// Philox4x32-10 (Salmon et al., SC'11). The 64-bit key is the user seed; the
// upper half of the 128-bit counter selects the stream and the lower half
// counts blocks within it. Any (seed, stream) pair can therefore be opened in
// O(1) without touching any other stream.
class Philox4x32 {
 public:
  using result_type = std::uint64_t;

  Philox4x32(std::uint64_t seed, std::uint64_t stream) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    if (used_ == 2) {
      refill();
    }
    const auto lo = static_cast<std::uint64_t>(block_[2 * used_]);
    const auto hi = static_cast<std::uint64_t>(block_[2 * used_ + 1]);
    ++used_;
    return (hi << 32) | lo;
  }

  /// Uniform on [0, 1) with 53 bits of mantissa.
  double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0, 1); safe as an argument to log().
  double uniform_open() noexcept {
    double u;
    do {
      u = uniform();
    } while (u == 0.0);
    return u;
  }

  std::uint64_t stream() const noexcept { return stream_; }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  void refill() noexcept {
    std::array<std::uint32_t, 4> ctr{
        static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
        static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
    std::array<std::uint32_t, 2> key = key_;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    block_ = ctr;
    ++counter_;
    used_ = 0;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int used_ = 2;
};

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Folds a path of identifiers (e.g. {purpose, cell, opportunity}) into a
/// single stream id. Distinct paths give distinct streams with overwhelming
/// probability; the same path always gives the same stream.
inline std::uint64_t stream_id(std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = 0x6A09E667F3BCC909ull;
  for (std::uint64_t part : path) {
    h = splitmix64(h ^ splitmix64(part));
  }
  return h;
}

inline Philox4x32 make_stream(std::uint64_t seed,
                              std::initializer_list<std::uint64_t> path) noexcept {
  return Philox4x32(seed, stream_id(path));
}

// Stream tags keep the purposes of different generators apart even when they
// share a seed.
namespace stream_tag {
inline constexpr std::uint64_t kPoisson = 1;
inline constexpr std::uint64_t kUser = 2;
inline constexpr std::uint64_t kSncp = 3;
inline constexpr std::uint64_t kLgcp = 4;
inline constexpr std::uint64_t kDiscreteLandscape = 5;
inline constexpr std::uint64_t kExpLandscape = 6;
inline constexpr std::uint64_t kAuction = 7;
inline constexpr std::uint64_t kReference = 8;
inline constexpr std::uint64_t kStrata = 9;
}  // namespace stream_tag

template <class Rng>
std::int64_t draw_poisson(Rng& rng, double mean) {
  if (!(mean > 0.0)) {
    return 0;
  }
  std::poisson_distribution<std::int64_t> dist(mean);
  return dist(rng);
}

template <class Rng>
double draw_gamma(Rng& rng, double shape, double scale) {
  std::gamma_distribution<double> dist(shape, scale);
  return dist(rng);
}

template <class Rng>
double draw_beta(Rng& rng, double a, double b) {
  const double x = draw_gamma(rng, a, 1.0);
  const double y = draw_gamma(rng, b, 1.0);
  return x / (x + y);
}

template <class Rng>
double draw_normal(Rng& rng, double mean, double sd) {
  std::normal_distribution<double> dist(mean, sd);
  return dist(rng);
}

template <class Rng>
double draw_exponential(Rng& rng, double rate) {
  return -std::log(rng.uniform_open()) / rate;
}

}  // namespace auctionflow
