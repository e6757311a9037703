#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace qmf {

/// Philox4x32-10 block function (Salmon et al., Random123).
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t m0 = 0xD2511F53u, m1 = 0xCD9E8D57u;
  constexpr std::uint32_t w0 = 0x9E3779B9u, w1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += w0;
      key[1] += w1;
    }
    const std::uint64_t p0 = std::uint64_t{m0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{m1} * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
           static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
           static_cast<std::uint32_t>(p0)};
  }
  return ctr;
}

/// Experiment tags used to derive independent streams.
enum class Experiment : std::uint32_t {
  moment = 1,
  spectrum = 2,
  rank_scan = 3,
  chgue = 4,
  kron = 5,
  test = 99,
};

/// Counter-based stream keyed by the seed; the counter words carry
/// (block, vertex, sample, experiment), so every (experiment, sample, vertex)
/// triple gets its own reproducible sequence. Satisfies
/// UniformRandomBitGenerator.
class PhiloxStream {
 public:
  using result_type = std::uint32_t;

  PhiloxStream(std::uint64_t seed, Experiment experiment, std::uint32_t sample = 0,
               std::uint32_t vertex = 0)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        ctr_{0, vertex, sample, static_cast<std::uint32_t>(experiment)} {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (pos_ == 4) refill();
    return block_[pos_++];
  }

  /// Uniform double in the open interval (0, 1), 53 random bits.
  double uniform() {
    const std::uint64_t a = (*this)() >> 5, b = (*this)() >> 6;
    return (static_cast<double>(a * 67108864u + b) + 0.5) * 0x1p-53;
  }

  /// Complex Gaussian with density exp(-|z|^2)/pi: each component has
  /// variance 1/2. Box-Muller.
  std::complex<double> gaussian() {
    const double r = std::sqrt(-std::log(uniform()));
    const double theta = 2.0 * std::numbers::pi * uniform();
    return {r * std::cos(theta), r * std::sin(theta)};
  }

 private:
  void refill() {
    block_ = philox4x32(ctr_, key_);
    if (++ctr_[0] == 0) throw std::overflow_error("Philox stream exhausted");
    pos_ = 0;
  }

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> ctr_;
  std::array<std::uint32_t, 4> block_{};
  int pos_ = 4;
};

}  // namespace qmf
