#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <span>

namespace kroncov {

/// Deterministic pseudo-random stream (xoshiro256++ state seeded via
/// splitmix64). Streams are cheap values; derive one per logical role with
/// RngStream::derive so parallel consumers never share state.
///
/// Stream derivation rule: a stream is addressed by a master seed plus a
/// path of 64-bit ids, e.g. {replication, t, role}. Identical (seed, path)
/// always yields the identical sequence, independent of thread schedule.
class RngStream {
public:
  RngStream() : RngStream(0) {}
  explicit RngStream(std::uint64_t seed) { reseed(seed, {}); }
  RngStream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    reseed(seed, path);
  }

  void reseed(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

  /// Child stream addressed by appending `path` to this stream's address.
  RngStream derive(std::initializer_list<std::uint64_t> path) const;

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform on [0,1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform on (0,1]; safe as a log() argument.
  double uniform01_open() {
    return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal draw (256-layer ziggurat).
  double normal();

  /// +1 or -1 with probability 1/2 each.
  double rademacher() { return (next() >> 63) ? 1.0 : -1.0; }

  /// Gamma(shape, 1), shape > 0 (Marsaglia-Tsang, with the shape<1 boost).
  double gamma(double shape);

  /// Symmetric Beta(a, a) on (0,1).
  double beta_symmetric(double a);

  /// Student-t with `df` degrees of freedom.
  double student_t(double df);

  void fill_normal(std::span<double> out);
  void fill_rademacher(std::span<double> out);

private:
  friend void fill_pearson(RngStream&, double, std::span<double>);
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::array<std::uint64_t, 4> s_{};
  std::uint64_t key_ = 0;  // address of this stream, for derive()
};

/// splitmix64 mix step; also used for hash-combining stream addresses.
std::uint64_t mix64(std::uint64_t x);

/// Seed for a child consumer, derived by the same address-chaining rule as
/// RngStream::derive: deterministic in (seed, path) and collision-resistant
/// across paths.
std::uint64_t derive_seed(std::uint64_t seed,
                          std::initializer_list<std::uint64_t> path);

/// Entry-law draws with moments (0, 1, 0, nu4) from the Pearson system:
/// nu4 == 1 Rademacher, 1 < nu4 < 3 rescaled symmetric Beta (Pearson II),
/// nu4 == 3 Gaussian, nu4 > 3 rescaled Student-t (Pearson VII).
/// Throws ConfigError for nu4 < 1.
void fill_pearson(RngStream& rng, double nu4, std::span<double> out);

}  // namespace kroncov
