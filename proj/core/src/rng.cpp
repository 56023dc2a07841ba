#include "kroncov/rng.hpp"

#include <cmath>

#include "kroncov/errors.hpp"

namespace kroncov {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

namespace {

std::uint64_t combine(std::uint64_t key, std::uint64_t id) {
  return mix64(mix64(key) ^ (id * 0x9E3779B97F4A7C15ULL + 0xBF58476D1CE4E5B9ULL));
}

// 256-layer ziggurat for the standard normal (Doornik-style rejection,
// which avoids the index/mantissa correlation of the original sampler).
constexpr int kZigLayers = 256;
constexpr double kZigR = 3.6541528853610088;
constexpr double kZigV = 0.00492867323399;

struct ZigTables {
  double x[kZigLayers + 1];
  double ratio[kZigLayers];
  ZigTables() {
    const double f = std::exp(-0.5 * kZigR * kZigR);
    x[0] = kZigV / f;  // pseudo-width of the base strip
    x[1] = kZigR;
    x[kZigLayers] = 0.0;
    for (int i = 2; i < kZigLayers; ++i) {
      x[i] = std::sqrt(-2.0 * std::log(kZigV / x[i - 1] +
                                       std::exp(-0.5 * x[i - 1] * x[i - 1])));
    }
    for (int i = 0; i < kZigLayers; ++i) ratio[i] = x[i + 1] / x[i];
  }
};

const ZigTables kZig;  // load-time init: no per-call guard

// Register-resident sampling core. RngStream copies its state in, runs a
// batch, and copies the state back, so the xoshiro words never round-trip
// through memory inside hot loops.
struct Engine {
  std::uint64_t s0, s1, s2, s3;

  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t next() {
    const std::uint64_t result = rotl(s0 + s3, 23) + s0;
    const std::uint64_t t = s1 << 17;
    s2 ^= s0;
    s3 ^= s1;
    s1 ^= s2;
    s0 ^= s3;
    s2 ^= t;
    s3 = rotl(s3, 45);
    return result;
  }
  double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double u01_open() {
    return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
  }

  double normal() {
    for (;;) {
      const std::uint64_t bits = next();
      const int i = static_cast<int>(bits & 0xFF);
      const double u =
          2.0 * (static_cast<double>(bits >> 11) * 0x1.0p-53) - 1.0;
      if (std::fabs(u) < kZig.ratio[i]) return u * kZig.x[i];
      if (i == 0) {
        // tail beyond R (Marsaglia's tail algorithm)
        double xx, yy;
        do {
          xx = std::log(u01_open()) / kZigR;
          yy = std::log(u01_open());
        } while (-2.0 * yy < xx * xx);
        return u < 0 ? xx - kZigR : kZigR - xx;
      }
      const double val = u * kZig.x[i];
      const double f0 = std::exp(-0.5 * (kZig.x[i] * kZig.x[i] - val * val));
      const double f1 =
          std::exp(-0.5 * (kZig.x[i + 1] * kZig.x[i + 1] - val * val));
      if (f1 + u01() * (f0 - f1) < 1.0) return val;
    }
  }

  // Marsaglia-Tsang core for shape >= 1 with (d, c) hoisted by the caller.
  double gamma_core(double d, double c) {
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = u01_open();
      const double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double gamma(double shape) {
    if (shape < 1.0) {
      const double boost = std::pow(u01_open(), 1.0 / shape);
      const double d = shape + 1.0 - 1.0 / 3.0;
      return gamma_core(d, 1.0 / std::sqrt(9.0 * d)) * boost;
    }
    const double d = shape - 1.0 / 3.0;
    return gamma_core(d, 1.0 / std::sqrt(9.0 * d));
  }
};

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed,
                          std::initializer_list<std::uint64_t> path) {
  std::uint64_t key = mix64(seed ^ 0x6A09E667F3BCC909ULL);
  for (std::uint64_t id : path) key = combine(key, id);
  return key;
}

void RngStream::reseed(std::uint64_t seed,
                       std::initializer_list<std::uint64_t> path) {
  key_ = mix64(seed ^ 0x6A09E667F3BCC909ULL);
  for (std::uint64_t id : path) key_ = combine(key_, id);
  std::uint64_t sm = key_;
  for (auto& word : s_) {
    sm += 0x9E3779B97F4A7C15ULL;
    word = mix64(sm);
  }
  if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
}

RngStream RngStream::derive(std::initializer_list<std::uint64_t> path) const {
  RngStream child;
  child.key_ = key_;
  for (std::uint64_t id : path) child.key_ = combine(child.key_, id);
  std::uint64_t sm = child.key_;
  for (auto& word : child.s_) {
    sm += 0x9E3779B97F4A7C15ULL;
    word = mix64(sm);
  }
  if ((child.s_[0] | child.s_[1] | child.s_[2] | child.s_[3]) == 0)
    child.s_[0] = 1;
  return child;
}

#define KRONCOV_WITH_ENGINE(body)                  \
  Engine e{s_[0], s_[1], s_[2], s_[3]};            \
  body;                                            \
  s_[0] = e.s0;                                    \
  s_[1] = e.s1;                                    \
  s_[2] = e.s2;                                    \
  s_[3] = e.s3

double RngStream::normal() {
  KRONCOV_WITH_ENGINE(const double v = e.normal());
  return v;
}

double RngStream::gamma(double shape) {
  if (!(shape > 0)) throw ConfigError("gamma: shape must be positive");
  KRONCOV_WITH_ENGINE(const double v = e.gamma(shape));
  return v;
}

double RngStream::beta_symmetric(double a) {
  if (!(a > 0)) throw ConfigError("beta_symmetric: a must be positive");
  KRONCOV_WITH_ENGINE(const double z = e.normal(); const double g = e.gamma(a);
                      const double t = z * std::sqrt(a / g);
                      const double v =
                          std::isfinite(t)
                              ? 0.5 + t / (2.0 * std::sqrt(2.0 * a + t * t))
                              : (z >= 0 ? 1.0 : 0.0));
  return v;
}

double RngStream::student_t(double df) {
  KRONCOV_WITH_ENGINE(const double z = e.normal();
                      const double chi2 = 2.0 * e.gamma(0.5 * df);
                      const double v = z * std::sqrt(df / chi2));
  return v;
}

void RngStream::fill_normal(std::span<double> out) {
  KRONCOV_WITH_ENGINE(for (double& v : out) v = e.normal());
}

void RngStream::fill_rademacher(std::span<double> out) {
  KRONCOV_WITH_ENGINE({
    std::size_t i = 0;
    while (i + 64 <= out.size()) {
      std::uint64_t bits = e.next();
      for (int j = 0; j < 64; ++j, ++i) {
        out[i] = (bits & 1) ? 1.0 : -1.0;
        bits >>= 1;
      }
    }
    if (i < out.size()) {
      std::uint64_t bits = e.next();
      for (; i < out.size(); ++i) {
        out[i] = (bits & 1) ? 1.0 : -1.0;
        bits >>= 1;
      }
    }
  });
}

void fill_pearson(RngStream& rng, double nu4, std::span<double> out) {
  if (nu4 < 1.0) throw ConfigError("pearson variates require nu4 >= 1");
  if (nu4 < 1.0 + 1e-12) {
    rng.fill_rademacher(out);
  } else if (std::fabs(nu4 - 3.0) < 1e-12) {
    rng.fill_normal(out);
  } else if (nu4 > 3.0) {
    // Pearson VII: Student-t with df matched to the kurtosis, unit variance:
    // x = z sqrt((df-2) / (2 gamma(df/2))).
    const double df = 4.0 + 6.0 / (nu4 - 3.0);
    const double shape = 0.5 * df;
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    const double num = 0.5 * (df - 2.0);
    Engine e{rng.s_[0], rng.s_[1], rng.s_[2], rng.s_[3]};
    for (double& v : out)
      v = e.normal() * std::sqrt(num / e.gamma_core(d, c));
    rng.s_ = {e.s0, e.s1, e.s2, e.s3};
  } else {
    // Pearson II: symmetric Beta(a,a) with kurt = 3(1+2a)/(3+2a) solved for
    // a, drawn through the t identity X = 1/2 + T/(2 sqrt(2a + T^2)) with
    // T ~ t_{2a}, so each draw costs one normal and one gamma.
    const double a = 3.0 * (nu4 - 1.0) / (2.0 * (3.0 - nu4));
    const double scale = 2.0 * std::sqrt(2.0 * a + 1.0);
    const double d = (a >= 1.0 ? a : a + 1.0) - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    const double inv_a = 1.0 / a;
    const bool boosted = a < 1.0;
    Engine e{rng.s_[0], rng.s_[1], rng.s_[2], rng.s_[3]};
    for (double& v : out) {
      const double z = e.normal();
      double g = e.gamma_core(d, c);
      if (boosted) g *= std::pow(e.u01_open(), inv_a);
      const double t = z * std::sqrt(a / g);
      // gamma underflow at tiny a sends |t| to infinity: the beta boundary
      v = std::isfinite(t) ? scale * t / (2.0 * std::sqrt(2.0 * a + t * t))
                           : (z >= 0 ? 0.5 : -0.5) * scale;
    }
    rng.s_ = {e.s0, e.s1, e.s2, e.s3};
  }
}

#undef KRONCOV_WITH_ENGINE

}  // namespace kroncov
