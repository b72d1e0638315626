#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>

#include "smpp/common.hpp"

namespace smpp {

// Reproducible random stream. A root seed plus a stream counter select an
// independent substream (one per chain); identical (seed, stream_id) give a
// bit-identical draw sequence. All variate transforms below are written
// against the raw engine so draws do not depend on the standard library's
// unspecified distribution algorithms.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed, std::uint64_t stream_id = 0)
      : seed_(seed), stream_id_(stream_id), engine_(mix(seed, stream_id)) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  // Substream derived from this rng's root seed.
  SeededRng substream(std::uint64_t stream_id) const { return SeededRng(seed_, stream_id); }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on the open interval (0,1).
  double uniform() {
    // 53-bit mantissa; reject exact zero so the interval stays open.
    for (;;) {
      const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
      if (u > 0.0) return u;
    }
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  // splitmix64 finalizer over seed and stream, used to decorrelate substreams.
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t x = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBull;
    x ^= x >> 31;
    return x ^ seed;
  }

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
};

inline double draw_normal(SeededRng& rng, double mean = 0.0, double sd = 1.0) {
  if (!(sd > 0.0)) throw std::domain_error("draw_normal: sd must be > 0");
  // Box-Muller, one variate per call; keeps the draw count deterministic.
  const double u1 = rng.uniform();
  const double u2 = rng.uniform();
  return mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Gamma(shape, rate); Marsaglia-Tsang squeeze for shape >= 1, with the
// standard power boost for shape < 1.
inline double draw_gamma(SeededRng& rng, double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0)) throw std::domain_error("draw_gamma: invalid parameters");
  if (shape < 1.0) {
    const double u = rng.uniform();
    return draw_gamma(rng, shape + 1.0, rate) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = draw_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

// Beta(a,b). The one-sided shapes a==1 or b==1 admit exact inverse-CDF
// draws, which behave better than the two-gamma ratio when the other
// shape is close to zero (e.g. Beta(1, 1-rho) for rho near 1).
inline double draw_beta(SeededRng& rng, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::domain_error("draw_beta: invalid parameters");
  if (a == 1.0 && b == 1.0) return rng.uniform();
  if (a == 1.0) return 1.0 - std::exp(std::log(rng.uniform()) / b);
  if (b == 1.0) return std::exp(std::log(rng.uniform()) / a);
  const double x = draw_gamma(rng, a, 1.0);
  const double y = draw_gamma(rng, b, 1.0);
  return x / (x + y);
}

namespace detail {

// Hormann's PTRS transformed-rejection sampler, exact for large means.
inline long draw_poisson_ptrs(SeededRng& rng, double lambda) {
  const double slam = std::sqrt(lambda);
  const double loglam = std::log(lambda);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform();
    const double us = 0.5 - std::abs(u);
    const long k = static_cast<long>(std::floor((2.0 * a / us + b) * u + lambda + 0.43));
    if (us >= 0.07 && v <= vr) return k;
    if (k < 0 || (us < 0.013 && v > us)) continue;
    if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
        k * loglam - lambda - std::lgamma(static_cast<double>(k) + 1.0)) {
      return k;
    }
  }
}

}  // namespace detail

inline long draw_poisson(SeededRng& rng, double lambda) {
  if (lambda < 0.0 || !std::isfinite(lambda)) throw std::domain_error("draw_poisson: invalid rate");
  if (lambda == 0.0) return 0;
  if (lambda > 30.0) return detail::draw_poisson_ptrs(rng, lambda);
  // Knuth product-of-uniforms, fine for small means.
  const double limit = std::exp(-lambda);
  long k = 0;
  double prod = rng.uniform();
  while (prod > limit) {
    ++k;
    prod *= rng.uniform();
  }
  return k;
}

// Index draw proportional to the given nonnegative weights.
inline std::size_t draw_categorical(SeededRng& rng, std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0 || !std::isfinite(w)) throw std::domain_error("draw_categorical: negative or non-finite weight");
    total += w;
  }
  if (!(total > 0.0)) throw std::domain_error("draw_categorical: weights sum to zero");
  const double target = rng.uniform() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
    acc += weights[i];
    if (target <= acc) return i;
  }
  return weights.size() - 1;
}

}  // namespace smpp
