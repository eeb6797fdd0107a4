#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace chronosurv {

// SplitMix64 generator; the algorithm is fixed here, so a seed means the
// same byte stream on every platform and standard library. Every stochastic
// component of the pipeline draws from an Rng derived from (seed, path...)
// so that patients/epochs/folds get independent, stable streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi], inclusive. Span is tiny relative to 2^64 in
  // every call site, so plain modulo is adequate.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1ull;
    return lo + static_cast<std::int64_t>(next_u64() % span);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Box-Muller without state caching: consumes exactly two draws per call,
  // which keeps stream accounting trivial.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Exponential with rate lambda.
  double exponential(double lambda) {
    const double u = 1.0 - uniform();
    return -std::log(u) / lambda;
  }

  // Derives an independent stream from a seed and a path of labels, e.g.
  // Rng::stream(seed, {fold, epoch, patient_idx, kTagSampling}).
  static Rng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = mix(seed ^ 0x6a09e667f3bcc909ull);
    for (std::uint64_t p : path) s = mix(s ^ mix(p + 0x9e3779b97f4a7c15ull));
    return Rng(s);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 33)) * 0xff51afd7ed558ccdull;
    z = (z ^ (z >> 33)) * 0xc4ceb9fe1a85ec53ull;
    return z ^ (z >> 33);
  }

  std::uint64_t state_;
};

// Stream tags, so call sites cannot collide by accident.
namespace rngtag {
inline constexpr std::uint64_t kCohortGeometry = 0x01;
inline constexpr std::uint64_t kCohortSurvival = 0x02;
inline constexpr std::uint64_t kFoldSplit = 0x03;
inline constexpr std::uint64_t kParamInit = 0x04;
inline constexpr std::uint64_t kEpochSampling = 0x05;
inline constexpr std::uint64_t kEpochShuffle = 0x06;
inline constexpr std::uint64_t kAugmentation = 0x07;
inline constexpr std::uint64_t kValidationSampling = 0x08;
}  // namespace rngtag

}  // namespace chronosurv
