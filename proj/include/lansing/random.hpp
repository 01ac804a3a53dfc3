#ifndef LANSING_RANDOM_HPP
#define LANSING_RANDOM_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace lansing {

/// SplitMix64 finaliser; used to derive independent replicate seeds.
[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of replicate `index` under global seed `seed`.
[[nodiscard]] constexpr std::uint64_t replicate_seed(std::uint64_t seed,
                                                     std::uint64_t index) noexcept {
  return splitmix64(splitmix64(seed) ^ (index + 1) * 0xd1b54a32d192ed03ULL);
}

/// Random source with explicitly specified variate transforms.
///
/// std::mt19937_64 is bit-exact across standard libraries but the std
/// distributions are not, so the uniform/exponential/normal transforms are
/// written out here. Identical seeds give identical streams everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0, 1].
  double uniform_pos() noexcept { return 1.0 - uniform(); }

  /// Exponential with the given rate.
  double exponential(double rate) noexcept { return -std::log(uniform_pos()) / rate; }

  /// Uniform index in [0, n).
  std::uint64_t index(std::uint64_t n) noexcept {
    // Lemire's nearly-divisionless method.
    unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(engine_()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Poisson variate by product of uniforms, in chunks of mean <= 16.
  std::uint64_t poisson(double mean) noexcept {
    std::uint64_t k = 0;
    while (mean > 0.0) {
      const double chunk = std::min(mean, 16.0);
      mean -= chunk;
      const double limit = std::exp(-chunk);
      double prod = uniform_pos();
      while (prod > limit) {
        ++k;
        prod *= uniform_pos();
      }
    }
    return k;
  }

  /// Standard normal (Marsaglia polar method, one value per call).
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u = 0.0, v = 0.0, s = 0.0;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  double normal(double mean, double sd) noexcept { return mean + sd * normal(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace lansing

#endif  // LANSING_RANDOM_HPP
