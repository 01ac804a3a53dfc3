#ifndef LANSING_KERNEL_HPP
#define LANSING_KERNEL_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "lansing/errors.hpp"
#include "lansing/random.hpp"

namespace lansing {

/// Mutational kernel: Gaussian shape e^{-v^2/sigma^2} (standard deviation
/// sigma/sqrt(2)) truncated so that u + v stays in [max(0, u-1), u+1].
/// Sampled by rejection from the untruncated Gaussian.
[[nodiscard]] inline double draw_mutation(double u, double sigma, Rng& rng) {
  if (!(u >= 0.0)) throw DomainError("draw_mutation: trait value must be >= 0");
  if (!(sigma > 0.0)) throw DomainError("draw_mutation: sigma must be > 0");
  const double sd = sigma / std::numbers::sqrt2;
  const double lo = std::max(0.0, u - 1.0);
  const double hi = u + 1.0;
  for (;;) {
    const double y = u + sd * rng.normal();
    if (y >= lo && y <= hi) return y;
  }
}

/// Mutation as done by the reference simulation script: add N(0, sigma^2)
/// noise, redrawing until the result is nonnegative.
[[nodiscard]] inline double draw_mutation_script(double u, double sigma, Rng& rng) {
  for (;;) {
    const double y = u + sigma * rng.normal();
    if (y >= 0.0) return y;
  }
}

/// The symmetric kernel k(h) on [-1, 1] that the mutational kernel reduces
/// to away from the boundary, with the moments needed by the canonical drift.
class SymmetricKernel {
 public:
  explicit SymmetricKernel(double sigma) : sigma_(sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
      throw DomainError("SymmetricKernel: sigma must be positive and finite");
    }
    norm_ = sigma_ * std::sqrt(std::numbers::pi) * std::erf(1.0 / sigma_);
  }

  [[nodiscard]] double sigma() const noexcept { return sigma_; }

  [[nodiscard]] double density(double h) const noexcept {
    if (h < -1.0 || h > 1.0) return 0.0;
    return std::exp(-h * h / (sigma_ * sigma_)) / norm_;
  }

  /// Draw from k on [-1, 1].
  double sample(Rng& rng) const {
    const double sd = sigma_ / std::numbers::sqrt2;
    for (;;) {
      const double h = sd * rng.normal();
      if (h >= -1.0 && h <= 1.0) return h;
    }
  }

  /// Draw from k conditioned on h >= 0 (reflection; k is symmetric).
  double sample_positive(Rng& rng) const { return std::abs(sample(rng)); }

  /// \int_0^u h k(h) dh for u in [0, 1].
  [[nodiscard]] double first_moment_to(double u) const noexcept {
    const double s2 = sigma_ * sigma_;
    return 0.5 * s2 * (-std::expm1(-u * u / s2)) / norm_;
  }

  /// \int_0^u h^2 k(h) dh for u in [0, 1].
  [[nodiscard]] double second_moment_to(double u) const noexcept {
    const double s2 = sigma_ * sigma_;
    const double gauss = 0.5 * sigma_ * std::sqrt(std::numbers::pi) * std::erf(u / sigma_);
    return 0.5 * s2 * (gauss - u * std::exp(-u * u / s2)) / norm_;
  }

  /// \int_0^u h^2 k + u \int_u^1 h k, the kernel factor of the canonical drift.
  /// Strictly increasing on [0, 1], zero at u = 0.
  [[nodiscard]] double drift_factor(double u) const noexcept {
    const double upper = first_moment_to(1.0) - first_moment_to(u);
    return second_moment_to(u) + u * upper;
  }

 private:
  double sigma_;
  double norm_;
};

}  // namespace lansing

#endif  // LANSING_KERNEL_HPP
