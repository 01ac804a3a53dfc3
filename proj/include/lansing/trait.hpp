#ifndef LANSING_TRAIT_HPP
#define LANSING_TRAIT_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

#include "lansing/errors.hpp"

namespace lansing {

/// Life-history trait: end of the reproduction span (xb) and end of the
/// mortality-free span (xd), both in time units.
struct LifeTrait {
  double xb = 0.0;
  double xd = 0.0;

  /// Fertile-and-safe span min(xb, xd).
  [[nodiscard]] constexpr double tau() const noexcept { return std::min(xb, xd); }

  friend constexpr bool operator==(const LifeTrait&, const LifeTrait&) = default;
};

enum class TraitRegion { NonViable, U1, U2, Diagonal };

/// Default half-width of the band treated as the diagonal xb == xd.
inline constexpr double kDiagonalTolerance = 1e-12;

inline void validate(const LifeTrait& x) {
  if (!std::isfinite(x.xb) || !std::isfinite(x.xd) || x.xb < 0.0 || x.xd < 0.0) {
    throw DomainError("trait components must be finite and nonnegative, got (" +
                      std::to_string(x.xb) + ", " + std::to_string(x.xd) + ")");
  }
}

[[nodiscard]] inline TraitRegion classify(const LifeTrait& x,
                                          double diagonal_tol = kDiagonalTolerance) {
  validate(x);
  if (x.tau() <= 1.0) return TraitRegion::NonViable;
  if (std::abs(x.xb - x.xd) <= diagonal_tol) return TraitRegion::Diagonal;
  return x.xb < x.xd ? TraitRegion::U1 : TraitRegion::U2;
}

[[nodiscard]] inline bool is_viable(const LifeTrait& x) {
  return classify(x) != TraitRegion::NonViable;
}

[[nodiscard]] constexpr std::string_view to_string(TraitRegion r) noexcept {
  switch (r) {
    case TraitRegion::NonViable: return "NonViable";
    case TraitRegion::U1: return "U1";
    case TraitRegion::U2: return "U2";
    case TraitRegion::Diagonal: return "Diagonal";
  }
  return "NonViable";
}

inline void require_viable(const LifeTrait& x, std::string_view op) {
  if (classify(x) == TraitRegion::NonViable) {
    throw RegionError(std::string(op) + ": trait (" + std::to_string(x.xb) + ", " +
                      std::to_string(x.xd) + ") is not viable (min(xb,xd) <= 1)");
  }
}

}  // namespace lansing

#endif  // LANSING_TRAIT_HPP
