#ifndef LANSING_DEMOGRAPHY_HPP
#define LANSING_DEMOGRAPHY_HPP

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "lansing/errors.hpp"
#include "lansing/numerics.hpp"
#include "lansing/trait.hpp"

namespace lansing::demography {

using Vec2 = std::array<double, 2>;

/// Below this span the growth rate is reported as -infinity.
inline constexpr double kSentinelSpan = 0.1;

/// Largest representable growth rate: lambda < 1 always holds.
inline constexpr double kLambdaCeiling = 1.0 - 0x1.0p-53;

/// Result of the growth-rate root solve.
struct GrowthRate {
  double lambda = 0.0;
  bool below_floor = false;  ///< span < kSentinelSpan, lambda set to -inf
};

/// Residual \int_0^tau e^{-lambda a} da - 1 of the Euler-Lotka equation.
[[nodiscard]] inline double lotka_residual(double lambda, double tau) noexcept {
  return numerics::exp_integral(lambda, tau) - 1.0;
}

/// Solves \int_0^tau e^{-lambda a} da = 1 for lambda.
///
/// Safeguarded Newton inside a sign-change bracket. `hint` (if finite) seeds
/// Newton; the TSS and drift code call this with the parent trait's lambda.
[[nodiscard]] inline GrowthRate growth_rate(double tau,
                                            double hint = std::numeric_limits<double>::quiet_NaN()) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw DomainError("growth_rate: span min(xb,xd) must be positive and finite");
  }
  if (tau < kSentinelSpan) return {-std::numeric_limits<double>::infinity(), true};
  if (tau == 1.0) return {0.0, false};

  // g is strictly decreasing in lambda (g' = -G < 0).
  double hi = kLambdaCeiling;
  if (lotka_residual(hi, tau) >= 0.0) return {hi, false};
  double lo = -10.0;
  while (lotka_residual(lo, tau) <= 0.0) lo *= 2.0;

  double x = (std::isfinite(hint) && hint > lo && hint < hi) ? hint : 0.5 * (lo + hi);
  if (tau > 1.0 && !(x > 0.0)) x = 0.5 * hi;
  for (int iter = 0; iter < 200; ++iter) {
    const double g = lotka_residual(x, tau);
    if (g == 0.0) break;
    if (g > 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    const double dg = -numerics::exp_moment1(x, tau);
    double next = x - g / dg;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - x);
    x = next;
    if (step <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x))) break;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x))) break;
  }
  return {x, false};
}

/// Malthusian parameter of a trait; -inf for spans below kSentinelSpan.
[[nodiscard]] inline double malthusian(const LifeTrait& x) {
  validate(x);
  return growth_rate(x.tau()).lambda;
}

/// Mean generation time G = \int_0^tau a e^{-lambda a} da.
[[nodiscard]] inline double generation_time(const LifeTrait& x, double lambda) {
  validate(x);
  return numerics::exp_moment1(lambda, x.tau());
}

/// Gradient of lambda; defined on U1 (first component) and U2 (second).
[[nodiscard]] inline Vec2 fitness_gradient(const LifeTrait& x,
                                           double diagonal_tol = kDiagonalTolerance) {
  const TraitRegion region = classify(x, diagonal_tol);
  if (region != TraitRegion::U1 && region != TraitRegion::U2) {
    throw RegionError("fitness_gradient: lambda is not differentiable at (" +
                      std::to_string(x.xb) + ", " + std::to_string(x.xd) + "), region " +
                      std::string(to_string(region)));
  }
  const double tau = x.tau();
  const double lambda = growth_rate(tau).lambda;
  const double g = std::exp(-lambda * tau) / numerics::exp_moment1(lambda, tau);
  return region == TraitRegion::U1 ? Vec2{g, 0.0} : Vec2{0.0, g};
}

/// Entries of the characteristic matrix F(z); F12 is identically zero.
struct CharMatrix {
  double f11 = 0.0;
  double f21 = 0.0;
  double f22 = 0.0;
};

[[nodiscard]] inline CharMatrix char_matrix_entries(const LifeTrait& x, double z) {
  validate(x);
  CharMatrix m;
  m.f11 = numerics::exp_integral(z, x.tau());
  m.f22 = numerics::exp_integral(1.0 + z, x.xb);
  // \int_{xd}^{xb} e^{-z a - (a - xd)} da
  m.f21 = x.xd < x.xb ? std::exp(-z * x.xd) * numerics::exp_integral(1.0 + z, x.xb - x.xd) : 0.0;
  return m;
}

/// Principal eigenfunction of the linear age-structured dynamics, scaled so
/// that N1(0) = 1.
struct StableAgeDistribution {
  LifeTrait trait;
  double lambda = 0.0;
  double n2_coeff = 0.0;  ///< N2(a) = n2_coeff * e^{-(1+lambda) a}

  [[nodiscard]] double n1(double a) const noexcept {
    return std::exp(-(lambda * a + std::max(a - trait.xd, 0.0)));
  }
  [[nodiscard]] double n2(double a) const noexcept {
    return n2_coeff * std::exp(-(1.0 + lambda) * a);
  }
  /// \int_0^\infty N1.
  [[nodiscard]] double n1_mass() const noexcept {
    return numerics::exp_integral(lambda, trait.xd) + std::exp(-lambda * trait.xd) / (1.0 + lambda);
  }
  /// \int_0^\infty N2.
  [[nodiscard]] double n2_mass() const noexcept { return n2_coeff / (1.0 + lambda); }
};

[[nodiscard]] inline StableAgeDistribution stable_age_distribution(const LifeTrait& x) {
  require_viable(x, "stable_age_distribution");
  const double lambda = growth_rate(x.tau()).lambda;
  const CharMatrix f = char_matrix_entries(x, lambda);
  return {x, lambda, f.f21 / (1.0 - f.f22)};
}

/// Interaction coefficients of the limiting mass ODE. a11 = lambda and
/// a12 = 0 hold identically and are returned for checking.
struct InteractionCoeffs {
  double a11 = 0.0;
  double a12 = 0.0;
  double a21 = 0.0;
  double a22 = 0.0;
};

[[nodiscard]] inline InteractionCoeffs interaction_coeffs(const LifeTrait& x) {
  const StableAgeDistribution n = stable_age_distribution(x);
  const double lambda = n.lambda;
  const double u1 = n.n1_mass();
  const CharMatrix f = char_matrix_entries(x, lambda);
  InteractionCoeffs c;
  // a11: (births below tau minus deaths above xd) weighted by N1 / |N1|.
  const double births = numerics::exp_integral(lambda, x.tau());
  const double deaths = std::exp(-lambda * x.xd) / (1.0 + lambda);
  c.a11 = (births - deaths) / u1;
  c.a12 = 0.0;
  // \int_{xd}^{xb} N1 equals F21(lambda).
  c.a21 = f.f21 / u1;
  // \int_0^{xb} N2 / \int N2 - 1 = (1+lambda) F22 - 1 = -e^{-(1+lambda) xb}.
  c.a22 = -std::exp(-(1.0 + lambda) * x.xb);
  return c;
}

/// Derived analytics of a viable trait at demographic equilibrium.
struct DemographicProfile {
  LifeTrait trait;
  TraitRegion region = TraitRegion::NonViable;
  double eta = 0.0;
  double lambda = 0.0;
  std::optional<Vec2> grad_lambda;
  double gen_time_G = 0.0;
  double F11 = 0.0, F21 = 0.0, F22 = 0.0;
  double a21 = 0.0, a22 = 0.0;
  double rho1 = 0.0, rho2 = 0.0;
  double n1_at_0 = 0.0, n2_at_0 = 0.0;
  double N2_coeff = 0.0;

  [[nodiscard]] double total_mass() const noexcept { return rho1 + rho2; }
};

[[nodiscard]] inline DemographicProfile equilibrium(const LifeTrait& x, double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw DomainError("equilibrium: eta must be > 0");
  const TraitRegion region = classify(x);
  require_viable(x, "equilibrium");

  DemographicProfile p;
  p.trait = x;
  p.region = region;
  p.eta = eta;
  const StableAgeDistribution sad = stable_age_distribution(x);
  p.lambda = sad.lambda;
  if (region == TraitRegion::U1 || region == TraitRegion::U2) p.grad_lambda = fitness_gradient(x);
  p.gen_time_G = generation_time(x, p.lambda);
  const CharMatrix f = char_matrix_entries(x, p.lambda);
  p.F11 = f.f11;
  p.F21 = f.f21;
  p.F22 = f.f22;
  const InteractionCoeffs a = interaction_coeffs(x);
  p.a21 = a.a21;
  p.a22 = a.a22;

  const double ratio = a.a21 / (p.lambda - a.a22);
  p.rho1 = (p.lambda / eta) / (1.0 + ratio);
  p.rho2 = p.rho1 * ratio;

  p.N2_coeff = sad.n2_coeff;
  const double u1 = sad.n1_mass();
  const double u2 = 1.0 / (1.0 + p.lambda);
  p.n1_at_0 = (p.lambda / eta) / (u1 + u2 * sad.n2_coeff);
  p.n2_at_0 = p.n1_at_0 * sad.n2_coeff;
  return p;
}

/// Equilibrium birth density n1(0) alone (hot path of the TSS).
[[nodiscard]] inline double equilibrium_birth_density(const LifeTrait& x, double lambda,
                                                      double eta) {
  const double u1 = numerics::exp_integral(lambda, x.xd) + std::exp(-lambda * x.xd) / (1.0 + lambda);
  const double u2 = 1.0 / (1.0 + lambda);
  const CharMatrix f = char_matrix_entries(x, lambda);
  return (lambda / eta) / (u1 + u2 * f.f21 / (1.0 - f.f22));
}

/// Growth rate of an arbitrary trait, -inf when it cannot reproduce at all.
[[nodiscard]] inline double invader_growth_rate(const LifeTrait& y) {
  validate(y);
  if (y.tau() <= 0.0) return -std::numeric_limits<double>::infinity();
  return growth_rate(y.tau()).lambda;
}

/// Invasion fitness (lambda(y) - lambda(x)) v 0 of a rare mutant y in a
/// resident population x at equilibrium.
[[nodiscard]] inline double invasion_fitness(const LifeTrait& invader, const LifeTrait& resident) {
  require_viable(resident, "invasion_fitness");
  const double ly = invader_growth_rate(invader);
  const double lx = growth_rate(resident.tau()).lambda;
  return std::max(ly - lx, 0.0);
}

[[nodiscard]] inline bool can_invade(const LifeTrait& invader, const LifeTrait& resident) {
  require_viable(resident, "can_invade");
  validate(invader);
  return invader.tau() > resident.tau();
}

}  // namespace lansing::demography

#endif  // LANSING_DEMOGRAPHY_HPP
