#ifndef LANSING_PDE_HPP
#define LANSING_PDE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "lansing/demography.hpp"
#include "lansing/errors.hpp"
#include "lansing/numerics.hpp"
#include "lansing/trait.hpp"

namespace lansing::pde {

/// Uniform age grid; cell i covers [i da, (i+1) da).
struct AgeGrid {
  double da = 0.01;
  std::size_t n_cells = 0;

  [[nodiscard]] double a_max() const noexcept { return da * static_cast<double>(n_cells); }
  [[nodiscard]] double lower(std::size_t i) const noexcept { return da * static_cast<double>(i); }
  [[nodiscard]] double center(std::size_t i) const noexcept {
    return da * (static_cast<double>(i) + 0.5);
  }

  [[nodiscard]] static AgeGrid make(double da, double a_max) {
    if (!(da > 0.0) || !(a_max > da)) throw DomainError("AgeGrid: need 0 < da < a_max");
    AgeGrid g;
    g.da = da;
    g.n_cells = static_cast<std::size_t>(std::ceil(a_max / da - 1e-9));
    return g;
  }

  friend bool operator==(const AgeGrid&, const AgeGrid&) = default;
};

/// Relative equilibrium mass beyond a_max must stay below this.
inline constexpr double kTailTolerance = 1e-10;

/// Equilibrium-profile mass of `x` beyond age `a`, relative to the total.
[[nodiscard]] inline double tail_fraction(const LifeTrait& x, double a) {
  if (!is_viable(x)) return 0.0;
  const auto s = demography::stable_age_distribution(x);
  const double l = s.lambda;
  const double total = s.n1_mass() + s.n2_mass();
  const double t1 = a <= x.xd ? numerics::exp_integral(l, x.xd - a) * std::exp(-l * a) +
                                    std::exp(-l * x.xd) / (1.0 + l)
                              : s.n1(a) / (1.0 + l);
  const double t2 = s.n2(a) / (1.0 + l);
  return (t1 + t2) / total;
}

/// Default grid: a_max = max(3 m, m + 25) with m the largest trait coordinate,
/// checked against the equilibrium tail.
[[nodiscard]] inline AgeGrid grid_for(const std::vector<LifeTrait>& traits, double da,
                                      double a_max = 0.0) {
  double m = 0.0;
  for (const auto& x : traits) m = std::max({m, x.xb, x.xd});
  if (a_max <= 0.0) a_max = std::max(3.0 * m, m + 25.0);
  if (a_max < 3.0 * m) throw DomainError("AgeGrid: a_max must be >= 3 max(xb, xd)");
  const AgeGrid g = AgeGrid::make(da, a_max);
  for (const auto& x : traits) {
    if (tail_fraction(x, g.a_max()) > kTailTolerance) {
      throw DomainError("AgeGrid: equilibrium tail beyond a_max exceeds tolerance");
    }
  }
  return g;
}

/// Component label: the trait and whether this is its Lansing companion
/// subpopulation (trait (xb, 0)).
struct ComponentLabel {
  LifeTrait trait;
  bool lansing = false;
};

/// Age densities (per unit age) for one or two traits, two components each:
/// [n1_x, n2_x (, n1_y, n2_y)].
struct DensityField {
  AgeGrid grid;
  std::vector<ComponentLabel> labels;
  std::vector<std::vector<double>> comps;

  [[nodiscard]] std::size_t size() const noexcept { return comps.size(); }
  [[nodiscard]] double mass(std::size_t k) const noexcept {
    double s = 0.0;
    for (double v : comps[k]) s += v;
    return s * grid.da;
  }
  [[nodiscard]] double total_mass() const noexcept {
    double s = 0.0;
    for (std::size_t k = 0; k < comps.size(); ++k) s += mass(k);
    return s;
  }
  void scale(double f) noexcept {
    for (auto& c : comps)
      for (double& v : c) v *= f;
  }
};

[[nodiscard]] inline DensityField zero_field(const AgeGrid& g, const std::vector<LifeTrait>& traits) {
  DensityField f;
  f.grid = g;
  for (const auto& x : traits) {
    f.labels.push_back({x, false});
    f.labels.push_back({x, true});
    f.comps.emplace_back(g.n_cells, 0.0);
    f.comps.emplace_back(g.n_cells, 0.0);
  }
  return f;
}

namespace detail {

[[nodiscard]] inline double overlap(double a0, double a1, double b0, double b1) noexcept {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

// \int_lo^hi e^{-c a} da.
[[nodiscard]] inline double exp_segment(double c, double lo, double hi) noexcept {
  if (hi <= lo) return 0.0;
  return std::exp(-c * lo) * numerics::exp_integral(c, hi - lo);
}

}  // namespace detail

/// Analytic stationary state n̄_x as cell averages on the grid (zero field
/// for non-viable traits).
[[nodiscard]] inline DensityField equilibrium_field(const LifeTrait& x, double eta,
                                                    const AgeGrid& g) {
  DensityField f = zero_field(g, {x});
  if (!is_viable(x)) return f;
  const auto p = demography::equilibrium(x, eta);
  const double l = p.lambda;
  for (std::size_t i = 0; i < g.n_cells; ++i) {
    const double lo = g.lower(i), hi = lo + g.da;
    // N1 = e^{-l a} below xd, e^{xd} e^{-(1+l) a} above.
    const double below = detail::exp_segment(l, lo, std::min(hi, x.xd));
    const double above = std::exp(x.xd) * detail::exp_segment(1.0 + l, std::max(lo, x.xd), hi);
    f.comps[0][i] = p.n1_at_0 * (below + above) / g.da;
    f.comps[1][i] = p.n2_at_0 * detail::exp_segment(1.0 + l, lo, hi) / g.da;
  }
  return f;
}

/// Normalised stable age distribution N_x as cell averages, total mass 1.
[[nodiscard]] inline DensityField stable_profile_field(const LifeTrait& x, const AgeGrid& g) {
  DensityField f = equilibrium_field(x, 1.0, g);
  const double m = f.total_mass();
  if (m > 0.0) f.scale(1.0 / m);
  return f;
}

/// L1 distance sum_k \int |f_k - g_k|.
[[nodiscard]] inline double l1_distance(const DensityField& a, const DensityField& b) {
  if (a.grid != b.grid || a.size() != b.size()) throw DimensionError("l1_distance: field mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    for (std::size_t i = 0; i < a.grid.n_cells; ++i) s += std::abs(a.comps[k][i] - b.comps[k][i]);
  return s * a.grid.da;
}

/// Renewal weights (fraction of each cell inside the birth support) with the
/// index range where they are nonzero.
struct BirthWeights {
  std::vector<double> w;
  std::size_t begin = 0, end = 0;

  BirthWeights(const AgeGrid& g, double lo, double hi) : w(g.n_cells, 0.0) {
    for (std::size_t i = 0; i < g.n_cells; ++i) {
      w[i] = std::max(0.0, std::min(g.lower(i) + g.da, hi) - std::max(g.lower(i), lo)) / g.da;
    }
    begin = g.n_cells;
    for (std::size_t i = 0; i < g.n_cells; ++i) {
      if (w[i] > 0.0) {
        begin = std::min(begin, i);
        end = i + 1;
      }
    }
    if (begin > end) begin = end;
  }
};

/// Grid-dependent coefficients of one trait's pair of components.
struct TraitCoeffs {
  LifeTrait trait;
  std::vector<double> surv1;  ///< cell i -> i+1, intrinsic death of component 1
  double surv2 = 0.0;         ///< same for component 2 (rate 1)
  BirthWeights w11, w21, w22;  ///< type-1 from 1; type-2 from 1 (Lansing); type-2 from 2
  double half1 = 0.0;         ///< newborn half-step intrinsic survival, component 1
  double half2 = 0.0;

  TraitCoeffs(const LifeTrait& x, const AgeGrid& g)
      : trait(x),
        surv1(g.n_cells),
        w11(g, 0.0, x.tau()),
        w21(g, x.xd, x.xd < x.xb ? x.xb : x.xd),
        w22(g, 0.0, x.xb) {
    const double da = g.da;
    const double big = 1e300;
    for (std::size_t i = 0; i < g.n_cells; ++i) {
      const double c0 = g.center(i), c1 = c0 + da;
      surv1[i] = std::exp(-detail::overlap(c0, c1, x.xd, big));
    }
    surv2 = std::exp(-da);
    half1 = std::exp(-detail::overlap(0.0, 0.5 * da, x.xd, big));
    half2 = std::exp(-0.5 * da);
  }
};

/// Explicit-competition stepper for one or more traits sharing the same
/// competition pool. dt = da: transport is an exact one-cell shift.
class Stepper {
 public:
  Stepper(const std::vector<LifeTrait>& traits, double eta, const AgeGrid& g)
      : grid_(g), eta_(eta) {
    if (!(eta >= 0.0) || !std::isfinite(eta)) throw DomainError("pde: eta must be >= 0");
    for (const auto& x : traits) {
      validate(x);
      coeffs_.emplace_back(x, g);
    }
  }

  [[nodiscard]] const AgeGrid& grid() const noexcept { return grid_; }
  [[nodiscard]] double eta() const noexcept { return eta_; }

  /// Advances `f` by one step of length da; returns the total mass used for
  /// competition (the mass at step start).
  double step(DensityField& f) const {
    check(f);
    const double da = grid_.da;
    const std::size_t n = grid_.n_cells;
    const double m = f.total_mass();
    const double comp = std::exp(-eta_ * m * da);
    const double comp_half = std::exp(-0.5 * eta_ * m * da);
    for (std::size_t t = 0; t < coeffs_.size(); ++t) {
      const TraitCoeffs& c = coeffs_[t];
      std::vector<double>& n1 = f.comps[2 * t];
      std::vector<double>& n2 = f.comps[2 * t + 1];
      const double r1_old = renewal(c.w11, n1, 0);
      const double r2_old = renewal(c.w21, n1, 0) + renewal(c.w22, n2, 0);
      for (std::size_t i = n - 1; i >= 1; --i) {
        n1[i] = n1[i - 1] * c.surv1[i - 1] * comp;
        n2[i] = n2[i - 1] * c.surv2 * comp;
      }
      const double r1_rest = renewal(c.w11, n1, 1);
      const double r2_rest = renewal(c.w21, n1, 1) + renewal(c.w22, n2, 1);
      // Time-centred renewal with the new cell-0 values implicit:
      // lower-triangular 2x2 system.
      const double h1 = c.half1 * comp_half, h2 = c.half2 * comp_half;
      const double n1_0 = h1 * 0.5 * (r1_old + r1_rest) / (1.0 - h1 * 0.5 * da * c.w11.w[0]);
      const double n2_0 = h2 * 0.5 * (r2_old + r2_rest + da * c.w21.w[0] * n1_0) /
                          (1.0 - h2 * 0.5 * da * c.w22.w[0]);
      n1[0] = n1_0;
      n2[0] = n2_0;
    }
    return m;
  }

 private:
  [[nodiscard]] double renewal(const BirthWeights& w, const std::vector<double>& v,
                               std::size_t from) const noexcept {
    double s = 0.0;
    for (std::size_t i = std::max(from, w.begin); i < w.end; ++i) s += w.w[i] * v[i];
    return s * grid_.da;
  }

  void check(const DensityField& f) const {
    if (f.grid != grid_) throw DimensionError("pde: field grid does not match stepper grid");
    if (f.size() != 2 * coeffs_.size()) {
      throw DimensionError("pde: field has " + std::to_string(f.size()) + " components, expected " +
                           std::to_string(2 * coeffs_.size()));
    }
    for (const auto& c : f.comps) {
      if (c.size() != grid_.n_cells) throw DimensionError("pde: component length mismatch");
    }
  }

  AgeGrid grid_;
  double eta_;
  std::vector<TraitCoeffs> coeffs_;
};

[[nodiscard]] inline std::size_t steps_for(double t_end, const AgeGrid& g) {
  if (!(t_end >= 0.0)) throw DomainError("pde: t_end must be >= 0");
  return static_cast<std::size_t>(std::llround(t_end / g.da));
}

/// One monomorphic step.
[[nodiscard]] inline DensityField step_monomorphic(DensityField field, const LifeTrait& x,
                                                   double eta, const AgeGrid& g) {
  if (field.size() != 2) throw DimensionError("step_monomorphic: need 2 components");
  Stepper(std::vector<LifeTrait>{x}, eta, g).step(field);
  return field;
}

/// Observer called after each step with (time, field).
using FieldObserver = std::function<void(double, const DensityField&)>;

struct MonomorphicResult {
  DensityField final_field;
  double residual_to_equilibrium = 0.0;  ///< L1 distance to analytic n̄_x
  double integrated_mass = 0.0;          ///< \int_0^T ||n|| dt (step-start masses)
};

[[nodiscard]] inline MonomorphicResult solve_monomorphic(const DensityField& initial,
                                                         const LifeTrait& x, double eta,
                                                         const AgeGrid& g, double t_end,
                                                         const FieldObserver& obs = {}) {
  if (initial.size() != 2) throw DimensionError("solve_monomorphic: need 2 components");
  if (!(eta > 0.0)) throw DomainError("solve_monomorphic: eta must be > 0");
  const Stepper st(std::vector<LifeTrait>{x}, eta, g);
  MonomorphicResult r{initial, 0.0, 0.0};
  const std::size_t steps = steps_for(t_end, g);
  for (std::size_t k = 0; k < steps; ++k) {
    r.integrated_mass += st.step(r.final_field) * g.da;
    if (obs) obs(static_cast<double>(k + 1) * g.da, r.final_field);
  }
  r.residual_to_equilibrium = l1_distance(r.final_field, equilibrium_field(x, eta, g));
  return r;
}

struct BimorphicResult {
  DensityField final_field;
  std::array<double, 4> masses{};
};

[[nodiscard]] inline BimorphicResult solve_bimorphic(const DensityField& initial,
                                                     const LifeTrait& x, const LifeTrait& y,
                                                     double eta, const AgeGrid& g, double t_end,
                                                     const FieldObserver& obs = {}) {
  if (initial.size() != 4) throw DimensionError("solve_bimorphic: need 4 components");
  if (!(eta > 0.0)) throw DomainError("solve_bimorphic: eta must be > 0");
  const Stepper st(std::vector<LifeTrait>{x, y}, eta, g);
  BimorphicResult r{initial, {}};
  const std::size_t steps = steps_for(t_end, g);
  for (std::size_t k = 0; k < steps; ++k) {
    st.step(r.final_field);
    if (obs) obs(static_cast<double>(k + 1) * g.da, r.final_field);
  }
  for (std::size_t k = 0; k < 4; ++k) r.masses[k] = r.final_field.mass(k);
  return r;
}

struct LinearResult {
  DensityField final_field;      ///< normalised to total mass 1
  double log_mass = 0.0;         ///< log of the unnormalised final mass
  double growth_rate_est = 0.0;  ///< slope of log mass over the last quarter
  double shape_residual = 0.0;   ///< L1 distance of final_field to normalised N_x
  std::vector<double> log_mass_series;  ///< after each step
};

/// eta = 0 evolution, renormalised every step; the log mass is tracked.
[[nodiscard]] inline LinearResult solve_linear(const DensityField& initial, const LifeTrait& x,
                                               const AgeGrid& g, double t_end) {
  if (initial.size() != 2) throw DimensionError("solve_linear: need 2 components");
  const double m0 = initial.total_mass();
  if (!(m0 > 0.0)) throw DomainError("solve_linear: initial field must be nonzero");
  const Stepper st(std::vector<LifeTrait>{x}, 0.0, g);
  LinearResult r;
  r.final_field = initial;
  r.final_field.scale(1.0 / m0);
  r.log_mass = std::log(m0);
  const std::size_t steps = steps_for(t_end, g);
  r.log_mass_series.reserve(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    st.step(r.final_field);
    const double m = r.final_field.total_mass();
    if (!(m > 0.0)) {
      r.log_mass = -std::numeric_limits<double>::infinity();
      r.log_mass_series.push_back(r.log_mass);
      break;
    }
    r.final_field.scale(1.0 / m);
    r.log_mass += std::log(m);
    r.log_mass_series.push_back(r.log_mass);
  }
  const std::size_t n = r.log_mass_series.size();
  const std::size_t q = n / 4;
  if (q >= 1 && std::isfinite(r.log_mass_series.back())) {
    r.growth_rate_est =
        (r.log_mass_series[n - 1] - r.log_mass_series[n - 1 - q]) / (static_cast<double>(q) * g.da);
  }
  if (is_viable(x)) {
    r.shape_residual = l1_distance(r.final_field, stable_profile_field(x, g));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Mass ODE dz/dt = (M + D(t)) z - eta |z|_1 z.

struct Mat2 {
  double m11 = 0.0, m12 = 0.0, m21 = 0.0, m22 = 0.0;
};

using Vec2 = std::array<double, 2>;
using Perturbation = std::function<Mat2(double)>;

/// Limit (m11/eta) / (1 + m21/(m11 - m22)) and its second component.
[[nodiscard]] inline Vec2 mass_ode_limit(const Mat2& m, double eta) {
  const double r = m.m21 / (m.m11 - m.m22);
  const double z1 = (m.m11 / eta) / (1.0 + r);
  return {z1, z1 * r};
}

[[nodiscard]] inline Vec2 mass_ode_solve(const Mat2& m, const Perturbation& d, double eta,
                                         const Vec2& z0, double t_end, double dt = 0.01) {
  if (!(m.m11 > 0.0) || m.m12 != 0.0 || !(m.m22 < 0.0) || !(m.m21 >= 0.0)) {
    throw DomainError("mass_ode_solve: need m11 > 0, m12 = 0, m21 >= 0, m22 < 0");
  }
  if (!(eta > 0.0)) throw DomainError("mass_ode_solve: eta must be > 0");
  if (!(z0[0] > 0.0) || !(z0[1] >= 0.0)) throw DomainError("mass_ode_solve: need z0_1 > 0, z0_2 >= 0");
  auto rhs = [&](double t, const Vec2& z) {
    Mat2 a = m;
    if (d) {
      const Mat2 p = d(t);
      a.m11 += p.m11;
      a.m12 += p.m12;
      a.m21 += p.m21;
      a.m22 += p.m22;
    }
    const double norm = std::abs(z[0]) + std::abs(z[1]);
    return Vec2{a.m11 * z[0] + a.m12 * z[1] - eta * norm * z[0],
                a.m21 * z[0] + a.m22 * z[1] - eta * norm * z[1]};
  };
  Vec2 z = z0;
  const std::size_t steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
  const double h = steps > 0 ? t_end / static_cast<double>(steps) : 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * h;
    const Vec2 k1 = rhs(t, z);
    const Vec2 k2 = rhs(t + 0.5 * h, {z[0] + 0.5 * h * k1[0], z[1] + 0.5 * h * k1[1]});
    const Vec2 k3 = rhs(t + 0.5 * h, {z[0] + 0.5 * h * k2[0], z[1] + 0.5 * h * k2[1]});
    const Vec2 k4 = rhs(t + h, {z[0] + h * k3[0], z[1] + h * k3[1]});
    for (int i = 0; i < 2; ++i) z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return z;
}

}  // namespace lansing::pde

#endif  // LANSING_PDE_HPP
