#ifndef LANSING_INCLUSION_HPP
#define LANSING_INCLUSION_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lansing/demography.hpp"
#include "lansing/errors.hpp"
#include "lansing/kernel.hpp"
#include "lansing/numerics.hpp"
#include "lansing/trait.hpp"
#include "lansing/tss.hpp"

namespace lansing::inclusion {

using demography::Vec2;

/// f(x, u) = (\int_0^u h^2 k + u \int_u^1 h k) (e^{-lambda tau} / G) n1_x(0) / 2.
class CanonicalDrift {
 public:
  CanonicalDrift(double sigma, double eta) : kernel_(sigma), eta_(eta) {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw DomainError("CanonicalDrift: eta must be > 0");
  }

  [[nodiscard]] double sigma() const noexcept { return kernel_.sigma(); }
  [[nodiscard]] double eta() const noexcept { return eta_; }
  [[nodiscard]] const SymmetricKernel& kernel() const noexcept { return kernel_; }

  /// (e^{-lambda tau} / G) n1_x(0) / 2, the u-independent factor.
  [[nodiscard]] double scale(const LifeTrait& x) const {
    require_viable(x, "f_drift");
    const double tau = x.tau();
    const double lambda = demography::growth_rate(tau).lambda;
    const double slope = std::exp(-lambda * tau) / numerics::exp_moment1(lambda, tau);
    return 0.5 * slope * demography::equilibrium_birth_density(x, lambda, eta_);
  }

  [[nodiscard]] double f(const LifeTrait& x, double u) const {
    if (!(u >= 0.0 && u <= 1.0)) throw DomainError("f_drift: u must lie in [0, 1]");
    return kernel_.drift_factor(u) * scale(x);
  }

  /// The w in [0, 1] with f(x, w) = value, for 0 <= value <= f(x, 1).
  [[nodiscard]] double inverse(const LifeTrait& x, double value) const {
    const double s = scale(x);
    const double target = value / s;
    if (!(target >= 0.0) || target > kernel_.drift_factor(1.0) * (1.0 + 1e-12)) {
      throw DomainError("CanonicalDrift::inverse: value outside [0, f(x,1)]");
    }
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
      const double mid = 0.5 * (lo + hi);
      (kernel_.drift_factor(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }

 private:
  SymmetricKernel kernel_;
  double eta_;
};

[[nodiscard]] inline double f_drift(const LifeTrait& x, double u, double sigma, double eta) {
  return CanonicalDrift(sigma, eta).f(x, u);
}

/// Segment {lo + s (hi - lo) : s in [0, 1]}; a point when lo == hi.
struct SetValue {
  TraitRegion region = TraitRegion::NonViable;
  Vec2 lo{0.0, 0.0};
  Vec2 hi{0.0, 0.0};
};

/// F(x): (f(x,1))_i on U_i; on the diagonal the segment from 0 to f(x,1)(1,1)/2.
[[nodiscard]] inline SetValue F_map(const LifeTrait& x, const CanonicalDrift& d) {
  const TraitRegion region = classify(x);
  if (region == TraitRegion::NonViable) require_viable(x, "F_map");
  const double f1 = d.f(x, 1.0);
  SetValue s;
  s.region = region;
  if (region == TraitRegion::U1) {
    s.lo = s.hi = {f1, 0.0};
  } else if (region == TraitRegion::U2) {
    s.lo = s.hi = {0.0, f1};
  } else {
    s.hi = {0.5 * f1, 0.5 * f1};
  }
  return s;
}

/// Whether v belongs to H(x). Off the diagonal H(x) = F(x). On it,
/// v = a (f(x,u), 0) + (1 - a) (0, f(x,u')) for some a, u, u' in [0, 1];
/// since u -> f(x,u) maps [0,1] onto [0, f(x,1)] this holds iff some a has
/// v_b <= a f(x,1) and v_d <= (1 - a) f(x,1). a is scanned at resolution tol.
[[nodiscard]] inline bool H_map_membership(const LifeTrait& x, const Vec2& v,
                                           const CanonicalDrift& d, double tol = 1e-4) {
  if (!(tol > 0.0)) throw DomainError("H_map_membership: tol must be > 0");
  const SetValue s = F_map(x, d);
  if (s.region != TraitRegion::Diagonal) {
    return std::abs(v[0] - s.lo[0]) <= tol * std::max(1.0, std::abs(s.lo[0])) &&
           std::abs(v[1] - s.lo[1]) <= tol * std::max(1.0, std::abs(s.lo[1]));
  }
  const double f1 = d.f(x, 1.0);
  const double p = v[0] / f1, q = v[1] / f1;
  if (p < -tol || q < -tol) return false;
  const auto steps = static_cast<long>(std::ceil(1.0 / tol));
  for (long k = 0; k <= steps; ++k) {
    const double a = std::min(1.0, static_cast<double>(k) * tol);
    if (p <= a + tol && q <= 1.0 - a + tol) return true;
  }
  return false;
}

/// Selection u(t) in [0, 1] used on the diagonal.
struct DiagonalPolicy {
  std::function<double(double)> u;
  std::string name;

  static DiagonalPolicy constant(double value) {
    if (!(value >= 0.0 && value <= 1.0)) throw DomainError("DiagonalPolicy: u must lie in [0, 1]");
    return {[value](double) { return value; }, "constant(" + std::to_string(value) + ")"};
  }
  static DiagonalPolicy fastest() { return constant(1.0); }
  static DiagonalPolicy frozen() { return constant(0.0); }
};

enum class Phase { OffDiagonal, OnDiagonal };

[[nodiscard]] constexpr std::string_view to_string(Phase p) noexcept {
  return p == Phase::OffDiagonal ? "off_diag" : "on_diag";
}

struct InclusionSolution {
  std::vector<double> times;
  std::vector<LifeTrait> points;
  std::vector<Phase> phases;
  std::optional<double> hit_time;
  std::string policy;

  /// Linear interpolation between nodes.
  [[nodiscard]] LifeTrait at(double t) const {
    if (times.empty()) throw DomainError("InclusionSolution::at: empty solution");
    if (t <= times.front()) return points.front();
    if (t >= times.back()) return points.back();
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t k = static_cast<std::size_t>(it - times.begin());
    const double w = (t - times[k - 1]) / (times[k] - times[k - 1]);
    return {points[k - 1].xb + w * (points[k].xb - points[k - 1].xb),
            points[k - 1].xd + w * (points[k].xd - points[k - 1].xd)};
  }
};

inline constexpr double kHitTolerance = 1e-10;

namespace detail {

// Off-diagonal flow moves only the smaller coordinate y toward the fixed
// larger one c; past c the field is frozen at its value on the diagonal.
inline double off_field(double y, double c, bool move_b, const CanonicalDrift& d) {
  const double own = std::min(y, c);
  const LifeTrait x = move_b ? LifeTrait{own, c} : LifeTrait{c, own};
  return d.f(x, 1.0);
}

template <class F>
inline double rk4(F&& field, double t, double y, double h) {
  const double k1 = field(t, y);
  const double k2 = field(t + 0.5 * h, y + 0.5 * h * k1);
  const double k3 = field(t + 0.5 * h, y + 0.5 * h * k2);
  const double k4 = field(t + h, y + h * k3);
  return y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace detail

/// RK4 on dx/dt = (f(x,1))_i inside U_i until the diagonal is hit (step
/// bisected to kHitTolerance), then dx_b/dt = dx_d/dt = f(x, u(t)) / 2.
[[nodiscard]] inline InclusionSolution solve_inclusion(const LifeTrait& x0, double t_end,
                                                       const DiagonalPolicy& policy,
                                                       const CanonicalDrift& d,
                                                       double dt = 1e-3) {
  require_viable(x0, "solve_inclusion");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw DomainError("solve_inclusion: bad t_end");
  if (!(dt > 0.0)) throw DomainError("solve_inclusion: dt must be > 0");
  InclusionSolution sol;
  sol.policy = policy.name;
  double t = 0.0;
  LifeTrait x = x0;
  const auto push = [&](Phase p) {
    sol.times.push_back(t);
    sol.points.push_back(x);
    sol.phases.push_back(p);
  };

  if (classify(x) == TraitRegion::Diagonal) {
    x.xd = x.xb;
    sol.hit_time = 0.0;
  } else {
    push(Phase::OffDiagonal);
    const bool move_b = x.xb < x.xd;
    const double c = move_b ? x.xd : x.xb;
    double y = move_b ? x.xb : x.xd;
    const auto field = [&](double, double yy) { return detail::off_field(yy, c, move_b, d); };
    const auto place = [&](double yy) { x = move_b ? LifeTrait{yy, c} : LifeTrait{c, yy}; };
    while (t < t_end) {
      const double h = std::min(dt, t_end - t);
      const double next = detail::rk4(field, t, y, h);
      if (next < c - kHitTolerance) {
        y = next;
        t += h;
        place(y);
        push(Phase::OffDiagonal);
        continue;
      }
      double lo = 0.0, hi = h;
      while (hi - lo > kHitTolerance) {
        const double mid = 0.5 * (lo + hi);
        (detail::rk4(field, t, y, mid) < c ? lo : hi) = mid;
      }
      t += hi;
      sol.hit_time = t;
      x = {c, c};
      break;
    }
  }
  if (!sol.hit_time) return sol;

  push(Phase::OnDiagonal);
  double s = x.xb;
  const auto diag_field = [&](double tt, double ss) {
    return 0.5 * d.f({ss, ss}, std::clamp(policy.u(tt), 0.0, 1.0));
  };
  while (t < t_end) {
    const double h = std::min(dt, t_end - t);
    s = detail::rk4(diag_field, t, s, h);
    t += h;
    x = {s, s};
    push(Phase::OnDiagonal);
  }
  return sol;
}

/// \int_{y0}^{c} dy / f(x(y), 1): time for the off-diagonal flow to reach the diagonal.
[[nodiscard]] inline double time_of_flight(const LifeTrait& x0, const CanonicalDrift& d) {
  require_viable(x0, "time_of_flight");
  const bool move_b = x0.xb < x0.xd;
  const double c = move_b ? x0.xd : x0.xb;
  const double y0 = move_b ? x0.xb : x0.xd;
  return numerics::integrate_piecewise(
      [&](double y) { return 1.0 / detail::off_field(y, c, move_b, d); }, y0, c, {}, 16);
}

struct TubeOptions {
  double delta = 0.05;
  double epsilon = 0.0;  ///< jump scale of the tested path; widens the tolerance to 3 eps
  double window = 1.0;   ///< length of the speed-check windows after the hit
  double dt = 1e-3;      ///< step of the reference solution
};

struct TubeReport {
  bool pass = false;
  double tolerance = 0.0;
  double hit_time = 0.0;    ///< t_end when the reference solution does not reach the diagonal
  bool hit = false;
  double max_pre_hit_dist = 0.0;
  double max_diag_gap = 0.0;
  bool monotone_ok = true;
  bool speed_ok = true;
  double max_speed_excess = 0.0;      ///< largest increment minus its bound
  std::vector<double> effective_u;    ///< per post-hit window, mean speed read through f(x, .)
};

/// Whether a trait path stays in the tube around the solution set of the
/// inclusion from x0 on [0, t_end]. Before the hit time of the unique
/// off-diagonal solution: sup distance at all path epochs and solution nodes.
/// After it: distance to the diagonal, monotone coordinates, and per-window
/// increments at most (f(x,1)/2 + tol) * window with f maximised over the window.
[[nodiscard]] inline TubeReport tube_test(const tss::JumpPath& path, const LifeTrait& x0,
                                          double t_end, const CanonicalDrift& d,
                                          const TubeOptions& opt = {}) {
  if (path.traits.empty()) throw DomainError("tube_test: empty path");
  const LifeTrait& start = path.traits.front();
  if (std::abs(start.xb - x0.xb) > 1e-12 || std::abs(start.xd - x0.xd) > 1e-12) {
    throw DomainError("tube_test: path does not start at x0");
  }
  if (!(opt.window > 0.0)) throw DomainError("tube_test: window must be > 0");
  const InclusionSolution ref = solve_inclusion(x0, t_end, DiagonalPolicy::fastest(), d, opt.dt);
  TubeReport rep;
  rep.tolerance = std::max(opt.delta, 3.0 * opt.epsilon);
  rep.hit_time = ref.hit_time.value_or(t_end);
  rep.hit = ref.hit_time.has_value();

  std::vector<double> epochs = ref.times;
  for (double t : path.times) {
    if (t <= t_end) epochs.push_back(t);
  }
  std::sort(epochs.begin(), epochs.end());
  for (double t : epochs) {
    if (t > rep.hit_time) break;
    const LifeTrait a = path.at(t);
    const LifeTrait b = ref.at(t);
    rep.max_pre_hit_dist = std::max(rep.max_pre_hit_dist, std::hypot(a.xb - b.xb, a.xd - b.xd));
  }

  for (std::size_t k = 0; k < path.traits.size(); ++k) {
    if (k > 0 && (path.traits[k].xb < path.traits[k - 1].xb ||
                  path.traits[k].xd < path.traits[k - 1].xd)) {
      rep.monotone_ok = false;
    }
    const double lo = path.times[k];
    const double hi = k + 1 < path.times.size() ? path.times[k + 1] : t_end;
    if (hi > rep.hit_time && lo <= t_end) {
      rep.max_diag_gap = std::max(rep.max_diag_gap, std::abs(path.traits[k].xb - path.traits[k].xd));
    }
  }

  for (double w0 = rep.hit_time; w0 + opt.window <= t_end + 1e-12; w0 += opt.window) {
    const double w1 = w0 + opt.window;
    const LifeTrait a = path.at(w0);
    const LifeTrait b = path.at(w1);
    double f_max = d.f(a, 1.0);
    const auto first = std::upper_bound(path.times.begin(), path.times.end(), w0);
    const auto last = std::upper_bound(path.times.begin(), path.times.end(), w1);
    for (auto it = first; it != last; ++it) {
      f_max = std::max(f_max, d.f(path.traits[static_cast<std::size_t>(it - path.times.begin())], 1.0));
    }
    const double bound = (0.5 * f_max + rep.tolerance) * opt.window;
    const double inc = std::max(b.xb - a.xb, b.xd - a.xd);
    rep.max_speed_excess = std::max(rep.max_speed_excess, inc - bound);
    if (inc > bound) rep.speed_ok = false;
    const double mean_speed = 0.5 * ((b.xb - a.xb) + (b.xd - a.xd)) / opt.window;
    const double c = 0.25 * (a.xb + a.xd + b.xb + b.xd);
    const LifeTrait mid{c, c};
    const double f1 = d.f(mid, 1.0);
    rep.effective_u.push_back(d.inverse(mid, std::clamp(2.0 * mean_speed, 0.0, f1)));
  }

  rep.pass = rep.max_pre_hit_dist <= rep.tolerance && rep.max_diag_gap <= rep.tolerance &&
             rep.monotone_ok && rep.speed_ok;
  return rep;
}

/// The solution as a path, for self-tests of tube_test.
[[nodiscard]] inline tss::JumpPath as_path(const InclusionSolution& sol) {
  tss::JumpPath p;
  p.times = sol.times;
  p.traits = sol.points;
  p.t_final = sol.times.empty() ? 0.0 : sol.times.back();
  return p;
}

}  // namespace lansing::inclusion

#endif  // LANSING_INCLUSION_HPP
