#ifndef LANSING_ACCEPTANCE_HPP
#define LANSING_ACCEPTANCE_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "lansing/branching.hpp"
#include "lansing/demography.hpp"
#include "lansing/ibm.hpp"
#include "lansing/inclusion.hpp"
#include "lansing/pde.hpp"
#include "lansing/random.hpp"
#include "lansing/tss.hpp"

namespace lansing::acceptance {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

enum class Level { Fast, Full };

struct Options {
  std::uint64_t seed = 20240601;
};

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

/// Uniform draw on [lo, hi).
inline double between(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

inline LifeTrait random_viable(Rng& rng, double hi) {
  return {between(rng, 1.0 + 1e-6, hi), between(rng, 1.0 + 1e-6, hi)};
}

/// Random viable trait at least `gap` off the diagonal.
inline LifeTrait random_off_diagonal(Rng& rng, double lo, double hi, double gap) {
  for (;;) {
    const LifeTrait x{between(rng, lo, hi), between(rng, lo, hi)};
    if (std::abs(x.xb - x.xd) >= gap) return x;
  }
}

constexpr double kSigma = 0.05;
constexpr double kEta = 0.0005;

}  // namespace detail

/// Euler-Lotka residual, exact zero at unit span, 0 < lambda < 1 on viable traits.
inline CriterionResult criterion_1(const Options& o) {
  using namespace demography;
  CriterionResult r{1, "Malthusian correctness", true, "", 0.0};
  Rng rng(replicate_seed(o.seed, 1));
  double worst = 0.0;
  int bounds_bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const LifeTrait x = detail::random_viable(rng, 40.0);
    const double l = malthusian(x);
    worst = std::max(worst, std::abs(lotka_residual(l, x.tau())));
    if (!(l > 0.0 && l < 1.0)) ++bounds_bad;
  }
  for (double tau : {60.0, 1e3, 1e6}) {
    const double l = growth_rate(tau).lambda;
    if (!(l > 0.0 && l < 1.0)) ++bounds_bad;
  }
  const bool unit = growth_rate(1.0).lambda == 0.0 && malthusian({1.0, 5.0}) == 0.0 &&
                    malthusian({5.0, 1.0}) == 0.0 && malthusian({1.0, 1.0}) == 0.0;
  r.pass = worst <= 1e-12 && bounds_bad == 0 && unit;
  r.detail = "max residual " + detail::fmt(worst) + " (<= 1e-12), lambda(tau=1)=0 " +
             (unit ? "exact" : "NOT exact") + ", out-of-(0,1) count " + std::to_string(bounds_bad);
  return r;
}

/// Gradient against central finite differences.
inline CriterionResult criterion_2(const Options& o) {
  using namespace demography;
  CriterionResult r{2, "Gradient vs finite differences", true, "", 0.0};
  Rng rng(replicate_seed(o.seed, 2));
  double worst = 0.0, worst_inactive = 0.0;
  const double h = 1e-5;
  for (int n = 0; n < 100; ++n) {
    const LifeTrait x = detail::random_off_diagonal(rng, 1.0 + 1e-6, 8.0, 0.01);
    const Vec2 g = fitness_gradient(x);
    for (int i = 0; i < 2; ++i) {
      LifeTrait p = x, m = x;
      (i == 0 ? p.xb : p.xd) += h;
      (i == 0 ? m.xb : m.xd) -= h;
      const double fd = (malthusian(p) - malthusian(m)) / (2.0 * h);
      if (g[i] != 0.0) {
        worst = std::max(worst, std::abs(g[i] - fd) / std::abs(g[i]));
      } else {
        worst_inactive = std::max(worst_inactive, std::abs(fd));
      }
    }
  }
  r.pass = worst < 1e-6 && worst_inactive == 0.0;
  r.detail = "max rel err " + detail::fmt(worst) + " (< 1e-6), inactive-component FD max " +
             detail::fmt(worst_inactive);
  return r;
}

/// [F(lambda)]_11 = 1.
inline CriterionResult criterion_3(const Options& o) {
  using namespace demography;
  CriterionResult r{3, "Characteristic identity F11(lambda) = 1", true, "", 0.0};
  Rng rng(replicate_seed(o.seed, 3));
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const LifeTrait x = detail::random_viable(rng, 15.0);
    worst = std::max(worst, std::abs(char_matrix_entries(x, malthusian(x)).f11 - 1.0));
  }
  r.pass = worst <= 1e-10;
  r.detail = "max |F11 - 1| " + detail::fmt(worst) + " (<= 1e-10)";
  return r;
}

/// Invasion fitness vs branching-process survival. Pairs are drawn uniformly
/// on [1.1, 4]^2 x [1.1, 4]^2 and kept when |lambda(y) - lambda(x)| >= 0.02,
/// away from the critical case where the finite survival cap biases the estimate.
inline CriterionResult criterion_4(const Options& o) {
  using namespace demography;
  CriterionResult r{4, "Invasion fitness vs branching MC", true, "", 0.0};
  Rng rng(replicate_seed(o.seed, 4));
  int fails = 0, pair = 0;
  double worst_z = 0.0;
  while (pair < 10) {
    const LifeTrait x{detail::between(rng, 1.1, 4.0), detail::between(rng, 1.1, 4.0)};
    const LifeTrait y{detail::between(rng, 1.1, 4.0), detail::between(rng, 1.1, 4.0)};
    if (std::abs(malthusian(y) - malthusian(x)) < 0.02) continue;
    const SurvivalEstimate e =
        survival_probability_mc(y, x, 100000, replicate_seed(o.seed ^ 0x4u, pair));
    const double s = invasion_fitness(y, x);
    const double se = std::max(e.std_error, 1.0 / 100000.0);
    const double z = std::abs(e.estimate - s) / se;
    worst_z = std::max(worst_z, z);
    if (std::abs(e.estimate - s) > 3.0 * e.std_error) ++fails;
    ++pair;
  }
  r.pass = fails == 0;
  r.detail = std::to_string(fails) + "/10 pairs outside 3 SE, max |est - s|/SE " + detail::fmt(worst_z);
  return r;
}

/// Monomorphic PDE from a tenth of equilibrium reaches it by t = 200.
inline CriterionResult criterion_5(const Options&) {
  using namespace pde;
  CriterionResult r{5, "PDE monomorphic equilibrium", true, "", 0.0};
  const LifeTrait x{2.0, 3.0};
  const AgeGrid g = grid_for({x}, 0.01);
  DensityField init = equilibrium_field(x, detail::kEta, g);
  const double m = init.total_mass();
  init.scale(0.1);
  const MonomorphicResult res = solve_monomorphic(init, x, detail::kEta, g, 200.0);
  const double rel = res.residual_to_equilibrium / m;
  r.pass = rel < 1e-2;
  r.detail = "L1 residual / |n_eq| = " + detail::fmt(rel) + " (< 1e-2)";
  return r;
}

/// Bimorphic PDE: the fitter invader displaces the resident by t = 400.
inline CriterionResult criterion_6(const Options&) {
  using namespace pde;
  CriterionResult r{6, "PDE invasion implies fixation", true, "", 0.0};
  const LifeTrait x{1.5, 3.0}, y{2.0, 3.0};
  const AgeGrid g = grid_for({x, y}, 0.01);
  DensityField f = zero_field(g, {x, y});
  const DensityField ex = equilibrium_field(x, detail::kEta, g);
  const DensityField ey = equilibrium_field(y, detail::kEta, g);
  f.comps[0] = ex.comps[0];
  f.comps[1] = ex.comps[1];
  for (std::size_t i = 0; i < g.n_cells; ++i) f.comps[2][i] = 0.01 * ey.comps[0][i];
  const BimorphicResult res = solve_bimorphic(f, x, y, detail::kEta, g, 400.0);
  const double ratio = (res.masses[0] + res.masses[1]) / (res.masses[2] + res.masses[3]);
  r.pass = ratio < 1e-3;
  r.detail = "resident/invader mass at t=400: " + detail::fmt(ratio) + " (< 1e-3)";
  return r;
}

/// Mass ODE converges to its stationary values, with and without decaying perturbations.
inline CriterionResult criterion_7(const Options& o) {
  using namespace pde;
  CriterionResult r{7, "Mass ODE stationary limit", true, "", 0.0};
  Rng rng(replicate_seed(o.seed, 7));
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Mat2 m{detail::between(rng, 0.05, 1.0), 0.0, detail::between(rng, 0.0, 1.0),
                 -detail::between(rng, 0.05, 1.0)};
    const double eta = std::exp(detail::between(rng, std::log(1e-4), std::log(1e-2)));
    const Vec2 lim = mass_ode_limit(m, eta);
    const Mat2 p{detail::between(rng, -0.5, 0.5), detail::between(rng, 0.0, 0.5),
                 detail::between(rng, -0.5, 0.5), detail::between(rng, -0.5, 0.5)};
    const double decay = detail::between(rng, 0.2, 2.0);
    const Perturbation pert = [p, decay](double t) {
      const double e = std::exp(-decay * t);
      return Mat2{p.m11 * e, p.m12 * e, p.m21 * e, p.m22 * e};
    };
    // Linear rates at the limit are m11 (logistic) and m11 - m22; allow the
    // growth phase from z = (1, 0) plus 45 e-folds of the slower one.
    const double rate = std::min(m.m11, m.m11 - m.m22);
    const double t_end = std::log(lim[0] + lim[1]) / m.m11 + 45.0 / rate + 20.0 / decay;
    for (const Perturbation& d : {Perturbation{}, pert}) {
      const Vec2 z = mass_ode_solve(m, d, eta, {1.0, 0.0}, t_end);
      worst = std::max({worst, std::abs(z[0] - lim[0]), std::abs(z[1] - lim[1])});
    }
  }
  r.pass = worst <= 1e-6;
  r.detail = "max |z(T) - z*| over 40 runs " + detail::fmt(worst) + " (<= 1e-6, absolute)";
  return r;
}

/// IBM without mutation: time-averaged live count near lambda / eta.
inline CriterionResult criterion_8(const Options& o) {
  CriterionResult r{8, "IBM equilibrium size", true, "", 0.0};
  ibm::IbmConfig cfg;
  cfg.eta = detail::kEta;
  cfg.p_mut = 0.0;
  cfg.initial_trait = {2.0, 3.0};
  cfg.initial_size = 5000;
  cfg.t_end = 300.0;
  cfg.snapshot_dt = 1.0;
  cfg.seed = replicate_seed(o.seed, 8);
  const ibm::TrajectorySummary s = ibm::run(cfg);
  double sum = 0.0;
  int n = 0;
  for (const auto& snap : s.snapshots) {
    if (snap.time >= 100.0 && snap.time <= 300.0) {
      sum += static_cast<double>(snap.n_alive);
      ++n;
    }
  }
  const double target = demography::malthusian(cfg.initial_trait) / cfg.eta;
  const double mean = n > 0 ? sum / n : 0.0;
  const double rel = std::abs(mean - target) / target;
  r.pass = n > 0 && rel <= 0.05;
  r.detail = "mean count " + detail::fmt(mean) + " vs lambda/eta " + detail::fmt(target) +
             ", rel dev " + detail::fmt(rel) + " (<= 0.05)";
  return r;
}

struct MarginalsOutcome {
  bool extinct = false;
  double approach_time = -1.0;   ///< first snapshot with |mean_xb - mean_xd| < 0.1
  double max_pre_drift = 0.0;    ///< max |mean_xd - xd0| / xd0 before approach
  double max_post_gap = 0.0;     ///< max |mean_xb - mean_xd| from approach to the end
  bool both_increase = false;    ///< both means larger at the end than at approach
  [[nodiscard]] bool pass() const {
    return !extinct && approach_time >= 0.0 && max_pre_drift < 0.05 && max_post_gap < 0.15 &&
           both_increase;
  }
};

/// Desk-scale run of the trait-marginal experiment; snapshots every 5 time
/// units up to t = 3000 (approach typically happens by t = 1500).
inline MarginalsOutcome marginals_run(std::uint64_t seed, double t_end = 3000.0, double snapshot_dt = 5.0) {
  ibm::IbmConfig cfg;
  cfg.eta = 0.0025;
  cfg.p_mut = 0.05;
  cfg.sigma = 0.05;
  cfg.initial_trait = {1.2, 2.5};
  cfg.initial_size = 2000;
  cfg.t_end = t_end;
  cfg.snapshot_dt = snapshot_dt;
  cfg.seed = seed;
  const ibm::TrajectorySummary s = ibm::run(cfg);
  MarginalsOutcome out;
  out.extinct = s.extinct;
  const double xd0 = cfg.initial_trait.xd;
  std::size_t app = 0;
  for (std::size_t i = 0; i < s.snapshots.size(); ++i) {
    const auto& sn = s.snapshots[i];
    if (sn.n_alive == 0) break;
    const double gap = std::abs(sn.mean_xb - sn.mean_xd);
    if (out.approach_time < 0.0) {
      out.max_pre_drift = std::max(out.max_pre_drift, std::abs(sn.mean_xd - xd0) / xd0);
      if (gap < 0.1) {
        out.approach_time = sn.time;
        app = i;
      }
    } else {
      out.max_post_gap = std::max(out.max_post_gap, gap);
    }
  }
  if (out.approach_time >= 0.0 && !out.extinct) {
    const auto& a = s.snapshots[app];
    const auto& e = s.snapshots.back();
    out.both_increase = e.mean_xb > a.mean_xb && e.mean_xd > a.mean_xd;
  }
  return out;
}

inline CriterionResult criterion_9(const Options& o) {
  CriterionResult r{9, "IBM diagonal convergence (desk scale)", true, "", 0.0};
  std::ostringstream os;
  for (std::uint64_t k = 0; k < 3; ++k) {
    const MarginalsOutcome f = marginals_run(replicate_seed(o.seed ^ 0x9u, k));
    r.pass = r.pass && f.pass();
    os << (k ? "; " : "") << "seed" << k << ": ";
    if (f.extinct) {
      os << "extinct";
      continue;
    }
    os << "approach t=" << f.approach_time << ", pre drift " << detail::fmt(f.max_pre_drift)
       << " (<0.05), post gap " << detail::fmt(f.max_post_gap) << " (<0.15), both increase "
       << (f.both_increase ? "yes" : "no");
  }
  r.detail = os.str();
  return r;
}

/// Absorption on the diagonal and monotone coordinates along paths.
inline CriterionResult criterion_10(const Options& o) {
  CriterionResult r{10, "TSS absorption and monotonicity", true, "", 0.0};
  tss::TssConfig cfg;
  cfg.sigma = detail::kSigma;
  cfg.eta = detail::kEta;
  cfg.epsilon = 0.01;
  cfg.seed = replicate_seed(o.seed, 10);
  cfg.absorb_rejections = 1'000'000;
  cfg.t_end = 1e12;
  const tss::JumpPath diag = tss::run_tss({2.0, 2.0}, cfg);
  const bool absorbed = diag.jumps() == 0 && diag.reason == tss::TerminalReason::Absorbed &&
                        diag.proposals >= 1'000'000;

  Rng rng(replicate_seed(o.seed, 100));
  int violations = 0;
  std::uint64_t total_jumps = 0;
  for (std::uint64_t k = 0; k < 20; ++k) {
    tss::TssConfig c = cfg;
    c.epsilon = 0.05;
    c.t_end = 10.0;
    c.seed = replicate_seed(o.seed ^ 0xAu, k);
    const LifeTrait x0 = detail::random_off_diagonal(rng, 1.1, 4.0, 0.01);
    const tss::JumpPath p = tss::run_tss(x0, c);
    total_jumps += p.jumps();
    for (std::size_t j = 1; j < p.traits.size(); ++j) {
      if (p.traits[j].xb < p.traits[j - 1].xb || p.traits[j].xd < p.traits[j - 1].xd) ++violations;
    }
  }
  r.pass = absorbed && violations == 0;
  r.detail = "diagonal start: " + std::to_string(diag.jumps()) + " jumps over " +
             std::to_string(diag.proposals) + " proposals (" + std::string(tss::to_string(diag.reason)) +
             "); 20 paths, " + std::to_string(total_jumps) + " jumps, " + std::to_string(violations) +
             " decreasing steps";
  return r;
}

/// Rescaled TSS paths stay in the tube around the inclusion solution.
inline CriterionResult criterion_11(const Options& o) {
  CriterionResult r{11, "TSS tracks the differential inclusion", true, "", 0.0};
  const LifeTrait x0{2.0, 1.5};
  const inclusion::CanonicalDrift d(detail::kSigma, detail::kEta);
  const double hit = inclusion::time_of_flight(x0, d);
  tss::TssConfig cfg;
  cfg.sigma = detail::kSigma;
  cfg.eta = detail::kEta;
  cfg.epsilon = 0.01;
  cfg.t_end = 2.0 * hit;
  inclusion::TubeOptions opt;
  opt.delta = 0.05;
  opt.epsilon = cfg.epsilon;
  int passed = 0;
  double worst_dist = 0.0, worst_gap = 0.0;
  for (std::uint64_t k = 0; k < 10; ++k) {
    cfg.seed = replicate_seed(o.seed ^ 0xBu, k);
    const tss::JumpPath p = tss::run_tss(x0, cfg);
    const inclusion::TubeReport rep = inclusion::tube_test(p, x0, cfg.t_end, d, opt);
    passed += rep.pass ? 1 : 0;
    worst_dist = std::max(worst_dist, rep.max_pre_hit_dist);
    worst_gap = std::max(worst_gap, rep.max_diag_gap);
  }
  r.pass = passed == 10;
  r.detail = std::to_string(passed) + "/10 paths pass (T=" + detail::fmt(cfg.t_end) + ", hit " +
             detail::fmt(hit) + "), max pre-hit dist " + detail::fmt(worst_dist) +
             ", max diag gap " + detail::fmt(worst_gap) + " (tol 0.05)";
  return r;
}

/// Small-epsilon TSS mean drift equals the canonical drift with u = 1.
inline CriterionResult criterion_12(const Options& o) {
  CriterionResult r{12, "Mean-field drift vs canonical drift", true, "", 0.0};
  Rng rng(replicate_seed(o.seed, 12));
  tss::TssConfig cfg;
  cfg.sigma = detail::kSigma;
  cfg.eta = detail::kEta;
  cfg.epsilon = 1e-4;
  const inclusion::CanonicalDrift d(cfg.sigma, cfg.eta);
  double worst = 0.0;
  int inactive_bad = 0;
  for (int i = 0; i < 20; ++i) {
    const LifeTrait x = detail::random_off_diagonal(rng, 1.1, 6.0, 0.01);
    const demography::Vec2 v = tss::mean_field_drift(x, cfg);
    const double f = d.f(x, 1.0);
    const int a = x.xb < x.xd ? 0 : 1;
    worst = std::max(worst, std::abs(v[a] - f) / f);
    if (v[1 - a] != 0.0) ++inactive_bad;
  }
  r.pass = worst <= 1e-4 && inactive_bad == 0;
  r.detail = "max rel err " + detail::fmt(worst) + " (<= 1e-4), nonzero inactive components " +
             std::to_string(inactive_bad);
  return r;
}

using CriterionFn = CriterionResult (*)(const Options&);

struct Criterion {
  int id;
  bool fast;
  CriterionFn fn;
};

inline const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {1, true, criterion_1},   {2, true, criterion_2},   {3, true, criterion_3},
      {4, false, criterion_4},  {5, false, criterion_5},  {6, false, criterion_6},
      {7, true, criterion_7},   {8, false, criterion_8},  {9, false, criterion_9},
      {10, false, criterion_10}, {11, false, criterion_11}, {12, true, criterion_12},
  };
  return all;
}

/// Runs the selected criteria in order; exceptions count as failures.
inline std::vector<CriterionResult> run(Level level, const Options& o = {},
                                        const std::function<void(const CriterionResult&)>& on_result = {},
                                        const std::vector<int>& only = {}) {
  std::vector<CriterionResult> out;
  for (const Criterion& c : criteria()) {
    if (level == Level::Fast && !c.fast) continue;
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult res;
    try {
      res = c.fn(o);
    } catch (const std::exception& e) {
      res = {c.id, "criterion " + std::to_string(c.id), false, std::string("exception: ") + e.what(), 0.0};
    }
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (on_result) on_result(res);
    out.push_back(std::move(res));
  }
  return out;
}

[[nodiscard]] inline std::string format_line(const CriterionResult& r) {
  std::ostringstream os;
  os << (r.pass ? "PASS" : "FAIL") << "  [" << (r.id < 10 ? " " : "") << r.id << "] " << r.name
     << " (" << detail::fmt(r.seconds) << " s): " << r.detail;
  return os.str();
}

}  // namespace lansing::acceptance

#endif  // LANSING_ACCEPTANCE_HPP
