#ifndef LANSING_TSS_HPP
#define LANSING_TSS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lansing/demography.hpp"
#include "lansing/errors.hpp"
#include "lansing/kernel.hpp"
#include "lansing/numerics.hpp"
#include "lansing/random.hpp"
#include "lansing/trait.hpp"

namespace lansing::tss {

using demography::Vec2;

enum class TerminalReason { MaxTime, Absorbed, MaxJumps };

[[nodiscard]] constexpr std::string_view to_string(TerminalReason r) noexcept {
  switch (r) {
    case TerminalReason::MaxTime: return "max_time";
    case TerminalReason::Absorbed: return "absorbed";
    case TerminalReason::MaxJumps: return "max_jumps";
  }
  return "max_time";
}

/// Piecewise-constant trait trajectory: traits[k] holds on [times[k], times[k+1]).
struct JumpPath {
  std::vector<double> times;
  std::vector<LifeTrait> traits;
  double t_final = 0.0;  ///< end of the observation window
  TerminalReason reason = TerminalReason::MaxTime;
  std::uint64_t proposals = 0;

  [[nodiscard]] std::size_t jumps() const noexcept {
    return traits.empty() ? 0 : traits.size() - 1;
  }

  [[nodiscard]] const LifeTrait& at(double t) const {
    if (times.empty()) throw DomainError("JumpPath::at: empty path");
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t k = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
    return traits[k];
  }
};

struct TssConfig {
  double sigma = 0.05;
  double eta = 0.0005;
  double epsilon = 1.0;
  std::uint64_t seed = 1;
  double t_end = std::numeric_limits<double>::infinity();
  std::uint64_t max_jumps = 0;  ///< 0: unlimited
  double absorb_band = kDiagonalTolerance;
  std::uint64_t absorb_rejections = 1'000'000;
  double tau_bound = 0.0;  ///< subordination clock bound; 0: computed from the reachable set

  void validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("tss.sigma must be > 0");
    if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("tss.eta must be > 0");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("tss.epsilon must be > 0");
    if (!(t_end > 0.0)) throw ConfigError("tss.t_end must be > 0");
    if (!std::isfinite(t_end) && max_jumps == 0) {
      throw ConfigError("tss: either t_end or max_jumps must bound the run");
    }
    if (!(absorb_band >= 0.0)) throw ConfigError("tss.absorb_band must be >= 0");
    if (absorb_rejections == 0) throw ConfigError("tss.absorb_rejections must be >= 1");
    if (!(tau_bound >= 0.0)) throw ConfigError("tss.tau_bound must be >= 0");
  }
};

/// Resident trait with its cached growth rate and equilibrium birth density.
struct Resident {
  LifeTrait x;
  double lambda = 0.0;
  double birth_density = 0.0;  ///< n1_x(0)
  double slope = 0.0;          ///< d lambda / d tau = e^{-lambda tau} / G

  Resident(const LifeTrait& trait, double eta) : x(trait) {
    require_viable(x, "tss");
    const double tau = x.tau();
    lambda = demography::growth_rate(tau).lambda;
    birth_density = demography::equilibrium_birth_density(x, lambda, eta);
    slope = std::exp(-lambda * tau) / numerics::exp_moment1(lambda, tau);
  }
};

/// Rate of candidate epochs n1_x(0) m_+ / eps^2, with m_+ = 1/2.
[[nodiscard]] inline double candidate_rate(const Resident& r, const TssConfig& cfg) {
  return 0.5 * r.birth_density / (cfg.epsilon * cfg.epsilon);
}

namespace detail {

// One candidate mutation: coordinate by a fair coin, h ~ k conditioned on
// h >= 0, accepted with probability lambda(x') - lambda(x). lambda is concave
// in tau, so slope * (tau' - tau) bounds the gain and uniforms above the bound
// reject without solving for lambda(x').
inline std::optional<LifeTrait> attempt(const Resident& r, const SymmetricKernel& k,
                                        const TssConfig& cfg, Rng& rng) {
  LifeTrait next = r.x;
  const double step = cfg.epsilon * k.sample_positive(rng);
  if (rng.bernoulli(0.5)) {
    next.xb += step;
  } else {
    next.xd += step;
  }
  const double tau = next.tau();
  if (tau == r.x.tau()) return std::nullopt;
  const double u = rng.uniform();
  if (u >= r.slope * (tau - r.x.tau())) return std::nullopt;
  const double gain = demography::growth_rate(tau, r.lambda).lambda - r.lambda;
  if (!(gain >= 0.0) || !(gain < 1.0)) {
    throw InvariantViolation("tss: acceptance probability " + std::to_string(gain) +
                             " outside [0, 1)");
  }
  if (u < gain) return next;
  return std::nullopt;
}

}  // namespace detail

enum class StepKind { Jump, Absorbed, Horizon };

struct StepOutcome {
  StepKind kind = StepKind::Horizon;
  double dt = 0.0;
  LifeTrait next;
  std::uint64_t proposals = 0;
};

/// Time to, and destination of, the next accepted jump from r, by thinning
/// candidate epochs. Stops at `budget` (Horizon) or after the absorption rule.
inline StepOutcome tss_step(const Resident& r, const SymmetricKernel& k, const TssConfig& cfg,
                            Rng& rng,
                            double budget = std::numeric_limits<double>::infinity()) {
  const double rate = candidate_rate(r, cfg);
  const bool near_diagonal = std::abs(r.x.xb - r.x.xd) <= cfg.absorb_band;
  StepOutcome out;
  out.next = r.x;
  std::uint64_t rejected = 0;
  for (;;) {
    out.dt += rng.exponential(rate);
    if (out.dt > budget) {
      out.dt = budget;
      out.kind = StepKind::Horizon;
      return out;
    }
    ++out.proposals;
    if (const auto next = detail::attempt(r, k, cfg, rng)) {
      out.kind = StepKind::Jump;
      out.next = *next;
      return out;
    }
    if (near_diagonal && ++rejected >= cfg.absorb_rejections) {
      out.kind = StepKind::Absorbed;
      return out;
    }
  }
}

inline StepOutcome tss_step(const LifeTrait& x, const TssConfig& cfg, Rng& rng,
                            double budget = std::numeric_limits<double>::infinity()) {
  return tss_step(Resident(x, cfg.eta), SymmetricKernel(cfg.sigma), cfg, rng, budget);
}

/// Rescaled TSS path from x0 until t_end, max_jumps or absorption.
[[nodiscard]] inline JumpPath run_tss(const LifeTrait& x0, const TssConfig& cfg) {
  cfg.validate();
  require_viable(x0, "run_tss");
  const SymmetricKernel k(cfg.sigma);
  Rng rng(cfg.seed);
  JumpPath path;
  path.times.push_back(0.0);
  path.traits.push_back(x0);
  double t = 0.0;
  Resident r(x0, cfg.eta);
  for (;;) {
    if (cfg.max_jumps != 0 && path.jumps() >= cfg.max_jumps) {
      path.reason = TerminalReason::MaxJumps;
      break;
    }
    const StepOutcome s = tss_step(r, k, cfg, rng, cfg.t_end - t);
    path.proposals += s.proposals;
    t += s.dt;
    if (s.kind == StepKind::Horizon) {
      t = cfg.t_end;
      path.reason = TerminalReason::MaxTime;
      break;
    }
    if (s.kind == StepKind::Absorbed) {
      path.reason = TerminalReason::Absorbed;
      break;
    }
    path.times.push_back(t);
    path.traits.push_back(s.next);
    r = Resident(s.next, cfg.eta);
  }
  path.t_final = t;
  return path;
}

/// Upper bound on n1_x(0) over the traits reachable from x0 by time t_end:
/// the rectangle [x0, x0 + L]^2, where L covers t_end at 3x the largest drift
/// speed f(x,1) on it, evaluated on a grid and inflated by 1.1.
[[nodiscard]] inline double reachable_birth_density_bound(const LifeTrait& x0,
                                                          const TssConfig& cfg) {
  require_viable(x0, "reachable_birth_density_bound");
  const double moment = SymmetricKernel(cfg.sigma).drift_factor(1.0);
  const int n = 41;
  double span = cfg.epsilon;
  double n_max = 0.0;
  for (int iter = 0; iter < 50; ++iter) {
    n_max = 0.0;
    double v_max = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const LifeTrait x{x0.xb + span * i / (n - 1), x0.xd + span * j / (n - 1)};
        const double tau = x.tau();
        const double lambda = demography::growth_rate(tau).lambda;
        const double nb = demography::equilibrium_birth_density(x, lambda, cfg.eta);
        const double slope = std::exp(-lambda * tau) / numerics::exp_moment1(lambda, tau);
        n_max = std::max(n_max, nb);
        v_max = std::max(v_max, 0.5 * moment * slope * nb);
      }
    }
    const double needed = cfg.epsilon + 3.0 * cfg.t_end * v_max;
    if (!std::isfinite(needed)) throw DomainError("reachable_birth_density_bound: t_end must be finite");
    if (needed <= span) break;
    span = needed;
  }
  return 1.1 * n_max;
}

/// The same law as run_tss, generated as a lazy jump chain driven by a
/// Poisson clock of rate tau m_+ / eps^2: at each tick one TSS proposal is made
/// with probability n1_x(0)/tau, otherwise the chain stays put.
[[nodiscard]] inline JumpPath run_subordinated(const LifeTrait& x0, const TssConfig& cfg) {
  cfg.validate();
  require_viable(x0, "run_subordinated");
  if (!std::isfinite(cfg.t_end)) throw ConfigError("run_subordinated: t_end must be finite");
  const double tau = cfg.tau_bound > 0.0 ? cfg.tau_bound : reachable_birth_density_bound(x0, cfg);
  const double clock = 0.5 * tau / (cfg.epsilon * cfg.epsilon);
  const SymmetricKernel k(cfg.sigma);
  Rng rng(cfg.seed);
  JumpPath path;
  path.times.push_back(0.0);
  path.traits.push_back(x0);
  Resident r(x0, cfg.eta);
  double t = 0.0;
  for (;;) {
    if (cfg.max_jumps != 0 && path.jumps() >= cfg.max_jumps) {
      path.reason = TerminalReason::MaxJumps;
      break;
    }
    t += rng.exponential(clock);
    if (t > cfg.t_end) {
      t = cfg.t_end;
      path.reason = TerminalReason::MaxTime;
      break;
    }
    if (r.birth_density > tau) {
      throw InvariantViolation("run_subordinated: birth density " + std::to_string(r.birth_density) +
                               " exceeds clock bound " + std::to_string(tau));
    }
    if (rng.uniform() * tau >= r.birth_density) continue;
    ++path.proposals;
    if (const auto next = detail::attempt(r, k, cfg, rng)) {
      path.times.push_back(t);
      path.traits.push_back(*next);
      r = Resident(*next, cfg.eta);
    }
  }
  path.t_final = t;
  return path;
}

/// Accepted-jump rate eps^-2 n1_x(0) \int (lambda(x + eps h) - lambda(x)) mu(dh),
/// by quadrature split at the diagonal crossing.
[[nodiscard]] inline double jump_rate(const LifeTrait& x, const TssConfig& cfg) {
  const Resident r(x, cfg.eta);
  const SymmetricKernel k(cfg.sigma);
  double total = 0.0;
  for (int i = 0; i < 2; ++i) {
    const double own = i == 0 ? x.xb : x.xd;
    const double other = i == 0 ? x.xd : x.xb;
    if (own >= other) continue;
    const double kink = (other - own) / cfg.epsilon;
    const auto gain = [&](double h) {
      const double tau = std::min(own + cfg.epsilon * h, other);
      return (demography::growth_rate(tau, r.lambda).lambda - r.lambda) * k.density(h);
    };
    total += numerics::integrate_piecewise(gain, 0.0, 1.0, {kink});
  }
  return 0.5 * r.birth_density * total / (cfg.epsilon * cfg.epsilon);
}

/// tau g_eps(x) / eps = (n1_x(0)/2) \int_0^1 (lambda(x + eps (h)_i) - lambda(x))/eps h k(h) dh
/// in the coordinate i that can increase lambda; the other component is 0.
[[nodiscard]] inline Vec2 mean_field_drift(const LifeTrait& x, const TssConfig& cfg) {
  const Resident r(x, cfg.eta);
  if (classify(x) == TraitRegion::Diagonal) return {0.0, 0.0};
  const SymmetricKernel k(cfg.sigma);
  const bool move_b = x.xb < x.xd;
  const double own = move_b ? x.xb : x.xd;
  const double other = move_b ? x.xd : x.xb;
  const double kink = (other - own) / cfg.epsilon;
  const auto integrand = [&](double h) {
    const double tau = std::min(own + cfg.epsilon * h, other);
    const double diff = demography::growth_rate(tau, r.lambda).lambda - r.lambda;
    return diff / cfg.epsilon * h * k.density(h);
  };
  const double v = 0.5 * r.birth_density * numerics::integrate_piecewise(integrand, 0.0, 1.0, {kink});
  return move_b ? Vec2{v, 0.0} : Vec2{0.0, v};
}

}  // namespace lansing::tss

#endif  // LANSING_TSS_HPP
