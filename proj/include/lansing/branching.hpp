#ifndef LANSING_BRANCHING_HPP
#define LANSING_BRANCHING_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>

#include "lansing/demography.hpp"
#include "lansing/random.hpp"

namespace lansing::demography {

/// Stopping rule of the branching-process survival estimator.
struct BranchingOptions {
  std::size_t census_threshold = 1000;  ///< survival once a generation reaches this size
  std::size_t max_generations = 500;    ///< survival if still alive after this many
};

struct SurvivalEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t replicates = 0;
  std::size_t survived = 0;
};

namespace detail {

struct Offspring {
  std::uint64_t type1 = 0;
  std::uint64_t type2 = 0;
};

// Lifetime offspring of one individual. Death age: rate extra_death before
// yd, 1 + extra_death after (type 1); 1 + extra_death throughout (type 2).
// Births at rate 1 on [0, min(death, yb)]; a type-1 parent has type-1
// offspring up to age yd and type-2 (Lansing) offspring after it.
inline Offspring draw_offspring(const LifeTrait& y, bool type1, double extra_death, Rng& rng) {
  double death_age = 0.0;
  if (type1) {
    const double early = extra_death > 0.0 ? rng.exponential(extra_death)
                                           : std::numeric_limits<double>::infinity();
    death_age = early <= y.xd ? early : y.xd + rng.exponential(1.0 + extra_death);
  } else {
    death_age = rng.exponential(1.0 + extra_death);
  }
  const double fertile_end = std::min(death_age, y.xb);
  Offspring o;
  if (type1) {
    const double young = std::min(fertile_end, y.xd);
    o.type1 = rng.poisson(young);
    o.type2 = rng.poisson(fertile_end - young);
  } else {
    o.type2 = rng.poisson(fertile_end);
  }
  return o;
}

// Generation-by-generation exploration of the embedded two-type
// Galton-Watson process; extinction events coincide with those of the
// continuous-time process.
inline bool branching_survives(const LifeTrait& y, double extra_death,
                               const BranchingOptions& opt, Rng& rng) {
  std::uint64_t g1 = 1, g2 = 0;
  for (std::size_t gen = 0; gen < opt.max_generations; ++gen) {
    std::uint64_t n1 = 0, n2 = 0;
    for (std::uint64_t i = 0; i < g1; ++i) {
      const Offspring o = draw_offspring(y, true, extra_death, rng);
      n1 += o.type1;
      n2 += o.type2;
    }
    for (std::uint64_t i = 0; i < g2; ++i) n2 += draw_offspring(y, false, extra_death, rng).type2;
    if (n1 + n2 == 0) return false;
    if (n1 + n2 >= opt.census_threshold) return true;
    g1 = n1;
    g2 = n2;
  }
  return true;
}

}  // namespace detail

/// Monte-Carlo survival probability of the two-type age-structured branching
/// process with birth rates B_y(a) and death rates D_y(a) + lambda(resident),
/// started from one newborn type-1 individual. Independent of the
/// closed-form invasion fitness; used as its oracle.
[[nodiscard]] inline SurvivalEstimate survival_probability_mc(const LifeTrait& invader,
                                                              const LifeTrait& resident,
                                                              std::size_t replicates,
                                                              std::uint64_t seed,
                                                              const BranchingOptions& opt = {}) {
  require_viable(resident, "survival_probability_mc");
  validate(invader);
  if (replicates == 0) throw DomainError("survival_probability_mc: replicates must be >= 1");
  const double extra_death = growth_rate(resident.tau()).lambda;
  Rng rng(seed);
  std::size_t survived = 0;
  for (std::size_t r = 0; r < replicates; ++r) {
    if (detail::branching_survives(invader, extra_death, opt, rng)) ++survived;
  }
  SurvivalEstimate est;
  est.replicates = replicates;
  est.survived = survived;
  est.estimate = static_cast<double>(survived) / static_cast<double>(replicates);
  est.std_error = std::sqrt(est.estimate * (1.0 - est.estimate) / static_cast<double>(replicates));
  return est;
}

}  // namespace lansing::demography

#endif  // LANSING_BRANCHING_HPP
