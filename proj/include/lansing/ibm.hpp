#ifndef LANSING_IBM_HPP
#define LANSING_IBM_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <string_view>
#include <vector>

#include "lansing/errors.hpp"
#include "lansing/kernel.hpp"
#include "lansing/random.hpp"
#include "lansing/trait.hpp"

namespace lansing::ibm {

inline constexpr std::int64_t kNoParent = -1;

struct Individual {
  LifeTrait trait;
  double birth_time = 0.0;
  bool alive = true;
  std::uint64_t id = 0;
  std::int64_t parent_id = kNoParent;
  bool lansing_born = false;  ///< parent was older than its xd at conception

  [[nodiscard]] double age(double t) const noexcept { return t - birth_time; }
};

/// Live individuals only; the dead are swap-removed and reported through the
/// event stream.
struct PopulationState {
  std::vector<Individual> individuals;
  double clock = 0.0;
  std::size_t live_count = 0;
  std::uint64_t next_id = 0;

  [[nodiscard]] std::size_t scan_live_count() const noexcept {
    std::size_t n = 0;
    for (const auto& ind : individuals) n += ind.alive ? 1 : 0;
    return n;
  }
};

enum class MutationKernel { Truncated, Script };

struct IbmConfig {
  double eta = 0.0005;
  double p_mut = 0.05;
  double sigma = 0.05;
  LifeTrait initial_trait{1.2, 2.5};
  std::size_t initial_size = 10000;
  std::uint64_t seed = 1;
  bool self_competition = true;
  double t_end = std::numeric_limits<double>::infinity();
  std::uint64_t max_jumps = 0;       ///< accepted events; 0 means unbounded
  std::uint64_t snapshot_every = 0;  ///< accepted events between snapshots; 0 disables
  double snapshot_dt = 0.0;          ///< time between snapshots; 0 disables
  MutationKernel kernel = MutationKernel::Truncated;

  void validate() const {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("ibm: eta must be > 0");
    if (!(p_mut >= 0.0 && p_mut <= 1.0)) throw ConfigError("ibm: p_mut must be in [0, 1]");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("ibm: sigma must be > 0");
    if (initial_size < 1) throw ConfigError("ibm: initial_size must be >= 1");
    if (!(t_end > 0.0)) throw ConfigError("ibm: t_end must be > 0");
    if (!(snapshot_dt >= 0.0)) throw ConfigError("ibm: snapshot_dt must be >= 0");
    lansing::validate(initial_trait);
    if (!std::isfinite(t_end) && max_jumps == 0) {
      throw ConfigError("ibm: one of t_end or max_jumps must bound the run");
    }
  }
};

enum class EventType : std::uint8_t { Clone, MutantSingle, MutantDouble, Death, Null };

[[nodiscard]] constexpr std::string_view to_string(EventType e) noexcept {
  switch (e) {
    case EventType::Clone: return "clone";
    case EventType::MutantSingle: return "mutant1";
    case EventType::MutantDouble: return "mutant2";
    case EventType::Death: return "death";
    case EventType::Null: return "null";
  }
  return "null";
}

/// One step of the jump chain. For births `id` is the child; for deaths it
/// is the deceased. `trait` is the child's (post-mutation) or the deceased's.
struct EventRecord {
  double time = 0.0;
  EventType type = EventType::Null;
  std::uint64_t id = 0;
  std::int64_t parent_id = kNoParent;
  LifeTrait trait;
  bool lansing = false;
  double parent_age = 0.0;    ///< births: age of the parent at conception
  LifeTrait parent_trait;     ///< births: the parent's trait
  std::size_t chosen = 0;     ///< index of the proposed individual
  bool horizon = false;       ///< clock stopped at t_limit, no proposal made
};

[[nodiscard]] inline PopulationState initial_state(const IbmConfig& cfg) {
  PopulationState s;
  s.individuals.reserve(cfg.initial_size);
  for (std::size_t i = 0; i < cfg.initial_size; ++i) {
    s.individuals.push_back({cfg.initial_trait, 0.0, true, s.next_id++, kNoParent, false});
  }
  s.live_count = cfg.initial_size;
  return s;
}

/// Competitors felt by one individual.
[[nodiscard]] inline double competitors(std::size_t n, bool self_competition) noexcept {
  return self_competition ? static_cast<double>(n) : static_cast<double>(n) - 1.0;
}

/// Dominating per-individual rate: birth <= 1, death <= 1 + eta C.
[[nodiscard]] inline double proposal_bound(std::size_t n, const IbmConfig& cfg) noexcept {
  return 2.0 + cfg.eta * competitors(n, cfg.self_competition);
}

namespace detail {

inline double mutate(double u, const IbmConfig& cfg, Rng& rng) {
  return cfg.kernel == MutationKernel::Truncated ? draw_mutation(u, cfg.sigma, rng)
                                                 : draw_mutation_script(u, cfg.sigma, rng);
}

}  // namespace detail

/// One thinning proposal. Proposals arrive at rate R_max * N with
/// R_max = 2 + eta C; a uniformly chosen individual then realises clone,
/// single-mutant, double-mutant birth, death, or nothing, with probabilities
/// equal to its actual rates over R_max. If the next proposal would fall
/// after `t_limit`, the clock stops at t_limit and a Null record is returned
/// (exact by memorylessness).
inline EventRecord event_step(PopulationState& s, const IbmConfig& cfg, Rng& rng,
                              double t_limit = std::numeric_limits<double>::infinity()) {
  const std::size_t n = s.individuals.size();
  if (n == 0) throw InvariantViolation("event_step: extinct population");
  const double c = competitors(n, cfg.self_competition);
  const double r_max = 2.0 + cfg.eta * c;
  const double dt = rng.exponential(r_max * static_cast<double>(n));
  EventRecord rec;
  if (s.clock + dt > t_limit) {
    s.clock = t_limit;
    rec.time = s.clock;
    rec.horizon = true;
    return rec;
  }
  s.clock += dt;
  rec.time = s.clock;

  const std::size_t i = static_cast<std::size_t>(rng.index(n));
  rec.chosen = i;
  const Individual& ind = s.individuals[i];
  const double a = ind.age(s.clock);
  const double birth = a <= ind.trait.xb ? 1.0 : 0.0;
  const double death = (a > ind.trait.xd ? 1.0 : 0.0) + cfg.eta * c;
  const double p = cfg.p_mut;
  const double u = rng.uniform() * r_max;

  const double b_clone = birth * (1.0 - p) * (1.0 - p);
  const double b_single = b_clone + birth * 2.0 * p * (1.0 - p);
  if (u < birth) {
    // Remaining band [b_single, birth) has width birth * p^2: double mutant.
    Individual child;
    child.birth_time = s.clock;
    child.parent_id = static_cast<std::int64_t>(ind.id);
    child.lansing_born = a > ind.trait.xd;
    child.trait = child.lansing_born ? LifeTrait{ind.trait.xb, 0.0} : ind.trait;
    if (u < b_clone) {
      rec.type = EventType::Clone;
    } else if (u < b_single) {
      rec.type = EventType::MutantSingle;
      if (rng.bernoulli(0.5)) {
        child.trait.xb = detail::mutate(child.trait.xb, cfg, rng);
      } else {
        child.trait.xd = detail::mutate(child.trait.xd, cfg, rng);
      }
    } else {
      rec.type = EventType::MutantDouble;
      child.trait.xb = detail::mutate(child.trait.xb, cfg, rng);
      child.trait.xd = detail::mutate(child.trait.xd, cfg, rng);
    }
    child.id = s.next_id++;
    rec.id = child.id;
    rec.parent_id = child.parent_id;
    rec.trait = child.trait;
    rec.lansing = child.lansing_born;
    rec.parent_age = a;
    rec.parent_trait = ind.trait;
    s.individuals.push_back(child);
    ++s.live_count;
  } else if (u < birth + death) {
    rec.type = EventType::Death;
    rec.id = ind.id;
    rec.parent_id = ind.parent_id;
    rec.trait = ind.trait;
    rec.lansing = ind.lansing_born;
    s.individuals[i] = s.individuals.back();
    s.individuals.pop_back();
    --s.live_count;
  }
  return rec;
}

struct Snapshot {
  double time = 0.0;
  std::size_t n_alive = 0;
  double mean_xb = 0.0, mean_xd = 0.0;
  double var_xb = 0.0, var_xd = 0.0;
  std::uint64_t accepted = 0;
};

[[nodiscard]] inline Snapshot take_snapshot(const PopulationState& s, std::uint64_t accepted) {
  Snapshot snap;
  snap.time = s.clock;
  snap.n_alive = s.individuals.size();
  snap.accepted = accepted;
  if (snap.n_alive == 0) return snap;
  double sb = 0.0, sd = 0.0;
  for (const auto& ind : s.individuals) {
    sb += ind.trait.xb;
    sd += ind.trait.xd;
  }
  const double n = static_cast<double>(snap.n_alive);
  snap.mean_xb = sb / n;
  snap.mean_xd = sd / n;
  double vb = 0.0, vd = 0.0;
  for (const auto& ind : s.individuals) {
    vb += (ind.trait.xb - snap.mean_xb) * (ind.trait.xb - snap.mean_xb);
    vd += (ind.trait.xd - snap.mean_xd) * (ind.trait.xd - snap.mean_xd);
  }
  snap.var_xb = vb / n;
  snap.var_xd = vd / n;
  return snap;
}

struct TrajectorySummary {
  std::vector<Snapshot> snapshots;
  PopulationState final_state;
  bool extinct = false;
  double extinction_time = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t accepted = 0;
  std::uint64_t proposals = 0;
};

using EventSink = std::function<void(const EventRecord&)>;

/// Runs the process until t_end, max_jumps accepted events, or extinction.
/// Snapshots are taken at time 0, every `snapshot_every` accepted events, at
/// multiples of `snapshot_dt`, and at the end.
[[nodiscard]] inline TrajectorySummary run(const IbmConfig& cfg, const EventSink& sink = {}) {
  cfg.validate();
  Rng rng(cfg.seed);
  TrajectorySummary out;
  PopulationState s = initial_state(cfg);
  out.snapshots.push_back(take_snapshot(s, 0));
  double next_snap_time = cfg.snapshot_dt > 0.0 ? cfg.snapshot_dt
                                                : std::numeric_limits<double>::infinity();
  for (;;) {
    if (s.individuals.empty()) {
      out.extinct = true;
      out.extinction_time = s.clock;
      break;
    }
    if (cfg.max_jumps != 0 && out.accepted >= cfg.max_jumps) break;
    if (s.clock >= cfg.t_end) break;
    const double limit = std::min(cfg.t_end, next_snap_time);
    const EventRecord rec = event_step(s, cfg, rng, limit);
    if (rec.horizon) {
      if (limit == next_snap_time) {
        out.snapshots.push_back(take_snapshot(s, out.accepted));
        next_snap_time += cfg.snapshot_dt;
      }
      continue;
    }
    ++out.proposals;
    if (rec.type == EventType::Null) continue;
    ++out.accepted;
    if (sink) sink(rec);
    if (cfg.snapshot_every != 0 && out.accepted % cfg.snapshot_every == 0) {
      out.snapshots.push_back(take_snapshot(s, out.accepted));
    }
  }
  if (out.snapshots.back().time != s.clock || out.snapshots.back().accepted != out.accepted) {
    out.snapshots.push_back(take_snapshot(s, out.accepted));
  }
  out.final_state = std::move(s);
  return out;
}

/// Age histogram of the live population on [0, a_max) with `bins` cells,
/// in individuals per unit age.
[[nodiscard]] inline std::vector<double> age_histogram(const PopulationState& s, double a_max,
                                                       std::size_t bins) {
  std::vector<double> h(bins, 0.0);
  const double w = a_max / static_cast<double>(bins);
  for (const auto& ind : s.individuals) {
    const double a = ind.age(s.clock);
    if (a >= 0.0 && a < a_max) h[static_cast<std::size_t>(a / w)] += 1.0 / w;
  }
  return h;
}

}  // namespace lansing::ibm

#endif  // LANSING_IBM_HPP
