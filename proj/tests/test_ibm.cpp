#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "lansing/demography.hpp"
#include "lansing/ibm.hpp"
#include "lansing/pde.hpp"
#include "oracles.hpp"

using namespace lansing;
using namespace lansing::ibm;

namespace {

// Individual A: young, trait (100, 100): birth 1, death eta C.
// Individual B: past both thresholds: birth 0, death 1 + eta C.
PopulationState toy_state() {
  PopulationState s;
  s.clock = 10.0;
  s.individuals.push_back({{100.0, 100.0}, 9.0, true, 0, kNoParent, false});
  s.individuals.push_back({{1.0, 2.0}, 0.0, true, 1, kNoParent, false});
  s.live_count = 2;
  s.next_id = 2;
  return s;
}

IbmConfig toy_config() {
  IbmConfig cfg;
  cfg.eta = 0.1;
  cfg.p_mut = 0.3;
  cfg.sigma = 0.1;
  cfg.initial_size = 2;
  cfg.t_end = 1.0;
  return cfg;
}

}  // namespace

TEST(Thinning, InterEventTimesAreExponentialWithExactRate) {
  const IbmConfig cfg = toy_config();
  const double c = 2.0;
  const double total = (1.0 + cfg.eta * c) + (1.0 + cfg.eta * c);
  Rng rng(1);
  std::vector<double> waits;
  for (int k = 0; k < 10000; ++k) {
    PopulationState s = toy_state();
    for (;;) {
      const EventRecord r = event_step(s, cfg, rng);
      if (r.type != EventType::Null) {
        waits.push_back(r.time - 10.0);
        break;
      }
    }
  }
  const double d = oracle::ks_one_sample(waits, [&](double t) { return -std::expm1(-total * t); });
  EXPECT_LT(d, oracle::ks_one_sample_critical(waits.size(), 0.01));
}

TEST(Thinning, EventFrequenciesMatchRateRatios) {
  const IbmConfig cfg = toy_config();
  const double c = 2.0, p = cfg.p_mut;
  const double total = 2.0 + 2.0 * cfg.eta * c;
  const double expected[4] = {(1 - p) * (1 - p) / total, 2 * p * (1 - p) / total, p * p / total,
                              (1.0 + 2.0 * cfg.eta * c) / total};
  Rng rng(2);
  double counts[4] = {0, 0, 0, 0};
  const int n = 100000;
  for (int k = 0; k < n; ++k) {
    PopulationState s = toy_state();
    for (;;) {
      const EventRecord r = event_step(s, cfg, rng);
      if (r.type != EventType::Null) {
        counts[static_cast<int>(r.type)] += 1.0;
        break;
      }
    }
  }
  for (int i = 0; i < 4; ++i) {
    const double f = counts[i] / n;
    const double se = std::sqrt(expected[i] * (1 - expected[i]) / n);
    EXPECT_NEAR(f, expected[i], 4.0 * se) << i;
  }
}

TEST(Thinning, NoEventWhenAllRatesVanish) {
  IbmConfig cfg = toy_config();
  cfg.eta = 1e-12;
  Rng rng(3);
  int null_count = 0;
  for (int k = 0; k < 10000; ++k) {
    // Age in (xb, xd] for the whole step.
    PopulationState s;
    s.clock = 2.0;
    s.individuals.push_back({{1.0, 100.0}, 0.0, true, 0, kNoParent, false});
    s.live_count = 1;
    null_count += event_step(s, cfg, rng, 50.0).type == EventType::Null;
  }
  EXPECT_EQ(null_count, 10000);
}

TEST(Thinning, ProposalBoundFollowsCompetitionConvention) {
  IbmConfig cfg = toy_config();
  EXPECT_DOUBLE_EQ(proposal_bound(10, cfg), 2.0 + 0.1 * 10);
  cfg.self_competition = false;
  EXPECT_DOUBLE_EQ(proposal_bound(10, cfg), 2.0 + 0.1 * 9);
  PopulationState empty;
  Rng rng(4);
  EXPECT_THROW((void)event_step(empty, cfg, rng), InvariantViolation);
}

TEST(Thinning, HorizonStopsClockExactly) {
  const IbmConfig cfg = toy_config();
  PopulationState s = toy_state();
  Rng rng(5);
  const EventRecord r = event_step(s, cfg, rng, 10.0 + 1e-12);
  EXPECT_TRUE(r.horizon);
  EXPECT_EQ(s.clock, 10.0 + 1e-12);
  EXPECT_EQ(s.individuals.size(), 2u);
}

TEST(Run, LansingRuleOnEventLog) {
  IbmConfig cfg;
  cfg.eta = 0.005;
  cfg.p_mut = 0.2;
  cfg.sigma = 0.1;
  cfg.initial_trait = {3.0, 1.6};
  cfg.initial_size = 200;
  cfg.t_end = 60.0;
  cfg.seed = 6;
  std::size_t births = 0, lansing = 0;
  (void)run(cfg, [&](const EventRecord& r) {
    if (r.type == EventType::Death) return;
    ++births;
    ASSERT_EQ(r.lansing, r.parent_age > r.parent_trait.xd);
    if (!r.lansing) return;
    ++lansing;
    switch (r.type) {
      case EventType::Clone:
        ASSERT_EQ(r.trait.xd, 0.0);
        ASSERT_EQ(r.trait.xb, r.parent_trait.xb);
        break;
      case EventType::MutantSingle:
        // Either xb mutated and xd stays 0, or xd mutated away from 0.
        ASSERT_TRUE(r.trait.xd == 0.0 || r.trait.xb == r.parent_trait.xb);
        ASSERT_LE(r.trait.xd, 1.0);
        break;
      default:
        ASSERT_LE(r.trait.xd, 1.0);
    }
  });
  EXPECT_GT(births, 1000u);
  EXPECT_GT(lansing, 100u);
}

TEST(Run, ConservationAndLiveCount) {
  IbmConfig cfg;
  cfg.eta = 0.01;
  cfg.initial_trait = {2.5, 1.6};
  cfg.initial_size = 100;
  Rng rng(7);
  PopulationState s = initial_state(cfg);
  double last = s.clock;
  for (int k = 0; k < 50000 && !s.individuals.empty(); ++k) {
    const std::size_t before = s.live_count;
    (void)event_step(s, cfg, rng);
    const long diff = static_cast<long>(s.live_count) - static_cast<long>(before);
    ASSERT_TRUE(diff >= -1 && diff <= 1);
    ASSERT_EQ(s.live_count, s.individuals.size());
    ASSERT_GE(s.clock, last);
    last = s.clock;
    if (k % 1000 == 0) {
      ASSERT_EQ(s.scan_live_count(), s.live_count);
      for (const auto& ind : s.individuals) ASSERT_GE(ind.age(s.clock), 0.0);
    }
  }
}

TEST(Run, DeterministicEventLog) {
  IbmConfig cfg;
  cfg.eta = 0.005;
  cfg.initial_trait = {2.0, 1.8};
  cfg.initial_size = 300;
  cfg.t_end = 20.0;
  cfg.seed = 8;
  auto collect = [&] {
    std::vector<EventRecord> log;
    (void)run(cfg, [&](const EventRecord& r) { log.push_back(r); });
    return log;
  };
  const auto a = collect(), b = collect();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a[i].time, b[i].time);
    ASSERT_EQ(a[i].type, b[i].type);
    ASSERT_EQ(a[i].id, b[i].id);
    ASSERT_EQ(a[i].trait, b[i].trait);
  }
}

TEST(Run, NonViableFounderGoesExtinct) {
  IbmConfig cfg;
  cfg.initial_trait = {0.01, 0.01};
  cfg.initial_size = 1;
  cfg.p_mut = 0.0;
  cfg.t_end = 1000.0;
  int extinct = 0;
  for (int r = 0; r < 200; ++r) {
    cfg.seed = 100 + r;
    extinct += run(cfg).extinct ? 1 : 0;
  }
  EXPECT_EQ(extinct, 200);
}

TEST(Run, SnapshotsAtRequestedTimes) {
  IbmConfig cfg;
  cfg.eta = 0.005;
  cfg.p_mut = 0.0;
  cfg.initial_trait = {2.0, 3.0};
  cfg.initial_size = 100;
  cfg.t_end = 10.0;
  cfg.snapshot_dt = 1.0;
  const TrajectorySummary s = run(cfg);
  ASSERT_EQ(s.snapshots.size(), 11u);
  for (std::size_t i = 0; i < s.snapshots.size(); ++i) {
    EXPECT_NEAR(s.snapshots[i].time, static_cast<double>(i), 1e-9);
    EXPECT_DOUBLE_EQ(s.snapshots[i].mean_xb, 2.0);
    EXPECT_EQ(s.snapshots[i].var_xd, 0.0);
  }
}

TEST(Run, ConfigValidation) {
  IbmConfig cfg;
  cfg.t_end = 1.0;
  cfg.eta = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.eta = 0.1;
  cfg.p_mut = 1.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.p_mut = 0.1;
  cfg.sigma = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.sigma = 0.1;
  cfg.initial_size = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Equilibrium, LiveCountNearLambdaOverEta) {
  IbmConfig cfg;
  cfg.eta = 0.0005;
  cfg.p_mut = 0.0;
  cfg.initial_trait = {2.0, 3.0};
  cfg.initial_size = 5000;
  cfg.t_end = 300.0;
  cfg.snapshot_dt = 1.0;
  cfg.seed = 9;
  const TrajectorySummary s = run(cfg);
  double sum = 0.0;
  int n = 0;
  for (const auto& snap : s.snapshots) {
    if (snap.time >= 100.0 && snap.time <= 300.0) {
      sum += static_cast<double>(snap.n_alive);
      ++n;
    }
  }
  const double target = demography::malthusian(cfg.initial_trait) / cfg.eta;
  EXPECT_NEAR(sum / n, target, 0.05 * target);
}

TEST(Consistency, AgeHistogramMatchesPde) {
  const LifeTrait x{2.0, 3.0};
  const double eta = 0.0005, k_scale = 5000.0, t = 100.0, bin = 0.5;
  const pde::AgeGrid g = pde::grid_for({x}, 0.01);
  const std::size_t bins = static_cast<std::size_t>(std::llround(g.a_max() / bin));

  // PDE from all mass at age 0.
  pde::DensityField f = pde::zero_field(g, {x});
  f.comps[0][0] = k_scale / g.da;
  const auto sol = pde::solve_monomorphic(f, x, eta, g, t);
  std::vector<double> pde_hist(bins, 0.0);
  const std::size_t per = g.n_cells / bins;
  for (std::size_t i = 0; i < g.n_cells; ++i) {
    pde_hist[i / per] += (sol.final_field.comps[0][i] + sol.final_field.comps[1][i]) * g.da / bin;
  }

  IbmConfig cfg;
  cfg.eta = eta;
  cfg.p_mut = 0.0;
  cfg.initial_trait = x;
  cfg.initial_size = 5000;
  cfg.t_end = t;
  const int reps = 4;
  std::vector<double> ibm_hist(bins, 0.0);
  for (int r = 0; r < reps; ++r) {
    cfg.seed = replicate_seed(10, r);
    const TrajectorySummary s = run(cfg);
    ASSERT_EQ(s.final_state.clock, t);
    const auto h = age_histogram(s.final_state, g.a_max(), bins);
    for (std::size_t i = 0; i < bins; ++i) ibm_hist[i] += h[i] / reps;
  }
  double l1 = 0.0;
  for (std::size_t i = 0; i < bins; ++i) l1 += std::abs(ibm_hist[i] - pde_hist[i]) * bin;
  EXPECT_LT(l1 / k_scale, 0.05);
}
