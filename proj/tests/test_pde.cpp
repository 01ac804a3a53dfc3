#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lansing/pde.hpp"

using namespace lansing;
using namespace lansing::pde;

namespace {

DensityField bumpy_initial(const LifeTrait& x, const AgeGrid& g, double scale) {
  DensityField f = zero_field(g, {x});
  for (std::size_t i = 0; i < g.n_cells; ++i) {
    const double a = g.center(i);
    f.comps[0][i] = a < 4.0 ? scale * (1.0 + std::sin(a)) : 0.0;
    f.comps[1][i] = a < 2.0 ? 0.2 * scale : 0.0;
  }
  return f;
}

}  // namespace

TEST(Grid, DefaultsAndChecks) {
  const AgeGrid g = grid_for({{2.0, 3.0}}, 0.01);
  EXPECT_NEAR(g.a_max(), 28.0, 1e-9);
  EXPECT_EQ(g.n_cells, 2800u);
  EXPECT_LT(tail_fraction({2.0, 3.0}, g.a_max()), kTailTolerance);
  EXPECT_LT(tail_fraction({1.0 + 1e-6, 3.0}, grid_for({{1.0 + 1e-6, 3.0}}, 0.01).a_max()),
            kTailTolerance);
  EXPECT_THROW((void)grid_for({{2.0, 3.0}}, 0.01, 8.0), DomainError);    // below 3 max
  EXPECT_THROW((void)grid_for({{2.0, 3.0}}, 0.01, 10.0), DomainError);   // tail too heavy
  EXPECT_THROW((void)AgeGrid::make(0.0, 1.0), DomainError);
}

TEST(Grid, TailFractionMatchesField) {
  const LifeTrait x{2.5, 1.2};
  const AgeGrid g = AgeGrid::make(0.01, 40.0);
  const DensityField eq = equilibrium_field(x, 1.0, g);
  double beyond = 0.0;
  for (std::size_t i = 800; i < g.n_cells; ++i) beyond += (eq.comps[0][i] + eq.comps[1][i]) * g.da;
  EXPECT_NEAR(tail_fraction(x, 8.0), beyond / eq.total_mass(), 1e-12);
}

TEST(Field, AnalyticEquilibriumMasses) {
  for (LifeTrait x : {LifeTrait{2.0, 3.0}, LifeTrait{2.5, 1.2}, LifeTrait{1.2, 2.5}}) {
    const auto p = demography::equilibrium(x, 0.0005);
    const DensityField eq = equilibrium_field(x, 0.0005, grid_for({x}, 0.01));
    EXPECT_NEAR(eq.mass(0), p.rho1, 1e-8 * p.total_mass());
    EXPECT_NEAR(eq.mass(1), p.rho2, 1e-8 * p.total_mass());
  }
  const DensityField z = equilibrium_field({1.2, 2.5}, 0.0005, grid_for({{1.2, 2.5}}, 0.01));
  for (double v : z.comps[1]) ASSERT_EQ(v, 0.0);
}

TEST(Step, ZeroFieldStaysZero) {
  const LifeTrait x{2.0, 3.0};
  const AgeGrid g = grid_for({x}, 0.01);
  DensityField f = zero_field(g, {x});
  for (int k = 0; k < 100; ++k) f = step_monomorphic(f, x, 0.0005, g);
  EXPECT_EQ(f.total_mass(), 0.0);
}

TEST(Step, DimensionErrors) {
  const LifeTrait x{2.0, 3.0};
  const AgeGrid g = grid_for({x}, 0.01);
  DensityField f = zero_field(g, {x, x});
  EXPECT_THROW((void)step_monomorphic(f, x, 0.0005, g), DimensionError);
  DensityField h = zero_field(AgeGrid::make(0.02, 28.0), {x});
  EXPECT_THROW((void)step_monomorphic(h, x, 0.0005, g), DimensionError);
}

TEST(Step, PositivityPreserved) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  const LifeTrait x{2.5, 1.6};
  const AgeGrid g = grid_for({x}, 0.02);
  DensityField f = zero_field(g, {x});
  for (auto& c : f.comps)
    for (double& v : c) v = u(gen) < 30.0 ? u(gen) : 0.0;
  const Stepper st({x}, 0.001, g);
  for (int k = 0; k < 2000; ++k) {
    st.step(f);
    for (const auto& c : f.comps)
      for (double v : c) ASSERT_GE(v, 0.0);
  }
}

TEST(Step, GrowthRateWithoutCompetition) {
  const LifeTrait x{2.0, 3.0};
  const AgeGrid g = grid_for({x}, 0.01);
  const LinearResult r = solve_linear(bumpy_initial(x, g, 1.0), x, g, 60.0);
  // log-mass slope on t in [40, 60]
  const double slope = (r.log_mass_series[5999] - r.log_mass_series[3999]) / 20.0;
  EXPECT_NEAR(slope, demography::malthusian(x), 1e-3);
}

TEST(Step, MassBoundedUnderCompetition) {
  const LifeTrait x{2.0, 3.0};
  const double eta = 0.0005;
  const double lambda = demography::malthusian(x);
  const AgeGrid g = grid_for({x}, 0.02);
  DensityField f = equilibrium_field(x, eta, g);
  f.scale(10.0);
  const Stepper st({x}, eta, g);
  double prev = f.total_mass();
  for (int k = 0; k < 10000; ++k) {
    st.step(f);
    if (k > 1000) {
      EXPECT_LE(f.total_mass(), (1.0 + lambda) / eta);
    }
  }
  EXPECT_LT(f.total_mass(), prev);
}

TEST(Monomorphic, StationaryFromAnalytic) {
  const LifeTrait x{2.0, 3.0};
  const double eta = 0.0005;
  const AgeGrid g = grid_for({x}, 0.01);
  const DensityField eq = equilibrium_field(x, eta, g);
  const double settled = solve_monomorphic(eq, x, eta, g, 400.0).residual_to_equilibrium;
  double worst = 0.0;
  std::size_t k = 0;
  (void)solve_monomorphic(eq, x, eta, g, 200.0, [&](double, const DensityField& f) {
    if (++k % 500 == 0) worst = std::max(worst, l1_distance(f, eq));
  });
  EXPECT_LE(worst, 2.0 * settled);
  EXPECT_LT(settled, 1e-4 * eq.total_mass());
}

TEST(Monomorphic, ConvergesFromTenthOfEquilibrium) {
  const LifeTrait x{2.0, 3.0};
  const double eta = 0.0005;
  const AgeGrid g = grid_for({x}, 0.01);
  DensityField init = equilibrium_field(x, eta, g);
  const double m = init.total_mass();
  init.scale(0.1);
  const MonomorphicResult r = solve_monomorphic(init, x, eta, g, 200.0);
  EXPECT_LT(r.residual_to_equilibrium, 1e-2 * m);
}

TEST(Monomorphic, U1TraitHasNoLansingComponent) {
  const LifeTrait x{1.2, 2.5};
  const double eta = 0.0005;
  const AgeGrid g = grid_for({x}, 0.01);
  const MonomorphicResult r = solve_monomorphic(bumpy_initial(x, g, 10.0), x, eta, g, 300.0);
  EXPECT_LT(r.final_field.mass(1), 1e-12);
  EXPECT_LT(r.residual_to_equilibrium, 1e-3 * r.final_field.total_mass());
}

TEST(Monomorphic, NonViableDecaysToZero) {
  const LifeTrait x{0.8, 3.0};
  const AgeGrid g = AgeGrid::make(0.01, 30.0);
  const MonomorphicResult r = solve_monomorphic(bumpy_initial(x, g, 10.0), x, 0.0005, g, 200.0);
  EXPECT_LT(r.residual_to_equilibrium, 1e-6);
}

TEST(Monomorphic, PureLansingPopulationDies) {
  const LifeTrait x{2.0, 3.0};
  const AgeGrid g = grid_for({x}, 0.01);
  DensityField f = zero_field(g, {x});
  for (std::size_t i = 0; i < 100; ++i) f.comps[1][i] = 100.0;
  const MonomorphicResult r = solve_monomorphic(f, x, 0.0005, g, 100.0);
  EXPECT_LT(r.final_field.total_mass(), 1e-6 * f.total_mass());
}

TEST(Monomorphic, GridRefinement) {
  const LifeTrait x{2.0, 3.0};
  const double eta = 0.0005;
  double prev = 0.0;
  for (double da : {0.04, 0.02, 0.01}) {
    const AgeGrid g = grid_for({x}, da);
    const double res =
        solve_monomorphic(equilibrium_field(x, eta, g), x, eta, g, 300.0).residual_to_equilibrium;
    if (prev > 0.0) {
      EXPECT_GE(prev / res, 1.8) << da;
    }
    prev = res;
  }
}

TEST(Monomorphic, MassesMatchDemographicEquilibrium) {
  for (LifeTrait x : {LifeTrait{2.5, 1.2}, LifeTrait{3.0, 1.6}, LifeTrait{2.0, 3.0}}) {
    const double eta = 0.001;
    const AgeGrid g = grid_for({x}, 0.01);
    const MonomorphicResult r = solve_monomorphic(bumpy_initial(x, g, 5.0), x, eta, g, 300.0);
    const auto p = demography::equilibrium(x, eta);
    EXPECT_NEAR(r.final_field.mass(0), p.rho1, 1e-2 * p.rho1);
    if (p.rho2 > 0.0) {
      EXPECT_NEAR(r.final_field.mass(1), p.rho2, 1e-2 * p.rho2);
    } else {
      EXPECT_LT(r.final_field.mass(1), 1e-9);
    }
  }
}

TEST(Monomorphic, RenormalisedNonlinearSolvesLinear) {
  const LifeTrait x{2.5, 1.6};
  const double eta = 0.0005;
  auto gap_and_mass = [&](double da) {
    const AgeGrid g = grid_for({x}, da);
    const DensityField f = bumpy_initial(x, g, 300.0);
    const MonomorphicResult nl = solve_monomorphic(f, x, eta, g, 30.0);
    const LinearResult lin = solve_linear(f, x, g, 30.0);
    DensityField v = nl.final_field;
    v.scale(std::exp(eta * nl.integrated_mass));
    DensityField w = lin.final_field;
    w.scale(std::exp(lin.log_mass));
    return std::pair{l1_distance(v, w) / w.total_mass(), w.total_mass()};
  };
  const auto [gap, mass] = gap_and_mass(0.01);
  const auto [gap_fine, mass_fine] = gap_and_mass(0.005);
  const double disc = std::abs(mass - mass_fine) / mass_fine;
  EXPECT_LT(gap, 5.0 * disc);
  EXPECT_LT(gap_fine, gap);
}

TEST(Linear, EigenfunctionShapeIsPreserved) {
  const LifeTrait x{2.5, 1.2};
  const AgeGrid g = grid_for({x}, 0.01);
  const DensityField n = stable_profile_field(x, g);
  double worst = 0.0;
  for (double t : {1.0, 5.0, 20.0}) worst = std::max(worst, solve_linear(n, x, g, t).shape_residual);
  EXPECT_LT(worst, 1e-4);
  const LinearResult r = solve_linear(n, x, g, 20.0);
  EXPECT_NEAR(r.growth_rate_est, demography::malthusian(x), 1e-4);
}

TEST(Linear, GenericInitialConverges) {
  const LifeTrait x{2.0, 3.0};
  const AgeGrid g = grid_for({x}, 0.01);
  const LinearResult r = solve_linear(bumpy_initial(x, g, 1.0), x, g, 80.0);
  EXPECT_NEAR(r.growth_rate_est, demography::malthusian(x), 1e-3);
  EXPECT_LT(r.shape_residual, 1e-3);
}

TEST(Linear, SecondComponentAloneIsSubcritical) {
  const LifeTrait x{2.0, 3.0};
  const AgeGrid g = grid_for({x}, 0.01);
  DensityField f = zero_field(g, {x});
  for (std::size_t i = 0; i < 50; ++i) f.comps[1][i] = 1.0;
  const LinearResult r = solve_linear(f, x, g, 30.0);
  EXPECT_LT(r.log_mass, std::log(f.total_mass()) - 5.0);
  EXPECT_THROW((void)solve_linear(zero_field(g, {x}), x, g, 1.0), DomainError);
}

TEST(Bimorphic, InvasionImpliesFixation) {
  const LifeTrait x{1.5, 3.0}, y{2.0, 3.0};
  const double eta = 0.0005;
  const AgeGrid g = grid_for({x, y}, 0.01);
  DensityField f = zero_field(g, {x, y});
  const DensityField ex = equilibrium_field(x, eta, g), ey = equilibrium_field(y, eta, g);
  f.comps[0] = ex.comps[0];
  f.comps[1] = ex.comps[1];
  for (std::size_t i = 0; i < g.n_cells; ++i) f.comps[2][i] = 0.01 * ey.comps[0][i];
  const BimorphicResult r = solve_bimorphic(f, x, y, eta, g, 400.0);
  EXPECT_LT(r.masses[0] + r.masses[1], 1e-3 * (r.masses[2] + r.masses[3]));
  EXPECT_NEAR(r.masses[2] + r.masses[3], ey.total_mass(), 1e-3 * ey.total_mass());
}

TEST(Bimorphic, ResidentWithLargerSpanResists) {
  const LifeTrait x{2.0, 3.0}, y{1.5, 3.0};
  const double eta = 0.0005;
  const AgeGrid g = grid_for({x, y}, 0.01);
  DensityField f = zero_field(g, {x, y});
  const DensityField ex = equilibrium_field(x, eta, g), ey = equilibrium_field(y, eta, g);
  f.comps[0] = ex.comps[0];
  for (std::size_t i = 0; i < g.n_cells; ++i) f.comps[2][i] = 0.5 * ey.comps[0][i];
  const BimorphicResult r = solve_bimorphic(f, x, y, eta, g, 200.0);
  EXPECT_LT(r.masses[2] + r.masses[3], 1e-3 * (r.masses[0] + r.masses[1]));
}

TEST(Bimorphic, SymmetricStartStaysSymmetric) {
  const LifeTrait x{2.5, 1.6};
  const double eta = 0.0005;
  const AgeGrid g = grid_for({x}, 0.02);
  DensityField f = zero_field(g, {x, x});
  const DensityField b = bumpy_initial(x, g, 20.0);
  f.comps[0] = f.comps[2] = b.comps[0];
  f.comps[1] = f.comps[3] = b.comps[1];
  const BimorphicResult r = solve_bimorphic(f, x, x, eta, g, 100.0);
  EXPECT_EQ(r.masses[0], r.masses[2]);
  EXPECT_EQ(r.masses[1], r.masses[3]);
  EXPECT_THROW((void)solve_bimorphic(b, x, x, eta, g, 1.0), DimensionError);
}

TEST(MassOde, LimitWithoutCoupling) {
  const Mat2 m{0.3, 0.0, 0.0, -0.5};
  const Vec2 z = mass_ode_solve(m, {}, 0.0005, {1.0, 5.0}, 500.0);
  EXPECT_NEAR(z[0], 0.3 / 0.0005, 1e-6 * 600.0);
  EXPECT_NEAR(z[1], 0.0, 1e-6);
  EXPECT_EQ(mass_ode_limit(m, 0.0005)[1], 0.0);
}

TEST(MassOde, ConvergesToStationaryValues) {
  const Mat2 m{0.3, 0.0, 0.1, -0.5};
  const double eta = 0.0005;
  const Vec2 lim = mass_ode_limit(m, eta);
  const Vec2 z = mass_ode_solve(m, {}, eta, {1.0, 0.0}, 500.0);
  EXPECT_NEAR(z[0], lim[0], 1e-6 * lim[0]);
  EXPECT_NEAR(z[1], lim[1], 1e-6 * lim[0]);
  const Vec2 zp = mass_ode_solve(
      m, [](double t) { return Mat2{0.5 * std::exp(-t), 0.0, std::exp(-t), -0.3 * std::exp(-t)}; },
      eta, {1.0, 0.0}, 500.0);
  EXPECT_NEAR(zp[0], lim[0], 1e-6 * lim[0]);
  EXPECT_NEAR(zp[1], lim[1], 1e-6 * lim[0]);
}

TEST(MassOde, SignPatternEnforced) {
  EXPECT_THROW((void)mass_ode_solve({-0.1, 0, 0, -1}, {}, 0.1, {1, 0}, 1), DomainError);
  EXPECT_THROW((void)mass_ode_solve({0.1, 0.2, 0, -1}, {}, 0.1, {1, 0}, 1), DomainError);
  EXPECT_THROW((void)mass_ode_solve({0.1, 0, 0, 0.1}, {}, 0.1, {1, 0}, 1), DomainError);
  EXPECT_THROW((void)mass_ode_solve({0.1, 0, 0, -1}, {}, 0.1, {0, 1}, 1), DomainError);
}
