#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "mcgt/oracle.hpp"
#include "mcgt/power.hpp"
#include "mcgt/theory.hpp"
#include "mcgt/topology.hpp"
#include "support/finite_diff.hpp"

using namespace mcgt;

namespace {

MicrogridSpec small_spec(int generators, int batteries, int horizon, double demand_scale = 1.0) {
  MicrogridSpec spec;
  spec.name = "test";
  spec.demand = default_demand_profile(horizon, demand_scale);
  for (int i = 0; i < generators; ++i) {
    spec.generators.push_back(GeneratorParams{0.5, 0.3, 0.1, 0.0, 3.0});
  }
  for (int j = 0; j < batteries; ++j) {
    spec.batteries.push_back(BatteryParams{0.6, 0.1, 0.05, -1.0, 1.0, 2.0, 1.0, 0.99, 0.01, 0.1});
  }
  return spec;
}

}  // namespace

TEST_CASE("constraint counts reproduce the published table") {
  const int horizon = 24;
  const std::vector<std::pair<int, int>> fleet = {{7, 3}, {5, 5}, {3, 7}, {0, 10}, {10, 0}};
  const std::vector<long> expected = {627, 725, 823, 970, 480};
  long total = 0;
  for (std::size_t m = 0; m < fleet.size(); ++m) {
    const MicrogridSpec spec = small_spec(fleet[m].first, fleet[m].second, horizon);
    const long count = count_constraints(spec, horizon);
    CHECK(count == expected[m]);
    total += count;
  }
  CHECK(total == 3625);
}

TEST_CASE("flagship variable counts match 24 x (1 + generators + batteries)") {
  const FlagshipScenario flagship = make_flagship_scenario();
  const CompiledScenario compiled = build_game(flagship.specs, flagship.pricing, flagship.horizon);
  const Dimensions& dims = compiled.game().dims();
  REQUIRE(dims.cluster_count() == 5);
  int total = 0;
  for (int h = 0; h < 5; ++h) {
    CHECK(dims.block_dim(h) == 264);
    CHECK(dims.agents_in(h) == 10);
    total += dims.block_dim(h);
  }
  CHECK(total == 1320);
  CHECK(dims.agent_count() == 50);
}

TEST_CASE("battery charge follows the leakage recursion") {
  BatteryParams bat;
  bat.a = bat.b = bat.c = 0.1;
  bat.s_min = -5.0;
  bat.s_max = 5.0;
  bat.capacity = 200.0;
  bat.initial_charge = 100.0;
  bat.terminal_tolerance = 1.0;
  bat.smoothing_delta = 0.01;

  SUBCASE("no leakage, no usage: charge is constant") {
    bat.leakage = 1.0;
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(8);
    for (int t = 0; t <= 8; ++t) CHECK(battery_charge(bat, zero, t) == 100.0);
  }

  SUBCASE("pure leakage decays geometrically") {
    bat.leakage = 0.99;
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(4);
    CHECK(battery_charge(bat, zero, 2) == doctest::Approx(98.01).epsilon(1e-14));
  }

  SUBCASE("random schedules match the step-by-step recursion, both conventions") {
    bat.leakage = 0.97;
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Eigen::VectorXd schedule(10);
    for (int t = 0; t < 10; ++t) schedule[t] = unit(rng);
    double draw_then_leak = bat.initial_charge;
    double leak_then_draw = bat.initial_charge;
    for (int t = 1; t <= 10; ++t) {
      draw_then_leak = bat.leakage * (draw_then_leak - schedule[t - 1]);
      leak_then_draw = bat.leakage * leak_then_draw - schedule[t - 1];
      CHECK(battery_charge(bat, schedule, t, ChargeConvention::DrawThenLeak) ==
            doctest::Approx(draw_then_leak).epsilon(1e-13));
      CHECK(battery_charge(bat, schedule, t, ChargeConvention::LeakThenDraw) ==
            doctest::Approx(leak_then_draw).epsilon(1e-13));
    }
    CHECK_THROWS_AS(battery_charge(bat, schedule, 11), DimensionError);
  }
}

TEST_CASE("smoothed battery cost stays close to the absolute-value penalty") {
  BatteryParams bat;
  bat.a = 0.4;
  bat.b = 0.7;
  bat.c = 0.2;
  bat.s_min = -2.0;
  bat.s_max = 2.0;
  bat.capacity = 1.0;
  bat.initial_charge = 0.5;
  bat.leakage = 0.99;
  bat.terminal_tolerance = 0.01;
  bat.smoothing_delta = 1e-3;

  const SmoothedCost at_zero = smoothed_battery_cost(bat, 0.0);
  CHECK(at_zero.value == doctest::Approx(bat.c));  // smoothed term vanishes
  CHECK(at_zero.derivative == 0.0);

  for (double s : {0.5, -0.8, 1.7}) {
    const SmoothedCost cost = smoothed_battery_cost(bat, s);
    const double exact = bat.a * s * s + bat.b * std::abs(s) + bat.c;
    CHECK(std::abs(cost.value - exact) <= bat.b * bat.smoothing_delta);
  }

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unit(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double s = unit(rng);
    const double step = 1e-7 * (1.0 + std::abs(s));
    const double fd = (smoothed_battery_cost(bat, s + step).value - smoothed_battery_cost(bat, s - step).value) /
                      (2.0 * step);
    CHECK(smoothed_battery_cost(bat, s).derivative == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("default demand profile peaks in the evening and scales linearly") {
  const Eigen::VectorXd d = default_demand_profile(24);
  int argmax = 0;
  d.maxCoeff(&argmax);
  CHECK(argmax + 1 >= 17);  // slots are 1-indexed
  CHECK(argmax + 1 <= 21);
  CHECK(d.minCoeff() > 0.0);
  const Eigen::VectorXd doubled = default_demand_profile(24, 2.0);
  CHECK((doubled - 2.0 * d).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("single generator, single slot dispatch solves the two-variable program") {
  // min q p^2 + a g^2 + b g + c subject to p + g = 5, 0 <= p <= 10,
  // 0 <= g <= 10. Stationarity on the balance line: 2 q p = 2 a g + b.
  const int horizon = 1;
  MicrogridSpec spec;
  spec.name = "toy";
  spec.demand = Eigen::VectorXd::Constant(1, 5.0);
  spec.purchase_cap = Eigen::VectorXd::Constant(1, 10.0);
  spec.generators.push_back(GeneratorParams{0.5, 0.2, 0.1, 0.0, 10.0});
  const PricingParams pricing{0.25};
  const CompiledScenario compiled = build_game({spec}, pricing, horizon);
  CHECK(compiled.game().dims().dim() == 2);

  const NashResult nash = centralized_solve(compiled.game(), compiled.sets(), {.tolerance = 1e-13});
  REQUIRE(nash.converged);
  const double p = (2.0 * 0.5 * 5.0 + 0.2) / (2.0 * 0.25 + 2.0 * 0.5);
  CHECK(nash.x_star[0] == doctest::Approx(p).epsilon(1e-8));         // 3.4666...
  CHECK(nash.x_star[1] == doctest::Approx(5.0 - p).epsilon(1e-8));   // 1.5333...
  CHECK(compiled.max_demand_imbalance(nash.x_star) < 1e-9);
}

TEST_CASE("two identical microgrids split the market symmetrically") {
  const int horizon = 4;
  const MicrogridSpec spec = small_spec(2, 1, horizon, 0.4);
  const CompiledScenario compiled = build_game({spec, spec}, PricingParams{0.5}, horizon);
  const NashResult nash = centralized_solve(compiled.game(), compiled.sets(), {.tolerance = 1e-12});
  REQUIRE(nash.converged);
  for (int t = 0; t < horizon; ++t) {
    CHECK(compiled.purchase(nash.x_star, 0, t) ==
          doctest::Approx(compiled.purchase(nash.x_star, 1, t)).epsilon(1e-6));
  }
  CHECK(compiled.max_demand_imbalance(nash.x_star) < 1e-6);
  CHECK(compiled.max_charge_violation(nash.x_star) < 1e-6);
}

TEST_CASE("agent gradients of the compiled game match finite differences") {
  const int horizon = 3;
  const CompiledScenario compiled = build_game({small_spec(1, 1, horizon, 0.5)}, PricingParams{0.3}, horizon);
  const Dimensions& dims = compiled.game().dims();
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  Eigen::VectorXd x(dims.dim());
  for (int d = 0; d < dims.dim(); ++d) x[d] = unit(rng) + 0.5;
  for (int agent = 0; agent < dims.agent_count(); ++agent) {
    const Eigen::VectorXd g = compiled.game().agent_gradient(agent, x);
    const Eigen::VectorXd fd = testsupport::finite_difference_block(
        [&](const Eigen::VectorXd& p) { return compiled.game().agent_value(agent, p); }, x, 0, dims.dim());
    CHECK((g - fd).norm() <= 1e-5 * (1.0 + fd.norm()));
  }
}

TEST_CASE("even main-grid cost splitting leaves the cluster game unchanged") {
  const int horizon = 3;
  const MicrogridSpec spec = small_spec(2, 1, horizon, 0.5);
  const CompiledScenario first = build_game({spec}, PricingParams{0.3}, horizon);
  PowerBuildOptions options;
  options.even_split_main_grid_cost = true;
  const CompiledScenario split = build_game({spec}, PricingParams{0.3}, horizon, options);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd x(first.game().dims().dim());
  for (int d = 0; d < x.size(); ++d) x[d] = unit(rng);
  CHECK((first.game().game_mapping(x) - split.game().game_mapping(x)).norm() < 1e-12);
  CHECK(first.game().cluster_cost(0, x) == doctest::Approx(split.game().cluster_cost(0, x)).epsilon(1e-12));
}

TEST_CASE("compiled games are strongly monotone with positive pricing") {
  const int horizon = 4;
  const CompiledScenario compiled =
      build_game({small_spec(2, 1, horizon, 0.5), small_spec(1, 2, horizon, 0.5)}, PricingParams{0.4}, horizon);
  const Eigen::MatrixXd j = compiled.game().quadratic().assemble_game_jacobian(compiled.game().dims());
  const double mu =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(0.5 * (j + j.transpose())).eigenvalues().minCoeff();
  CHECK(mu > 0.0);
}

TEST_CASE("infeasible fleets are rejected with a witness") {
  const int horizon = 2;
  SUBCASE("battery cannot sustain the leakage-compensating trickle") {
    MicrogridSpec spec = small_spec(1, 1, horizon);
    spec.batteries[0].s_min = -1e-5;
    spec.batteries[0].initial_charge = 1.9;
    CHECK_THROWS_AS(build_game({spec}, PricingParams{0.5}, horizon), InfeasibleError);
  }
  SUBCASE("minimum generation above demand plus charging") {
    MicrogridSpec spec = small_spec(1, 0, horizon, 0.2);
    spec.generators[0].g_min = 50.0;
    spec.generators[0].g_max = 60.0;
    try {
      build_game({spec}, PricingParams{0.5}, horizon);
      FAIL("expected InfeasibleError");
    } catch (const InfeasibleError& e) {
      CHECK(std::string(e.what()).find("minimum generation") != std::string::npos);
    }
  }
}

TEST_CASE("parameter validation rejects bad values") {
  CHECK_THROWS_AS((GeneratorParams{-0.1, 0.2, 0.1, 0.0, 1.0}.validate()), ValidationError);
  CHECK_THROWS_AS((GeneratorParams{0.1, 0.2, 0.1, 2.0, 1.0}.validate()), ValidationError);
  BatteryParams bat{0.5, 0.1, 0.1, -1.0, 1.0, 2.0, 1.0, 0.99, 0.01, 0.1};
  bat.leakage = 1.5;
  CHECK_THROWS_AS(bat.validate(), ValidationError);
  bat.leakage = 0.99;
  bat.s_min = 0.5;
  CHECK_THROWS_AS(bat.validate(), ValidationError);
  CHECK_THROWS_AS((PricingParams{-0.5}.validate()), ValidationError);
  PricingParams{0.0}.validate();  // flagged later by the monotonicity check
}

TEST_CASE("default purchase caps add the batteries' charging headroom") {
  const int horizon = 2;
  MicrogridSpec spec = small_spec(1, 2, horizon, 0.5);
  const CompiledScenario compiled = build_game({spec}, PricingParams{0.5}, horizon);
  const FeasibleSet& set = compiled.sets()[0];
  for (int t = 0; t < horizon; ++t) {
    CHECK(set.bound_upper()[t] == doctest::Approx(spec.demand[t] + 2.0 * 1.0));  // two batteries, s_min = -1
  }
}

TEST_CASE("the printed charge-sum convention is also buildable") {
  const int horizon = 3;
  PowerBuildOptions options;
  options.convention = ChargeConvention::LeakThenDraw;
  const CompiledScenario compiled = build_game({small_spec(1, 1, horizon, 0.5)}, PricingParams{0.5}, horizon, options);
  const NashResult nash = centralized_solve(compiled.game(), compiled.sets(), {.tolerance = 1e-11});
  REQUIRE(nash.converged);
  CHECK(compiled.max_charge_violation(nash.x_star) < 1e-7);
}

TEST_CASE("oracle dispatch on a desk-scale grid balances demand and charge paths") {
  const int horizon = 6;
  const CompiledScenario compiled =
      build_game({small_spec(2, 1, horizon, 0.5)}, PricingParams{0.4}, horizon);
  const NashResult nash = centralized_solve(compiled.game(), compiled.sets(), {.tolerance = 1e-12});
  REQUIRE(nash.converged);
  CHECK(compiled.max_demand_imbalance(nash.x_star) <= 1e-6);
  CHECK(compiled.max_charge_violation(nash.x_star) <= 1e-6);
}
