#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mcgt/constraints.hpp"
#include "mcgt/game.hpp"

namespace mcgt {

/// Fuel generator: quadratic operating cost a g^2 + b g + c per slot and
/// production capacities.
struct GeneratorParams {
  double a = 0.0, b = 0.0, c = 0.0;
  double g_min = 0.0, g_max = 0.0;
  void validate() const;
};

/// Battery: wear cost a s^2 + b|s| + c per slot (|s| smoothed with width
/// delta), power band s_min <= 0 <= s_max, capacity, initial charge, per-slot
/// charge retention (leakage) and the end-of-horizon return tolerance.
/// Positive s discharges, negative s charges.
struct BatteryParams {
  double a = 0.0, b = 0.0, c = 0.0;
  double s_min = 0.0, s_max = 0.0;
  double capacity = 0.0;
  double initial_charge = 0.0;
  double leakage = 1.0;
  double terminal_tolerance = 0.0;
  /// 0 means the default width, 1e-3 * s_max.
  double smoothing_delta = 0.0;

  double effective_delta() const;
  void validate() const;
};

/// Charge bookkeeping convention for the cumulative constraints.
/// DrawThenLeak follows the recursion q(t) = gamma (q(t-1) - s_t): the slot's
/// power leaves before the leakage hits, so every decision carries at least
/// one leakage factor. LeakThenDraw is the inequality as printed,
/// q(t) = gamma q(t-1) - s_t.
enum class ChargeConvention { DrawThenLeak, LeakThenDraw };

struct PricingParams {
  double q = 0.0;  // price slope: unit price = q * total purchased power
  void validate() const;
};

/// One microgrid: its fleet, demand profile and optional per-slot purchase
/// cap (default: demand plus the batteries' worst-case charging draw).
struct MicrogridSpec {
  std::string name;
  std::vector<GeneratorParams> generators;
  std::vector<BatteryParams> batteries;
  Eigen::VectorXd demand;
  Eigen::VectorXd purchase_cap;  // empty: derived
  void validate(int horizon) const;
};

/// Charge at the start of slot t+1 (equivalently after t slots),
/// q(t) = gamma^t q0 - sum_{r=1..t} gamma^{t-r+1} s_r under DrawThenLeak;
/// schedule is 0-indexed over slots 1..T and t ranges 0..T.
double battery_charge(const BatteryParams& params, const Eigen::VectorXd& schedule, int t,
                      ChargeConvention convention = ChargeConvention::DrawThenLeak);

struct SmoothedCost {
  double value = 0.0;
  double derivative = 0.0;
};

/// a s^2 + b (sqrt(s^2 + delta^2) - delta) + c and its derivative; the
/// smooth stand-in for the nondifferentiable a s^2 + b|s| + c.
SmoothedCost smoothed_battery_cost(const BatteryParams& params, double s);

/// Deterministic household-style daily profile: low night base, morning
/// shoulder, evening peak around three quarters of the horizon. Linear in
/// scale.
Eigen::VectorXd default_demand_profile(int horizon, double scale = 1.0);

/// Table-style constraint count: 2T per generator (capacity box sides),
/// 4T + 1 per battery (power box sides, charge-window pairs, one terminal
/// condition). Demand equalities are not counted.
long count_constraints(const MicrogridSpec& spec, int horizon);

struct PowerBuildOptions {
  /// Assign the main-grid coupling cost to every agent at 1/N_h instead of
  /// the cluster's first agent.
  bool even_split_main_grid_cost = false;
  ChargeConvention convention = ChargeConvention::DrawThenLeak;
  FeasibleSetOptions set_options{};
};

/// A compiled day-ahead dispatch game: one cluster per microgrid, one agent
/// per generator and battery, cluster block col(p, g_1..g_ng, s_1..s_ns)
/// over the horizon. Keeps the source specs for layout queries and
/// solution-quality checks.
class CompiledScenario {
 public:
  CompiledScenario(MultiClusterGame game, std::vector<FeasibleSet> sets, std::vector<MicrogridSpec> specs,
                   PricingParams pricing, int horizon, PowerBuildOptions options);

  const MultiClusterGame& game() const { return game_; }
  const std::vector<FeasibleSet>& sets() const { return sets_; }
  const std::vector<MicrogridSpec>& specs() const { return specs_; }
  const PricingParams& pricing() const { return pricing_; }
  int horizon() const { return horizon_; }
  const PowerBuildOptions& options() const { return options_; }

  // Local offsets inside a cluster block; t is 0-indexed.
  int local_p(int t) const { return t; }
  int local_g(int generator, int t) const { return horizon_ * (1 + generator) + t; }
  int local_s(int cluster, int battery, int t) const {
    return horizon_ * (1 + static_cast<int>(specs_[cluster].generators.size()) + battery) + t;
  }

  double purchase(const Eigen::VectorXd& x, int cluster, int t) const;
  Eigen::VectorXd battery_schedule(const Eigen::VectorXd& x, int cluster, int battery) const;

  /// max_t |p^h(t) + sum_i g_i(t) + sum_j s_j(t) - d^h(t)| over all clusters.
  double max_demand_imbalance(const Eigen::VectorXd& x) const;
  /// Worst violation of 0 <= q_j(t) <= capacity and |q_j(T) - q_j(0)| <= eps.
  double max_charge_violation(const Eigen::VectorXd& x) const;
  /// Fraction of total charging power drawn in each grid's lowest-demand
  /// third of slots. 1.0 when nothing charges.
  double charging_low_demand_fraction(const Eigen::VectorXd& x) const;
  double total_charging(const Eigen::VectorXd& x) const;
  /// Smallest per-grid total purchase over the top ceil(T/5) demand slots,
  /// counting only grids whose generator capacity is capped below demand
  /// somewhere in that window (+inf when no grid is capped there).
  double min_peak_purchase(const Eigen::VectorXd& x) const;

 private:
  MultiClusterGame game_;
  std::vector<FeasibleSet> sets_;
  std::vector<MicrogridSpec> specs_;
  PricingParams pricing_;
  int horizon_;
  PowerBuildOptions options_;
};

/// Compile microgrids into a multi-cluster game plus per-cluster feasible
/// sets. Certifies feasibility constructively and attaches the quadratic
/// structure (with smoothing curvature bounds) for exact constants.
CompiledScenario build_game(std::vector<MicrogridSpec> specs, PricingParams pricing, int horizon,
                            PowerBuildOptions options = {});

struct FlagshipScenario {
  std::vector<MicrogridSpec> specs;
  PricingParams pricing;
  int horizon = 24;
};

/// The five-microgrid, fifty-agent reference setup (7/3, 5/5, 3/7, 0/10 and
/// 10/0 generators/batteries, T = 24, equal demand). Shipped parameters are
/// representative, chosen so the compiled game is well conditioned.
FlagshipScenario make_flagship_scenario();

}  // namespace mcgt
