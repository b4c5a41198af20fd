#include "mcgt/power.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace mcgt {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double trickle_charge(const BatteryParams& b, ChargeConvention convention) {
  // Constant charging power that exactly offsets leakage, keeping q(t) = q0.
  return convention == ChargeConvention::DrawThenLeak ? b.initial_charge * (1.0 - b.leakage) / b.leakage
                                                      : b.initial_charge * (1.0 - b.leakage);
}

// Coefficient of s_r (1-indexed r <= t) in the cumulative charge q(t).
double charge_coeff(const BatteryParams& b, int t, int r, ChargeConvention convention) {
  const int power = convention == ChargeConvention::DrawThenLeak ? t - r + 1 : t - r;
  return std::pow(b.leakage, power);
}

}  // namespace

void GeneratorParams::validate() const {
  if (!(a > 0.0) || !(b > 0.0) || !(c > 0.0)) {
    throw ValidationError("GeneratorParams: cost coefficients a, b, c must be positive");
  }
  if (g_min < 0.0) throw ValidationError("GeneratorParams: lower capacity must be nonnegative");
  if (!(g_min <= g_max)) throw ValidationError("GeneratorParams: g_min must not exceed g_max");
}

double BatteryParams::effective_delta() const { return smoothing_delta > 0.0 ? smoothing_delta : 1e-3 * s_max; }

void BatteryParams::validate() const {
  if (!(a > 0.0) || !(b > 0.0) || !(c > 0.0)) {
    throw ValidationError("BatteryParams: cost coefficients a, b, c must be positive");
  }
  if (!(s_min <= 0.0 && 0.0 <= s_max)) throw ValidationError("BatteryParams: power band must contain 0");
  if (!(capacity > 0.0)) throw ValidationError("BatteryParams: capacity must be positive");
  if (initial_charge < 0.0 || initial_charge > capacity) {
    throw ValidationError("BatteryParams: initial charge must lie in [0, capacity]");
  }
  if (!(leakage > 0.0 && leakage <= 1.0)) throw ValidationError("BatteryParams: leakage retention must be in (0, 1]");
  if (!(terminal_tolerance > 0.0)) throw ValidationError("BatteryParams: terminal tolerance must be positive");
  if (!(effective_delta() > 0.0)) {
    throw ValidationError("BatteryParams: smoothing width must be positive (set smoothing_delta or s_max)");
  }
}

void PricingParams::validate() const {
  // q = 0 passes here so the strong-monotonicity validator can flag the
  // coupling-free game; negative slopes are outright invalid.
  if (q < 0.0) throw ValidationError("PricingParams: price slope q must not be negative");
}

void MicrogridSpec::validate(int horizon) const {
  if (horizon < 1) throw ValidationError("MicrogridSpec: horizon must be >= 1");
  if (generators.empty() && batteries.empty()) {
    throw ValidationError("MicrogridSpec '" + name + "': needs at least one generator or battery");
  }
  for (const auto& g : generators) g.validate();
  for (const auto& b : batteries) b.validate();
  if (demand.size() != horizon) throw ValidationError("MicrogridSpec '" + name + "': demand length must equal T");
  for (int t = 0; t < horizon; ++t) {
    if (demand[t] < 0.0) throw ValidationError("MicrogridSpec '" + name + "': demand must be nonnegative");
  }
  if (purchase_cap.size() != 0 && purchase_cap.size() != horizon) {
    throw ValidationError("MicrogridSpec '" + name + "': purchase cap length must equal T");
  }
}

double battery_charge(const BatteryParams& params, const Eigen::VectorXd& schedule, int t,
                      ChargeConvention convention) {
  const int horizon = static_cast<int>(schedule.size());
  if (t < 0 || t > horizon) throw DimensionError("battery_charge: t must lie in [0, T]");
  double q = std::pow(params.leakage, t) * params.initial_charge;
  for (int r = 1; r <= t; ++r) q -= charge_coeff(params, t, r, convention) * schedule[r - 1];
  return q;
}

SmoothedCost smoothed_battery_cost(const BatteryParams& params, double s) {
  const double delta = params.effective_delta();
  const double root = std::hypot(s, delta);
  return SmoothedCost{params.a * s * s + params.b * (root - delta) + params.c,
                      2.0 * params.a * s + params.b * s / root};
}

Eigen::VectorXd default_demand_profile(int horizon, double scale) {
  if (horizon < 1) throw ValidationError("default_demand_profile: horizon must be >= 1");
  Eigen::VectorXd d(horizon);
  for (int t = 1; t <= horizon; ++t) {
    const double u = static_cast<double>(t) / horizon;
    const double morning = std::exp(-0.5 * std::pow((u - 0.33) / 0.10, 2));
    const double evening = std::exp(-0.5 * std::pow((u - 0.79) / 0.08, 2));
    d[t - 1] = scale * (3.0 + 1.4 * morning + 3.2 * evening);
  }
  return d;
}

long count_constraints(const MicrogridSpec& spec, int horizon) {
  const long t = horizon;
  return static_cast<long>(spec.generators.size()) * 2 * t +
         static_cast<long>(spec.batteries.size()) * (4 * t + 1);
}

CompiledScenario::CompiledScenario(MultiClusterGame game, std::vector<FeasibleSet> sets,
                                   std::vector<MicrogridSpec> specs, PricingParams pricing, int horizon,
                                   PowerBuildOptions options)
    : game_(std::move(game)),
      sets_(std::move(sets)),
      specs_(std::move(specs)),
      pricing_(pricing),
      horizon_(horizon),
      options_(options) {}

double CompiledScenario::purchase(const Eigen::VectorXd& x, int cluster, int t) const {
  return x[game_.dims().block_offset(cluster) + local_p(t)];
}

Eigen::VectorXd CompiledScenario::battery_schedule(const Eigen::VectorXd& x, int cluster, int battery) const {
  Eigen::VectorXd s(horizon_);
  for (int t = 0; t < horizon_; ++t) {
    s[t] = x[game_.dims().block_offset(cluster) + local_s(cluster, battery, t)];
  }
  return s;
}

double CompiledScenario::max_demand_imbalance(const Eigen::VectorXd& x) const {
  const Dimensions& dims = game_.dims();
  double worst = 0.0;
  for (int h = 0; h < dims.cluster_count(); ++h) {
    for (int t = 0; t < horizon_; ++t) {
      double supplied = x[dims.block_offset(h) + local_p(t)];
      for (std::size_t i = 0; i < specs_[h].generators.size(); ++i) {
        supplied += x[dims.block_offset(h) + local_g(static_cast<int>(i), t)];
      }
      for (std::size_t j = 0; j < specs_[h].batteries.size(); ++j) {
        supplied += x[dims.block_offset(h) + local_s(h, static_cast<int>(j), t)];
      }
      worst = std::max(worst, std::abs(supplied - specs_[h].demand[t]));
    }
  }
  return worst;
}

double CompiledScenario::max_charge_violation(const Eigen::VectorXd& x) const {
  double worst = 0.0;
  for (int h = 0; h < game_.dims().cluster_count(); ++h) {
    for (std::size_t j = 0; j < specs_[h].batteries.size(); ++j) {
      const BatteryParams& bat = specs_[h].batteries[j];
      const Eigen::VectorXd s = battery_schedule(x, h, static_cast<int>(j));
      for (int t = 1; t <= horizon_; ++t) {
        const double q = battery_charge(bat, s, t, options_.convention);
        worst = std::max({worst, -q, q - bat.capacity});
      }
      const double terminal = std::abs(battery_charge(bat, s, horizon_, options_.convention) - bat.initial_charge);
      worst = std::max(worst, terminal - bat.terminal_tolerance);
    }
  }
  return worst;
}

double CompiledScenario::total_charging(const Eigen::VectorXd& x) const {
  double total = 0.0;
  for (int h = 0; h < game_.dims().cluster_count(); ++h) {
    for (std::size_t j = 0; j < specs_[h].batteries.size(); ++j) {
      const Eigen::VectorXd s = battery_schedule(x, h, static_cast<int>(j));
      for (int t = 0; t < horizon_; ++t) total += std::max(0.0, -s[t]);
    }
  }
  return total;
}

double CompiledScenario::charging_low_demand_fraction(const Eigen::VectorXd& x) const {
  double total = 0.0, low = 0.0;
  for (int h = 0; h < game_.dims().cluster_count(); ++h) {
    if (specs_[h].batteries.empty()) continue;
    // This grid's lowest-demand third of the horizon.
    std::vector<int> order(horizon_);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return specs_[h].demand[a] < specs_[h].demand[b]; });
    const int third = (horizon_ + 2) / 3;
    std::vector<char> in_low(horizon_, 0);
    for (int k = 0; k < third; ++k) in_low[order[k]] = 1;
    for (std::size_t j = 0; j < specs_[h].batteries.size(); ++j) {
      const Eigen::VectorXd s = battery_schedule(x, h, static_cast<int>(j));
      for (int t = 0; t < horizon_; ++t) {
        const double charging = std::max(0.0, -s[t]);
        total += charging;
        if (in_low[t]) low += charging;
      }
    }
  }
  return total > 0.0 ? low / total : 1.0;
}

double CompiledScenario::min_peak_purchase(const Eigen::VectorXd& x) const {
  double worst = kInf;
  const int window = std::max(1, (horizon_ + 4) / 5);
  for (int h = 0; h < game_.dims().cluster_count(); ++h) {
    double capacity = 0.0;
    for (const auto& g : specs_[h].generators) capacity += g.g_max;
    std::vector<int> order(horizon_);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return specs_[h].demand[a] > specs_[h].demand[b]; });
    bool capped = false;
    double total = 0.0;
    for (int k = 0; k < window; ++k) {
      const int t = order[k];
      if (capacity < specs_[h].demand[t]) capped = true;
      total += purchase(x, h, t);
    }
    if (capped) worst = std::min(worst, total);
  }
  return worst;
}

namespace {

/// Constructive feasibility: constant trickle charge holds every battery at
/// its initial charge, then generators and purchases cover demand plus the
/// charging load slot by slot. Returns the feasible block or explains the
/// violated constraint.
Eigen::VectorXd construct_feasible_point(const MicrogridSpec& spec, const Eigen::VectorXd& purchase_cap,
                                         int horizon, ChargeConvention convention) {
  const int ng = static_cast<int>(spec.generators.size());
  const int ns = static_cast<int>(spec.batteries.size());
  Eigen::VectorXd z = Eigen::VectorXd::Zero(horizon * (1 + ng + ns));

  double total_trickle = 0.0;
  for (int j = 0; j < ns; ++j) {
    const BatteryParams& bat = spec.batteries[j];
    const double c = trickle_charge(bat, convention);
    if (-c < bat.s_min) {
      std::ostringstream os;
      os << "MicrogridSpec '" << spec.name << "': battery " << j << " cannot sustain the leakage-compensating "
         << "charge rate " << c << " (s_min = " << bat.s_min << ")";
      throw InfeasibleError(os.str());
    }
    total_trickle += c;
    for (int t = 0; t < horizon; ++t) z[horizon * (1 + ng + j) + t] = -c;
  }

  for (int t = 0; t < horizon; ++t) {
    double remaining = spec.demand[t] + total_trickle;
    double min_gen = 0.0;
    for (const auto& g : spec.generators) min_gen += g.g_min;
    if (min_gen > remaining + 1e-9) {
      std::ostringstream os;
      os << "MicrogridSpec '" << spec.name << "': slot " << t + 1 << " minimum generation " << min_gen
         << " exceeds demand plus charging load " << remaining;
      throw InfeasibleError(os.str());
    }
    for (int i = 0; i < ng; ++i) z[horizon * (1 + i) + t] = spec.generators[i].g_min;
    remaining -= min_gen;
    const double p = std::min(remaining, purchase_cap[t]);
    z[t] = p;
    remaining -= p;
    for (int i = 0; i < ng && remaining > 0.0; ++i) {
      const double add = std::min(remaining, spec.generators[i].g_max - spec.generators[i].g_min);
      z[horizon * (1 + i) + t] += add;
      remaining -= add;
    }
    if (remaining > 1e-9) {
      std::ostringstream os;
      os << "MicrogridSpec '" << spec.name << "': slot " << t + 1 << " demand plus charging load cannot be met; "
         << "short by " << remaining << " after exhausting purchases and generation";
      throw InfeasibleError(os.str());
    }
  }
  return z;
}

}  // namespace

CompiledScenario build_game(std::vector<MicrogridSpec> specs, PricingParams pricing, int horizon,
                            PowerBuildOptions options) {
  pricing.validate();
  if (specs.empty()) throw ValidationError("build_game: need at least one microgrid");
  for (auto& spec : specs) spec.validate(horizon);

  const int clusters = static_cast<int>(specs.size());
  std::vector<int> agents(clusters), blocks(clusters);
  for (int h = 0; h < clusters; ++h) {
    const int ng = static_cast<int>(specs[h].generators.size());
    const int ns = static_cast<int>(specs[h].batteries.size());
    agents[h] = ng + ns;
    blocks[h] = horizon * (1 + ng + ns);
  }
  Dimensions dims(agents, blocks);

  // Per-slot purchase caps: demand plus the batteries' worst-case charging
  // draw unless the spec pins its own cap.
  std::vector<Eigen::VectorXd> caps(clusters);
  for (int h = 0; h < clusters; ++h) {
    if (specs[h].purchase_cap.size() == horizon) {
      caps[h] = specs[h].purchase_cap;
    } else {
      double charge_draw = 0.0;
      for (const auto& bat : specs[h].batteries) charge_draw += -bat.s_min;
      caps[h] = specs[h].demand.array() + charge_draw;
    }
  }

  // Feasible sets: one finite box over the whole block, one demand-balance
  // hyperplane per slot, charge window and terminal halfspaces per battery.
  std::vector<FeasibleSet> sets;
  sets.reserve(clusters);
  for (int h = 0; h < clusters; ++h) {
    const int ng = static_cast<int>(specs[h].generators.size());
    const int ns = static_cast<int>(specs[h].batteries.size());
    const int nh = dims.block_dim(h);
    Eigen::VectorXd lo(nh), hi(nh);
    for (int t = 0; t < horizon; ++t) {
      lo[t] = 0.0;
      hi[t] = caps[h][t];
    }
    for (int i = 0; i < ng; ++i) {
      for (int t = 0; t < horizon; ++t) {
        lo[horizon * (1 + i) + t] = specs[h].generators[i].g_min;
        hi[horizon * (1 + i) + t] = specs[h].generators[i].g_max;
      }
    }
    for (int j = 0; j < ns; ++j) {
      for (int t = 0; t < horizon; ++t) {
        lo[horizon * (1 + ng + j) + t] = specs[h].batteries[j].s_min;
        hi[horizon * (1 + ng + j) + t] = specs[h].batteries[j].s_max;
      }
    }
    std::vector<MemberSet> members;
    members.emplace_back(BoxSet(lo, hi));

    for (int t = 0; t < horizon; ++t) {
      Eigen::VectorXd normal = Eigen::VectorXd::Zero(nh);
      normal[t] = 1.0;
      for (int i = 0; i < ng; ++i) normal[horizon * (1 + i) + t] = 1.0;
      for (int j = 0; j < ns; ++j) normal[horizon * (1 + ng + j) + t] = 1.0;
      members.emplace_back(Hyperplane(normal, specs[h].demand[t]));
    }

    for (int j = 0; j < ns; ++j) {
      const BatteryParams& bat = specs[h].batteries[j];
      const int base = horizon * (1 + ng + j);
      for (int t = 1; t <= horizon; ++t) {
        Eigen::VectorXd coeff = Eigen::VectorXd::Zero(nh);
        for (int r = 1; r <= t; ++r) coeff[base + r - 1] = charge_coeff(bat, t, r, options.convention);
        const double leaked = std::pow(bat.leakage, t) * bat.initial_charge;
        members.emplace_back(Halfspace(coeff, leaked));                    // q(t) >= 0
        members.emplace_back(Halfspace(-coeff, bat.capacity - leaked));    // q(t) <= capacity
      }
      Eigen::VectorXd coeff = Eigen::VectorXd::Zero(nh);
      for (int r = 1; r <= horizon; ++r) coeff[base + r - 1] = charge_coeff(bat, horizon, r, options.convention);
      const double leaked = std::pow(bat.leakage, horizon) * bat.initial_charge;
      // |q(T) - q0| <= eps split into its two sides.
      members.emplace_back(Halfspace(coeff, bat.terminal_tolerance - bat.initial_charge + leaked));
      members.emplace_back(Halfspace(-coeff, bat.terminal_tolerance + bat.initial_charge - leaked));
    }

    FeasibleSetOptions set_options = options.set_options;
    set_options.feasible_hint = construct_feasible_point(specs[h], caps[h], horizon, options.convention);
    sets.emplace_back(std::move(members), std::move(set_options));
  }

  // Agent costs and the quadratic structure. The main-grid coupling cost
  // belongs to the cluster's first agent unless even splitting is requested.
  std::vector<int> p_offsets(clusters);
  for (int h = 0; h < clusters; ++h) p_offsets[h] = dims.block_offset(h);
  const double q_price = pricing.q;

  std::vector<std::vector<AgentCost>> costs(clusters);
  QuadraticStructure quad;
  for (int h = 0; h < clusters; ++h) {
    const int ng = static_cast<int>(specs[h].generators.size());
    const int ns = static_cast<int>(specs[h].batteries.size());
    const int nh = dims.block_dim(h);
    const int block = dims.block_offset(h);
    for (int a = 0; a < agents[h]; ++a) {
      const bool is_generator = a < ng;
      const double share = options.even_split_main_grid_cost ? 1.0 / agents[h] : (a == 0 ? 1.0 : 0.0);

      AgentCost cost;
      Eigen::SparseMatrix<double> jac(nh, dims.dim());
      Eigen::VectorXd affine = Eigen::VectorXd::Zero(nh);

      auto main_grid_value = [=](const Eigen::VectorXd& x) {
        double v = 0.0;
        for (int t = 0; t < horizon; ++t) {
          double total = 0.0;
          for (int l = 0; l < clusters; ++l) total += x[p_offsets[l] + t];
          v += q_price * total * x[block + t];
        }
        return share * v;
      };
      auto main_grid_gradient = [=](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        for (int t = 0; t < horizon; ++t) {
          double total = 0.0;
          for (int l = 0; l < clusters; ++l) total += x[p_offsets[l] + t];
          g[t] += share * q_price * (total + x[block + t]);
        }
      };
      if (share > 0.0) {
        for (int t = 0; t < horizon; ++t) {
          for (int l = 0; l < clusters; ++l) jac.coeffRef(t, p_offsets[l] + t) += share * q_price;
          jac.coeffRef(t, block + t) += share * q_price;
        }
      }

      if (is_generator) {
        const GeneratorParams gen = specs[h].generators[a];
        const int base = horizon * (1 + a);
        cost.value = [=](const Eigen::VectorXd& x) {
          double v = share > 0.0 ? main_grid_value(x) : 0.0;
          for (int t = 0; t < horizon; ++t) {
            const double g = x[block + base + t];
            v += gen.a * g * g + gen.b * g + gen.c;
          }
          return v;
        };
        cost.gradient = [=](const Eigen::VectorXd& x) {
          Eigen::VectorXd g = Eigen::VectorXd::Zero(nh);
          if (share > 0.0) main_grid_gradient(x, g);
          for (int t = 0; t < horizon; ++t) g[base + t] += 2.0 * gen.a * x[block + base + t] + gen.b;
          return g;
        };
        for (int t = 0; t < horizon; ++t) {
          jac.coeffRef(base + t, block + base + t) += 2.0 * gen.a;
          affine[base + t] += gen.b;
        }
      } else {
        const BatteryParams bat = specs[h].batteries[a - ng];
        const int base = horizon * (1 + ng + (a - ng));
        cost.value = [=](const Eigen::VectorXd& x) {
          double v = share > 0.0 ? main_grid_value(x) : 0.0;
          for (int t = 0; t < horizon; ++t) v += smoothed_battery_cost(bat, x[block + base + t]).value;
          return v;
        };
        cost.gradient = [=](const Eigen::VectorXd& x) {
          Eigen::VectorXd g = Eigen::VectorXd::Zero(nh);
          if (share > 0.0) main_grid_gradient(x, g);
          for (int t = 0; t < horizon; ++t) g[base + t] += smoothed_battery_cost(bat, x[block + base + t]).derivative;
          return g;
        };
        const int agent_index = dims.first_agent(h) + a;
        for (int t = 0; t < horizon; ++t) {
          jac.coeffRef(base + t, block + base + t) += 2.0 * bat.a;
          quad.curvature_terms.push_back(
              CurvatureTerm{agent_index, block + base + t, bat.b / bat.effective_delta()});
        }
      }

      jac.makeCompressed();
      quad.grad_jacobian.push_back(std::move(jac));
      quad.grad_affine.push_back(std::move(affine));
      costs[h].push_back(std::move(cost));
    }
  }

  MultiClusterGame game(dims, std::move(costs));
  game.set_quadratic(std::move(quad));
  return CompiledScenario(std::move(game), std::move(sets), std::move(specs), pricing, horizon, options);
}

FlagshipScenario make_flagship_scenario() {
  FlagshipScenario flagship;
  flagship.horizon = 24;
  flagship.pricing = PricingParams{1.0};
  const Eigen::VectorXd demand = default_demand_profile(flagship.horizon, 1.0);
  const double peak = demand.maxCoeff();

  const std::vector<std::pair<int, int>> fleet = {{7, 3}, {5, 5}, {3, 7}, {0, 10}, {10, 0}};
  for (std::size_t m = 0; m < fleet.size(); ++m) {
    MicrogridSpec spec;
    spec.name = "MG" + std::to_string(m + 1);
    spec.demand = demand;
    const auto [ng, ns] = fleet[m];
    for (int i = 0; i < ng; ++i) {
      GeneratorParams gen;
      gen.a = 0.55 + 0.04 * (i % 5);
      gen.b = 0.40 + 0.03 * (i % 7);
      gen.c = 0.10;
      gen.g_min = 0.0;
      // Combined capacity sits below peak demand: the main grid must be
      // tapped in the high-consumption slots.
      gen.g_max = 0.65 * peak / ng;
      spec.generators.push_back(gen);
    }
    for (int j = 0; j < ns; ++j) {
      BatteryParams bat;
      bat.a = 0.60 + 0.04 * (j % 5);
      bat.b = 0.05 + 0.005 * (j % 3);
      bat.c = 0.05;
      // Power-limited storage: the combined band stays below the peak-window
      // shortfall, so batteries shave the peak but cannot erase the
      // purchases there, while the generous capacity keeps the cumulative
      // charge windows slack at the solution.
      bat.s_max = 0.18 * peak / ns;
      bat.s_min = -bat.s_max;
      bat.capacity = 12.0 * bat.s_max;
      bat.initial_charge = 0.5 * bat.capacity;
      bat.leakage = 0.99;
      bat.terminal_tolerance = 0.01;
      // Wider than the 1e-3 s_max default: keeps the smoothing curvature
      // b/delta tame so alpha = 0.02 stays stable near s = 0.
      bat.smoothing_delta = 0.15 * bat.s_max;
      spec.batteries.push_back(bat);
    }
    flagship.specs.push_back(std::move(spec));
  }
  return flagship;
}

}  // namespace mcgt
