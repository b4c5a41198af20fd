#include "mcgt/theory.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace mcgt {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double spectral_norm(const Eigen::MatrixXd& m) {
  // sigma_max via the Gram matrix of the thinner side.
  if (m.rows() <= m.cols()) {
    Eigen::MatrixXd g = m * m.transpose();
    return std::sqrt(std::max(0.0, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g).eigenvalues().maxCoeff()));
  }
  Eigen::MatrixXd g = m.transpose() * m;
  return std::sqrt(std::max(0.0, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g).eigenvalues().maxCoeff()));
}

Eigen::VectorXd random_point_in(const std::vector<FeasibleSet>& sets, std::mt19937_64& rng) {
  int n = 0;
  for (const auto& s : sets) n += s.dim();
  Eigen::VectorXd x(n);
  int off = 0;
  for (const auto& s : sets) {
    for (int d = 0; d < s.dim(); ++d) {
      std::uniform_real_distribution<double> u(s.bound_lower()[d], s.bound_upper()[d]);
      x[off + d] = u(rng);
    }
    off += s.dim();
  }
  return x;
}

}  // namespace

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::Exact: return "exact";
    case Provenance::Sampled: return "sampled";
    case Provenance::UserSupplied: return "user-supplied";
  }
  return "?";
}

void ProblemConstants::validate() const {
  if (!(mu > 0.0)) throw ValidationError("ProblemConstants: mu must be positive");
  if (!(L0 > 0.0) || !(L > 0.0) || !(L1 > 0.0)) throw ValidationError("ProblemConstants: Lipschitz constants must be positive");
  if (L < mu - 1e-12 || L > L0 + 1e-12) throw ValidationError("ProblemConstants: L must lie in [mu, L0]");
  if (sigma < 0.0 || sigma >= 1.0) throw ValidationError("ProblemConstants: sigma must lie in [0, 1)");
  if (sigma_v < 0.0 || sigma_v >= 1.0) throw ValidationError("ProblemConstants: sigma_V must lie in [0, 1)");
  if (total_agents < 1) throw ValidationError("ProblemConstants: agent count missing");
}

ProblemConstants estimate_constants(const MultiClusterGame& game, const std::vector<FeasibleSet>& sets,
                                    const CommTopology& topo, ConstantsMode mode,
                                    const ConstantsOptions& options) {
  const Dimensions& dims = game.dims();
  if (static_cast<int>(sets.size()) != dims.cluster_count()) {
    throw DimensionError("estimate_constants: need one feasible set per cluster");
  }
  ProblemConstants c;
  c.total_agents = dims.agent_count();
  c.sigma = topo.sigma();
  c.sigma_v = topo.sigma_v();
  c.norm_i_minus_r = 0.0;
  for (int h = 0; h < dims.cluster_count(); ++h) {
    if (dims.agents_in(h) > 1) c.norm_i_minus_r = 1.0;
  }

  std::mt19937_64 rng(options.seed);

  if (mode == ConstantsMode::ExactQuadratic) {
    if (!game.has_quadratic()) {
      throw ValidationError("estimate_constants: exact-quadratic mode needs a quadratic game structure");
    }
    const QuadraticStructure& quad = game.quadratic();
    const Eigen::MatrixXd j = quad.assemble_game_jacobian(dims);
    const double curvature = quad.max_mapping_curvature(dims);
    c.mu = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(0.5 * (j + j.transpose())).eigenvalues().minCoeff();
    c.L0 = spectral_norm(j) + curvature;
    c.mu_src = Provenance::Exact;
    c.l0_src = Provenance::Exact;

    double l1 = 0.0;
    for (int i = 0; i < dims.agent_count(); ++i) {
      l1 = std::max(l1, spectral_norm(Eigen::MatrixXd(quad.grad_jacobian[i])) + quad.max_agent_curvature(i));
    }
    c.L1 = l1;
    c.l1_src = Provenance::Exact;

    // Extended-mapping Lipschitz constant: exact spectral norm when the
    // stacked Jacobian is desk-scale and the game is purely quadratic,
    // otherwise sampled difference quotients.
    const bool small = dims.stacked_dim() <= 4000;
    if (quad.pure_quadratic() && small) {
      Eigen::MatrixXd jext = Eigen::MatrixXd::Zero(dims.tracking_dim(), dims.stacked_dim());
      for (int h = 0; h < dims.cluster_count(); ++h) {
        const int nh = dims.block_dim(h);
        for (int jloc = 0; jloc < dims.agents_in(h); ++jloc) {
          const int agent = dims.first_agent(h) + jloc;
          const Eigen::MatrixXd rows = Eigen::MatrixXd(quad.grad_jacobian[agent]) / dims.agents_in(h);
          for (int copy = 0; copy < dims.agents_in(h); ++copy) {
            jext.block(dims.tracking_offset(h) + copy * nh, static_cast<long>(agent) * dims.dim(), nh,
                       dims.dim()) += rows;
          }
        }
      }
      c.raw_extended_lipschitz = spectral_norm(jext);
      c.l_src = Provenance::Exact;
    } else {
      double best = 0.0;
      for (int s = 0; s < options.samples; ++s) {
        Eigen::VectorXd xa(dims.stacked_dim()), xb(dims.stacked_dim());
        for (int i = 0; i < dims.agent_count(); ++i) {
          xa.segment(static_cast<long>(i) * dims.dim(), dims.dim()) = random_point_in(sets, rng);
          xb.segment(static_cast<long>(i) * dims.dim(), dims.dim()) = random_point_in(sets, rng);
        }
        StackedEstimate ea(dims, xa), eb(dims, xb);
        const double dx = (xa - xb).norm();
        if (dx < 1e-12) continue;
        best = std::max(best, (game.extended_mapping(ea) - game.extended_mapping(eb)).norm() / dx);
      }
      c.raw_extended_lipschitz = best;
      c.l_src = Provenance::Sampled;
    }
  } else {
    double l0 = 0.0, mu = kInf;
    for (int s = 0; s < options.samples; ++s) {
      const Eigen::VectorXd xa = random_point_in(sets, rng);
      const Eigen::VectorXd xb = random_point_in(sets, rng);
      const double dx = (xa - xb).norm();
      if (dx < 1e-12) continue;
      const Eigen::VectorXd dm = game.game_mapping(xa) - game.game_mapping(xb);
      l0 = std::max(l0, dm.norm() / dx);
      mu = std::min(mu, (xa - xb).dot(dm) / (dx * dx));
    }
    c.mu = mu;
    c.L0 = l0;
    c.mu_src = Provenance::Sampled;
    c.l0_src = Provenance::Sampled;

    double l1 = 0.0;
    for (int i = 0; i < dims.agent_count(); ++i) {
      for (int s = 0; s < std::max(100, options.samples / dims.agent_count()); ++s) {
        const Eigen::VectorXd xa = random_point_in(sets, rng);
        const Eigen::VectorXd xb = random_point_in(sets, rng);
        const double dx = (xa - xb).norm();
        if (dx < 1e-12) continue;
        l1 = std::max(l1, (game.agent_gradient(i, xa) - game.agent_gradient(i, xb)).norm() / dx);
      }
    }
    c.L1 = l1;
    c.l1_src = Provenance::Sampled;

    double best = 0.0;
    for (int s = 0; s < options.samples; ++s) {
      Eigen::VectorXd xa(dims.stacked_dim()), xb(dims.stacked_dim());
      for (int i = 0; i < dims.agent_count(); ++i) {
        xa.segment(static_cast<long>(i) * dims.dim(), dims.dim()) = random_point_in(sets, rng);
        xb.segment(static_cast<long>(i) * dims.dim(), dims.dim()) = random_point_in(sets, rng);
      }
      StackedEstimate ea(dims, xa), eb(dims, xb);
      const double dx = (xa - xb).norm();
      if (dx < 1e-12) continue;
      best = std::max(best, (game.extended_mapping(ea) - game.extended_mapping(eb)).norm() / dx);
    }
    c.raw_extended_lipschitz = best;
    c.l_src = Provenance::Sampled;
  }

  if (!(c.mu > 0.0)) {
    throw ValidationError("estimate_constants: game mapping is not strongly monotone (mu <= 0)");
  }
  c.lemma2_violated =
      c.raw_extended_lipschitz > c.L0 * (1.0 + 1e-9) || c.raw_extended_lipschitz < c.mu * (1.0 - 1e-9);
  c.L = std::min(std::max(c.raw_extended_lipschitz, c.mu), c.L0);
  c.validate();
  return c;
}

Eigen::Matrix2d matrix_a(double alpha, const ProblemConstants& c) {
  if (alpha < 0.0) throw ValidationError("matrix_a: alpha must be nonnegative");
  const double n = c.total_agents;
  const double rn = std::sqrt(n);
  Eigen::Matrix2d a;
  const double off = alpha * alpha * c.L * c.L0 / rn + alpha * (c.L + c.sigma * c.L0 / rn);
  a(0, 0) = alpha * alpha * c.L0 * c.L0 / n - 2.0 * alpha * c.mu / n + 1.0;
  a(0, 1) = off;
  a(1, 0) = off;
  a(1, 1) = alpha * alpha * c.L * c.L + 2.0 * alpha * c.sigma * c.sigma * c.L + c.sigma * c.sigma;
  return a;
}

double spectral_radius_2x2(const Eigen::Matrix2d& m) {
  const double tr = m(0, 0) + m(1, 1);
  const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  const double disc = tr * tr - 4.0 * det;
  if (disc >= 0.0) {
    const double root = std::sqrt(disc);
    return std::max(std::abs(0.5 * (tr + root)), std::abs(0.5 * (tr - root)));
  }
  return std::sqrt(det);  // complex pair, |lambda| = sqrt(det)
}

namespace {

// Conditions from the Proposition-3 proof under which sqrt(rho(A(alpha))) < 1:
// A symmetric positive definite via diagonal dominance plus Sylvester on I-A.
bool a_conditions_hold(double alpha, const ProblemConstants& c) {
  const Eigen::Matrix2d a = matrix_a(alpha, c);
  const bool dominance = a(0, 0) > a(0, 1) && a(1, 1) > a(0, 1);
  const bool sylvester_11 = a(0, 0) < 1.0;
  const bool sylvester_det = (1.0 - a(0, 0)) * (1.0 - a(1, 1)) - a(0, 1) * a(1, 0) > 0.0;
  return dominance && sylvester_11 && sylvester_det;
}

}  // namespace

double alpha_a_bound(const ProblemConstants& c) {
  c.validate();
  const double alpha_max = 2.0 * c.mu / (c.L0 * c.L0);
  const int grid = 4096;
  int first_bad = -1;
  for (int i = 1; i <= grid; ++i) {
    if (!a_conditions_hold(alpha_max * i / grid, c)) {
      first_bad = i;
      break;
    }
  }
  if (first_bad == -1) return alpha_max;
  double lo = alpha_max * (first_bad - 1) / grid;
  double hi = alpha_max * first_bad / grid;
  if (first_bad == 1) {
    // Nothing valid on the first grid cell; probe smaller scales before
    // declaring the constants degenerate.
    double probe = hi;
    bool found = false;
    for (int k = 0; k < 48; ++k) {
      probe *= 0.5;
      if (a_conditions_hold(probe, c)) {
        lo = probe;
        found = true;
        break;
      }
      hi = probe;
    }
    if (!found) {
      throw ValidationError(
          "alpha_a_bound: no positive step size satisfies the A(alpha) conditions (degenerate constants, "
          "e.g. sigma = 0)");
    }
  }
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (a_conditions_hold(mid, c)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

StepSizeBounds compute_step_size_bounds(const ProblemConstants& c) {
  StepSizeBounds b;
  b.alpha_a = alpha_a_bound(c);
  const double a22 = c.L1 * c.norm_i_minus_r;
  b.alpha_sigma = a22 > 0.0 ? (1.0 - c.sigma_v) / a22 : kInf;
  b.alpha_a_sigma = std::min(0.5 * b.alpha_a, b.alpha_sigma);
  const double sqrt_rho = std::sqrt(spectral_radius_2x2(matrix_a(b.alpha_a_sigma, c)));
  const double sigma_v_alpha = c.sigma_v + b.alpha_a_sigma * a22;
  const double a21 = c.L1 * (sqrt_rho + 1.0) * c.norm_i_minus_r;
  b.alpha_star = a21 > 0.0 ? (1.0 - sqrt_rho) * (1.0 - sigma_v_alpha) / a21 : kInf;
  b.alpha_bar = std::min(b.alpha_star, b.alpha_a_sigma);
  return b;
}

Eigen::Matrix2d matrix_a_tau(double alpha, const ProblemConstants& c, const StepSizeBounds& bounds) {
  if (alpha < 0.0 || alpha >= bounds.alpha_a) {
    std::ostringstream os;
    os << "matrix_a_tau: alpha = " << alpha << " outside [0, alpha_A = " << bounds.alpha_a << ")";
    throw ValidationError(os.str());
  }
  const double sqrt_rho = std::sqrt(spectral_radius_2x2(matrix_a(alpha, c)));
  const double a22 = c.L1 * c.norm_i_minus_r;
  Eigen::Matrix2d m;
  m(0, 0) = sqrt_rho;
  m(0, 1) = alpha;
  m(1, 0) = c.L1 * (sqrt_rho + 1.0) * c.norm_i_minus_r;
  m(1, 1) = c.sigma_v + alpha * a22;
  return m;
}

double alpha_bar(const ProblemConstants& c) { return compute_step_size_bounds(c).alpha_bar; }

RateReport make_rate_report(const ProblemConstants& c, std::optional<double> alpha_evaluated, int grid_points) {
  if (grid_points < 1) throw ValidationError("make_rate_report: grid_points must be >= 1");
  RateReport report;
  report.constants = c;
  report.bounds = compute_step_size_bounds(c);

  // alpha = 0 boundary row: rho(A(0)) = 1 so rho(A_tau(0)) = max(1, sigma_V) = 1.
  report.grid.push_back(
      {0.0, spectral_radius_2x2(matrix_a(0.0, c)), spectral_radius_2x2(matrix_a_tau(0.0, c, report.bounds))});

  bool all_contractive = true;
  for (int i = 1; i <= grid_points; ++i) {
    const double alpha = report.bounds.alpha_bar * i / (grid_points + 1);
    const double rho_a = spectral_radius_2x2(matrix_a(alpha, c));
    const double rho_tau = spectral_radius_2x2(matrix_a_tau(alpha, c, report.bounds));
    report.grid.push_back({alpha, rho_a, rho_tau});
    if (!(rho_tau < 1.0)) all_contractive = false;
  }
  report.certified = all_contractive;
  if (!report.certified) {
    report.note =
        "grid certification failed: rho(A_tau(alpha)) >= 1 on the grid; with ||I-R|| = 1 the off-diagonal "
        "a21 ~ 2 L1 prevents contraction of the printed 2x2 system for any alpha";
  }
  if (alpha_evaluated) {
    report.alpha_evaluated = alpha_evaluated;
    report.rho_a_at_alpha = spectral_radius_2x2(matrix_a(*alpha_evaluated, c));
    report.rho_a_tau_at_alpha = spectral_radius_2x2(matrix_a_tau(*alpha_evaluated, c, report.bounds));
  }
  return report;
}

}  // namespace mcgt
