#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mcgt/constraints.hpp"
#include "mcgt/game.hpp"
#include "mcgt/topology.hpp"

namespace mcgt {

enum class ConstantsMode { ExactQuadratic, Sampled };
enum class Provenance { Exact, Sampled, UserSupplied };

std::string to_string(Provenance p);

/// Problem constants feeding the convergence machinery. In exact mode mu and
/// L0 come from the assembled game Jacobian (plus certified curvature bounds
/// for almost-quadratic games); sampled mode uses difference quotients and is
/// heuristic. L is the Lipschitz constant of the extended mapping; the raw
/// estimate is kept and clamped into [mu, L0], flagging when the sandwich is
/// violated.
struct ProblemConstants {
  double mu = 0.0;
  double L0 = 0.0;
  double L = 0.0;
  double L1 = 0.0;
  double sigma = 0.0;
  double sigma_v = 0.0;
  int total_agents = 0;
  /// ||I - R||: 1 when any cluster has more than one agent, 0 otherwise.
  double norm_i_minus_r = 0.0;
  Provenance mu_src = Provenance::Sampled;
  Provenance l0_src = Provenance::Sampled;
  Provenance l_src = Provenance::Sampled;
  Provenance l1_src = Provenance::Sampled;
  double raw_extended_lipschitz = 0.0;
  bool lemma2_violated = false;

  void validate() const;
};

struct ConstantsOptions {
  int samples = 1000;
  std::uint64_t seed = 7;
};

ProblemConstants estimate_constants(const MultiClusterGame& game, const std::vector<FeasibleSet>& sets,
                                    const CommTopology& topo, ConstantsMode mode,
                                    const ConstantsOptions& options = {});

/// The 2x2 error-contraction matrix of the consensus-plus-optimality block:
/// a11 = alpha^2 L0^2/N - 2 alpha mu/N + 1,
/// a12 = a21 = alpha^2 L L0/sqrt(N) + alpha (L + sigma L0/sqrt(N)),
/// a22 = alpha^2 L^2 + 2 alpha sigma^2 L + sigma^2.
Eigen::Matrix2d matrix_a(double alpha, const ProblemConstants& c);

/// Closed-form spectral radius of a 2x2 matrix.
double spectral_radius_2x2(const Eigen::Matrix2d& m);

struct StepSizeBounds {
  double alpha_a = 0.0;        // sqrt(rho(A(alpha))) < 1 certified on (0, alpha_a)
  double alpha_sigma = 0.0;    // (1 - sigma_V) / a22, +inf when a22 = 0
  double alpha_a_sigma = 0.0;  // min(alpha_a / 2, alpha_sigma)
  double alpha_star = 0.0;     // (1 - sqrt(rho A))(1 - sigma_{v,alpha}) / a21 at alpha_a_sigma
  double alpha_bar = 0.0;      // min(alpha_star, alpha_a_sigma)
};

/// alpha_A = min{alpha_A1, 2 mu/L0^2, alpha_A2^2}; the two bounds the paper
/// leaves implicit (diagonal dominance and det(I - A) > 0) are located by
/// scan-plus-bisection over (0, 2 mu/L0^2]. Throws when no positive step
/// size satisfies the conditions (degenerate constants, e.g. sigma = 0).
double alpha_a_bound(const ProblemConstants& c);

/// All step-size bounds including alpha_bar = min{alpha*(alpha_As), alpha_As}
/// with alpha_As = min{alpha_A/2, alpha_sigma}.
StepSizeBounds compute_step_size_bounds(const ProblemConstants& c);

/// The 2x2 system matrix coupling ||x - x*|| and ||y - ybar||:
/// [[sqrt(rho A(alpha)), alpha], [L1 (sqrt(rho A)+1) ||I-R||, sigma_V + alpha L1 ||I-R||]].
/// alpha = 0 is accepted as the boundary row; alpha must stay below alpha_a.
Eigen::Matrix2d matrix_a_tau(double alpha, const ProblemConstants& c, const StepSizeBounds& bounds);

double alpha_bar(const ProblemConstants& c);

struct RateGridRow {
  double alpha;
  double rho_a;      // rho(A(alpha))
  double rho_a_tau;  // rho(A_tau(alpha))
};

/// Grid certificate over (0, alpha_bar) plus the alpha = 0 boundary row.
/// certified is true when every interior grid point has rho(A_tau) < 1; a
/// false value is reported, not thrown.
struct RateReport {
  ProblemConstants constants;
  StepSizeBounds bounds;
  std::vector<RateGridRow> grid;  // first row is alpha = 0
  bool certified = false;
  std::optional<double> alpha_evaluated;
  double rho_a_at_alpha = 0.0;
  double rho_a_tau_at_alpha = 0.0;
  std::string note;
};

RateReport make_rate_report(const ProblemConstants& c, std::optional<double> alpha_evaluated = std::nullopt,
                            int grid_points = 100);

}  // namespace mcgt
