#pragma once

#include <Eigen/Dense>
#include <optional>
#include <variant>
#include <vector>

#include "mcgt/errors.hpp"

namespace mcgt {

/// Axis-aligned box l <= x <= u. Infinite entries are allowed as long as
/// some other box member of the same feasible set covers that coordinate
/// with finite bounds.
class BoxSet {
 public:
  BoxSet(Eigen::VectorXd lower, Eigen::VectorXd upper);

  int dim() const { return static_cast<int>(lower_.size()); }
  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& upper() const { return upper_; }

  Eigen::VectorXd project(const Eigen::VectorXd& u) const;
  double violation(const Eigen::VectorXd& x) const;
  bool contains(const Eigen::VectorXd& x, double tol) const { return violation(x) <= tol; }

 private:
  Eigen::VectorXd lower_, upper_;
};

/// Affine equality {x : a.x = b}.
class Hyperplane {
 public:
  Hyperplane(Eigen::VectorXd normal, double offset);

  int dim() const { return static_cast<int>(normal_.size()); }
  const Eigen::VectorXd& normal() const { return normal_; }
  double offset() const { return offset_; }

  Eigen::VectorXd project(const Eigen::VectorXd& u) const;
  double violation(const Eigen::VectorXd& x) const;
  bool contains(const Eigen::VectorXd& x, double tol) const { return violation(x) <= tol; }

 private:
  Eigen::VectorXd normal_;
  double offset_;
};

/// Affine inequality {x : a.x <= b}.
class Halfspace {
 public:
  Halfspace(Eigen::VectorXd normal, double offset);

  int dim() const { return static_cast<int>(normal_.size()); }
  const Eigen::VectorXd& normal() const { return normal_; }
  double offset() const { return offset_; }

  Eigen::VectorXd project(const Eigen::VectorXd& u) const;
  double violation(const Eigen::VectorXd& x) const;
  bool contains(const Eigen::VectorXd& x, double tol) const { return violation(x) <= tol; }

 private:
  Eigen::VectorXd normal_;
  double offset_;
};

using MemberSet = std::variant<BoxSet, Hyperplane, Halfspace>;

struct FeasibleSetOptions {
  /// Dykstra stop: Euclidean change of the iterate over one full sweep.
  double tolerance = 1e-10;
  int max_sweeps = 10000;
  /// Known feasible point; skips the construction-time feasibility search.
  std::optional<Eigen::VectorXd> feasible_hint;
};

/// Intersection of box / hyperplane / halfspace members with an exact
/// Euclidean projector. A single member projects in closed form; otherwise
/// Dykstra's alternating scheme with correction terms runs until the sweep
/// change drops at or below tolerance. Construction certifies the
/// intersection nonempty (a feasible point is found or supplied) and bounded
/// (every coordinate carries finite box bounds). Immutable afterwards;
/// projections are pure and safe to run concurrently.
class FeasibleSet {
 public:
  explicit FeasibleSet(std::vector<MemberSet> members, FeasibleSetOptions options = {});

  int dim() const { return dim_; }
  const std::vector<MemberSet>& members() const { return members_; }
  double tolerance() const { return options_.tolerance; }
  int max_sweeps() const { return options_.max_sweeps; }
  const Eigen::VectorXd& feasible_point() const { return feasible_point_; }
  /// Tightest finite per-coordinate bounds over the box members.
  const Eigen::VectorXd& bound_lower() const { return bound_lower_; }
  const Eigen::VectorXd& bound_upper() const { return bound_upper_; }

  Eigen::VectorXd project(const Eigen::VectorXd& u) const;
  double max_violation(const Eigen::VectorXd& x) const;
  bool contains(const Eigen::VectorXd& x, double tol) const { return max_violation(x) <= tol; }

 private:
  // Execution plan. Every affine member becomes a linear atom
  // lo <= a.x <= up on its support; exactly-negated halfspace pairs merge
  // into one slab atom and atoms with pairwise disjoint supports share a
  // layer (their product projects coordinatewise). All boxes plus one layer
  // of disjoint-support hyperplanes fuse into a "balanced box" whose exact
  // projection is a per-atom clamped-multiplier solve. Dykstra runs over
  // the layers; the represented intersection is unchanged.
  struct LinearAtom {
    std::vector<int> support;
    Eigen::VectorXd coeffs;
    double lo = 0.0, up = 0.0;  // +-inf allowed on one side
    double norm_sq = 0.0;
  };
  struct Layer {
    bool balanced = false;  // box-with-hyperplanes layer (full-dim correction)
    std::vector<LinearAtom> atoms;
    int correction_offset = 0;
    int correction_size = 0;
  };

  Eigen::VectorXd dykstra(const Eigen::VectorXd& u) const;
  void compile_plan();
  void certify(const FeasibleSetOptions& options);

  std::vector<MemberSet> members_;
  FeasibleSetOptions options_;
  std::vector<Layer> layers_;
  int dim_ = 0;
  int correction_total_ = 0;
  Eigen::VectorXd feasible_point_;
  Eigen::VectorXd bound_lower_, bound_upper_;
};

}  // namespace mcgt
