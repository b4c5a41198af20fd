#include "mcgt/constraints.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace mcgt {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

BoxSet::BoxSet(Eigen::VectorXd lower, Eigen::VectorXd upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size()) throw DimensionError("BoxSet: bound size mismatch");
  for (int i = 0; i < lower_.size(); ++i) {
    if (!(lower_[i] <= upper_[i])) throw ValidationError("BoxSet: lower bound exceeds upper bound");
  }
}

Eigen::VectorXd BoxSet::project(const Eigen::VectorXd& u) const {
  if (u.size() != lower_.size()) throw DimensionError("BoxSet::project: dimension mismatch");
  return u.cwiseMax(lower_).cwiseMin(upper_);
}

double BoxSet::violation(const Eigen::VectorXd& x) const {
  if (x.size() != lower_.size()) throw DimensionError("BoxSet::violation: dimension mismatch");
  double v = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    if (std::isfinite(lower_[i])) v = std::max(v, lower_[i] - x[i]);
    if (std::isfinite(upper_[i])) v = std::max(v, x[i] - upper_[i]);
  }
  return v;
}

Hyperplane::Hyperplane(Eigen::VectorXd normal, double offset) : normal_(std::move(normal)), offset_(offset) {
  if (normal_.size() == 0 || normal_.norm() == 0.0) throw ValidationError("Hyperplane: normal must be nonzero");
}

Eigen::VectorXd Hyperplane::project(const Eigen::VectorXd& u) const {
  if (u.size() != normal_.size()) throw DimensionError("Hyperplane::project: dimension mismatch");
  const double t = (normal_.dot(u) - offset_) / normal_.squaredNorm();
  return u - t * normal_;
}

double Hyperplane::violation(const Eigen::VectorXd& x) const {
  if (x.size() != normal_.size()) throw DimensionError("Hyperplane::violation: dimension mismatch");
  return std::abs(normal_.dot(x) - offset_);
}

Halfspace::Halfspace(Eigen::VectorXd normal, double offset) : normal_(std::move(normal)), offset_(offset) {
  if (normal_.size() == 0 || normal_.norm() == 0.0) throw ValidationError("Halfspace: normal must be nonzero");
}

Eigen::VectorXd Halfspace::project(const Eigen::VectorXd& u) const {
  if (u.size() != normal_.size()) throw DimensionError("Halfspace::project: dimension mismatch");
  const double slack = normal_.dot(u) - offset_;
  if (slack <= 0.0) return u;
  return u - (slack / normal_.squaredNorm()) * normal_;
}

double Halfspace::violation(const Eigen::VectorXd& x) const {
  if (x.size() != normal_.size()) throw DimensionError("Halfspace::violation: dimension mismatch");
  return std::max(0.0, normal_.dot(x) - offset_);
}

FeasibleSet::FeasibleSet(std::vector<MemberSet> members, FeasibleSetOptions options)
    : members_(std::move(members)), options_(std::move(options)) {
  if (members_.empty()) throw ValidationError("FeasibleSet: needs at least one member set");
  if (options_.tolerance <= 0.0) throw ValidationError("FeasibleSet: tolerance must be positive");
  if (options_.max_sweeps < 1) throw ValidationError("FeasibleSet: max_sweeps must be >= 1");

  dim_ = std::visit([](const auto& m) { return m.dim(); }, members_.front());
  for (const auto& m : members_) {
    if (std::visit([](const auto& s) { return s.dim(); }, m) != dim_) {
      throw DimensionError("FeasibleSet: member dimensions disagree");
    }
  }

  // Boundedness: every coordinate must carry finite box bounds somewhere.
  bound_lower_ = Eigen::VectorXd::Constant(dim_, -kInf);
  bound_upper_ = Eigen::VectorXd::Constant(dim_, kInf);
  for (const auto& m : members_) {
    if (const auto* box = std::get_if<BoxSet>(&m)) {
      bound_lower_ = bound_lower_.cwiseMax(box->lower());
      bound_upper_ = bound_upper_.cwiseMin(box->upper());
    }
  }
  for (int i = 0; i < dim_; ++i) {
    if (!std::isfinite(bound_lower_[i]) || !std::isfinite(bound_upper_[i])) {
      throw ValidationError("FeasibleSet: coordinate " + std::to_string(i) +
                            " lacks finite box bounds; intersection not certified compact");
    }
  }

  compile_plan();
  certify(options_);
}

void FeasibleSet::certify(const FeasibleSetOptions& options) {
  const double cert_tol = 1e-7;
  if (options.feasible_hint) {
    if (options.feasible_hint->size() != dim_) throw DimensionError("FeasibleSet: feasible hint size mismatch");
    if (max_violation(*options.feasible_hint) > cert_tol) {
      throw InfeasibleError("FeasibleSet: supplied feasible hint violates the members");
    }
    feasible_point_ = *options.feasible_hint;
    return;
  }
  Eigen::VectorXd probe = 0.5 * (bound_lower_ + bound_upper_);
  Eigen::VectorXd candidate;
  try {
    candidate = project(probe);
  } catch (const ProjectionError& e) {
    throw InfeasibleError(std::string("FeasibleSet: feasibility search did not converge (") + e.what() + ")");
  }
  const double viol = max_violation(candidate);
  if (viol > cert_tol * (1.0 + candidate.norm())) {
    std::ostringstream os;
    os << "FeasibleSet: no feasible point found (residual " << viol << "); intersection appears empty";
    throw InfeasibleError(os.str());
  }
  feasible_point_ = std::move(candidate);
}

double FeasibleSet::max_violation(const Eigen::VectorXd& x) const {
  if (x.size() != dim_) throw DimensionError("FeasibleSet::max_violation: dimension mismatch");
  double v = 0.0;
  for (const auto& m : members_) {
    v = std::max(v, std::visit([&](const auto& s) { return s.violation(x); }, m));
  }
  return v;
}

Eigen::VectorXd FeasibleSet::project(const Eigen::VectorXd& u) const {
  if (u.size() != dim_) throw DimensionError("FeasibleSet::project: dimension mismatch");
  if (members_.size() == 1) {
    return std::visit([&](const auto& s) { return s.project(u); }, members_.front());
  }
  return dykstra(u);
}

void FeasibleSet::compile_plan() {
  // Members as linear atoms; the boxes live in the merged bound vectors and
  // are folded into the balanced layer (the compactness certificate
  // guarantees at least one box member).
  std::vector<LinearAtom> atoms;
  for (const auto& m : members_) {
    if (std::holds_alternative<BoxSet>(m)) continue;
    LinearAtom atom;
    const bool is_plane = std::holds_alternative<Hyperplane>(m);
    const Eigen::VectorXd& normal = is_plane ? std::get<Hyperplane>(m).normal() : std::get<Halfspace>(m).normal();
    const double offset = is_plane ? std::get<Hyperplane>(m).offset() : std::get<Halfspace>(m).offset();
    for (int i = 0; i < normal.size(); ++i) {
      if (normal[i] != 0.0) atom.support.push_back(i);
    }
    atom.coeffs.resize(static_cast<long>(atom.support.size()));
    for (std::size_t k = 0; k < atom.support.size(); ++k) {
      atom.coeffs[static_cast<long>(k)] = normal[atom.support[k]];
    }
    atom.norm_sq = atom.coeffs.squaredNorm();
    atom.lo = is_plane ? offset : -kInf;
    atom.up = offset;
    atoms.push_back(std::move(atom));
  }

  // Exactly-negated halfspace pairs collapse into slabs.
  std::vector<bool> dropped(atoms.size(), false);
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (dropped[i] || atoms[i].lo != -kInf) continue;
    for (std::size_t j = i + 1; j < atoms.size(); ++j) {
      if (dropped[j] || atoms[j].lo != -kInf) continue;
      if (atoms[i].support != atoms[j].support) continue;
      if ((atoms[i].coeffs + atoms[j].coeffs).cwiseAbs().maxCoeff() != 0.0) continue;
      const double lo = -atoms[j].up;
      if (lo > atoms[i].up) continue;  // inconsistent pair, keep both
      atoms[i].lo = lo;
      dropped[j] = true;
      break;
    }
  }

  // Balanced layer: the merged box plus a maximal disjoint-support family of
  // hyperplanes. Its exact projection is a clamped-multiplier solve per
  // hyperplane and a plain clamp elsewhere.
  Layer balanced;
  balanced.balanced = true;
  std::vector<char> balanced_occupied(dim_, 0);
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (dropped[i] || atoms[i].lo != atoms[i].up) continue;  // hyperplanes only
    bool clash = false;
    for (int coord : atoms[i].support) {
      if (balanced_occupied[coord]) {
        clash = true;
        break;
      }
    }
    if (clash) continue;
    for (int coord : atoms[i].support) balanced_occupied[coord] = 1;
    balanced.atoms.push_back(atoms[i]);
    dropped[i] = true;
  }
  layers_.push_back(std::move(balanced));

  // Greedy layering for the rest: atoms with pairwise disjoint supports
  // project independently, so they share one Dykstra set.
  std::vector<std::vector<char>> occupied;
  std::vector<std::size_t> linear_layers;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (dropped[i]) continue;
    std::size_t target = linear_layers.size();
    for (std::size_t l = 0; l < linear_layers.size(); ++l) {
      bool clash = false;
      for (int coord : atoms[i].support) {
        if (occupied[l][coord]) {
          clash = true;
          break;
        }
      }
      if (!clash) {
        target = l;
        break;
      }
    }
    if (target == linear_layers.size()) {
      layers_.emplace_back();
      linear_layers.push_back(layers_.size() - 1);
      occupied.emplace_back(dim_, 0);
    }
    for (int coord : atoms[i].support) occupied[target][coord] = 1;
    layers_[linear_layers[target]].atoms.push_back(std::move(atoms[i]));
  }

  for (Layer& layer : layers_) {
    layer.correction_offset = correction_total_;
    if (layer.balanced) {
      layer.correction_size = dim_;
    } else {
      int size = 0;
      for (const LinearAtom& atom : layer.atoms) size += static_cast<int>(atom.support.size());
      layer.correction_size = size;
    }
    correction_total_ += layer.correction_size;
  }
}

Eigen::VectorXd FeasibleSet::dykstra(const Eigen::VectorXd& u) const {
  Eigen::VectorXd x = u;
  Eigen::VectorXd x_prev(dim_);
  Eigen::VectorXd corrections = Eigen::VectorXd::Zero(correction_total_);
  double change = kInf;

  // Exact projection onto {bounds, a.x = b} on the atom's support:
  // x = clamp(w - lambda a) with lambda solving the monotone piecewise-linear
  // balance equation. The root lies between two saturation breakpoints where
  // the equation is linear, so a breakpoint sort plus interpolation is exact.
  std::vector<double> breakpoints;
  auto solve_balanced_atom = [&](const LinearAtom& atom, Eigen::VectorXd& w) {
    const std::size_t s = atom.support.size();
    auto phi = [&](double lambda) {
      double value = -atom.lo;  // lo == up == b for hyperplane atoms
      for (std::size_t k = 0; k < s; ++k) {
        const int coord = atom.support[k];
        const double a = atom.coeffs[static_cast<long>(k)];
        const double v = std::min(std::max(w[coord] - lambda * a, bound_lower_[coord]), bound_upper_[coord]);
        value += a * v;
      }
      return value;
    };
    breakpoints.clear();
    for (std::size_t k = 0; k < s; ++k) {
      const int coord = atom.support[k];
      const double a = atom.coeffs[static_cast<long>(k)];
      breakpoints.push_back((w[coord] - bound_lower_[coord]) / a);
      breakpoints.push_back((w[coord] - bound_upper_[coord]) / a);
    }
    std::sort(breakpoints.begin(), breakpoints.end());
    double lambda;
    if (phi(breakpoints.front()) <= 0.0) {
      lambda = breakpoints.front();  // saturated plateau already below b
    } else if (phi(breakpoints.back()) >= 0.0) {
      lambda = breakpoints.back();
    } else {
      std::size_t left = 0, right = breakpoints.size() - 1;
      while (right - left > 1) {
        const std::size_t mid = (left + right) / 2;
        if (phi(breakpoints[mid]) > 0.0) {
          left = mid;
        } else {
          right = mid;
        }
      }
      const double pl = phi(breakpoints[left]);
      const double pr = phi(breakpoints[right]);
      lambda = pl <= pr ? breakpoints[left]
                        : breakpoints[left] + (breakpoints[right] - breakpoints[left]) * pl / (pl - pr);
    }
    for (std::size_t k = 0; k < s; ++k) {
      const int coord = atom.support[k];
      const double a = atom.coeffs[static_cast<long>(k)];
      w[coord] = std::min(std::max(w[coord] - lambda * a, bound_lower_[coord]), bound_upper_[coord]);
    }
  };

  // Layers whose correction is zero and whose projection was a no-op are
  // dormant: skipping them reproduces the exact Dykstra sequence while they
  // stay inactive. Full sweeps revisit everything periodically and convergence
  // is only declared on a full sweep.
  std::vector<char> dormant(layers_.size(), 0);
  bool force_full = true;
  for (int sweep = 0; sweep < options_.max_sweeps; ++sweep) {
    const bool full = force_full || sweep % 8 == 0;
    force_full = false;
    x_prev = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const Layer& layer = layers_[l];
      if (!full && dormant[l]) continue;
      if (layer.balanced) {
        auto c = corrections.segment(layer.correction_offset, layer.correction_size);
        // w = x + c; x = P(w); c = w - x with P the exact balanced-box map.
        c += x;
        x = c;  // x now holds w
        for (const LinearAtom& atom : layer.atoms) solve_balanced_atom(atom, x);
        x = x.cwiseMax(bound_lower_).cwiseMin(bound_upper_);  // coords outside atom supports
        c -= x;
        continue;  // equalities stay live every sweep
      }
      int offset = layer.correction_offset;
      bool moved = false;
      for (const LinearAtom& atom : layer.atoms) {
        const int s = static_cast<int>(atom.support.size());
        auto c = corrections.segment(offset, s);
        double dot = 0.0;
        bool stored = false;
        for (int k = 0; k < s; ++k) {
          if (c[k] != 0.0) stored = true;
          c[k] += x[atom.support[k]];
          dot += atom.coeffs[k] * c[k];
        }
        const double target = std::min(std::max(dot, atom.lo), atom.up);
        const double t = (dot - target) / atom.norm_sq;
        if (t != 0.0 || stored) {
          moved = true;
          for (int k = 0; k < s; ++k) {
            const double xk = c[k] - t * atom.coeffs[k];
            x[atom.support[k]] = xk;
            c[k] -= xk;
          }
        } else {
          for (int k = 0; k < s; ++k) c[k] = 0.0;
        }
        offset += s;
      }
      dormant[l] = moved ? 0 : 1;
    }
    change = (x - x_prev).norm();
    if (change <= options_.tolerance) {
      if (!full) {
        force_full = true;  // confirm on a sweep that visits every layer
        continue;
      }
      // Dykstra can plateau: the iterate sits nearly still for many sweeps
      // (corrections absorbing the displacement) while still far from the
      // intersection. A small sweep change only counts as convergence once
      // the point is also essentially feasible.
      if (max_violation(x) <= 100.0 * options_.tolerance * (1.0 + x.cwiseAbs().maxCoeff())) {
        return x;
      }
    }
  }
  std::ostringstream os;
  os << "FeasibleSet::project: Dykstra did not converge within " << options_.max_sweeps
     << " sweeps (last change " << change << ", residual " << max_violation(x) << ")";
  throw ProjectionError(os.str(), change, max_violation(x));
}

}  // namespace mcgt
