#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "biasedselect/group_structure.hpp"

namespace biasedselect {

// Lower bounds that cannot be met by any n-item subset.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ConstraintKind { NonIntersectional, Intersectional };

// Lower-bound constraints: per-group L_1..L_p or per-cell L_sigma.
class ConstraintSet {
 public:
  static ConstraintSet intersectional(std::map<Signature, int> bounds);
  static ConstraintSet non_intersectional(std::vector<int> bounds);

  ConstraintKind kind() const { return kind_; }
  const std::map<Signature, int>& cell_bounds() const { return cell_bounds_; }
  const std::vector<int>& group_bounds() const { return group_bounds_; }

  // True when every lower bound is zero (no effective constraint).
  bool trivial() const;

 private:
  ConstraintKind kind_ = ConstraintKind::NonIntersectional;
  std::map<Signature, int> cell_bounds_;
  std::vector<int> group_bounds_;
};

// Checks the constraint-set invariants against a concrete problem:
// intersectional needs L_sigma <= |I_sigma| and sum L_sigma <= n,
// non-intersectional needs p bounds with L_l <= |G_l|. Throws on violation.
void validate(const ConstraintSet& constraints, const SelectionProblem& problem);

struct FeasibilityReport {
  bool feasible = false;
  std::string diagnostic;
};

// Whether any n-item subset satisfies the bounds. Non-intersectional
// feasibility is decided by cell-count enumeration and supports p <= 3 only
// (the general case is a hitting-set problem).
FeasibilityReport check_feasibility(const SelectionProblem& problem, const ConstraintSet& constraints);

struct DesignedBound {
  int bound = 0;
  bool capped = false;
};

// Intersectional bounds floor((|I_sigma|/m)*n*(1-eps) + 2^-p*n*eps), capped
// at |I_sigma|. A function of cell sizes only; takes no bias parameters and
// no utility distribution.
ConstraintSet design_intersectional(const SelectionProblem& problem, double epsilon);
std::map<Signature, DesignedBound> design_intersectional_detail(const SelectionProblem& problem,
                                                                double epsilon);

// Per-group bounds floor(|G_l| * n / m).
ConstraintSet proportional_nonintersectional(const SelectionProblem& problem);

}  // namespace biasedselect
