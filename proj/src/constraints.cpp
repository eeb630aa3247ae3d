#include "biasedselect/constraints.hpp"

#include <bit>
#include <cmath>
#include <functional>

namespace biasedselect {

ConstraintSet ConstraintSet::intersectional(std::map<Signature, int> bounds) {
  for (const auto& [sig, bound] : bounds) {
    if (bound < 0) throw std::invalid_argument("lower bounds must be non-negative");
  }
  ConstraintSet c;
  c.kind_ = ConstraintKind::Intersectional;
  c.cell_bounds_ = std::move(bounds);
  return c;
}

ConstraintSet ConstraintSet::non_intersectional(std::vector<int> bounds) {
  if (bounds.empty()) throw std::invalid_argument("need at least one group bound");
  for (int bound : bounds) {
    if (bound < 0) throw std::invalid_argument("lower bounds must be non-negative");
  }
  ConstraintSet c;
  c.kind_ = ConstraintKind::NonIntersectional;
  c.group_bounds_ = std::move(bounds);
  return c;
}

bool ConstraintSet::trivial() const {
  if (kind_ == ConstraintKind::Intersectional) {
    for (const auto& [sig, bound] : cell_bounds_) {
      if (bound > 0) return false;
    }
    return true;
  }
  for (int bound : group_bounds_) {
    if (bound > 0) return false;
  }
  return true;
}

void validate(const ConstraintSet& constraints, const SelectionProblem& problem) {
  const int p = problem.structure().p();
  if (constraints.kind() == ConstraintKind::NonIntersectional) {
    if (static_cast<int>(constraints.group_bounds().size()) != p) {
      throw std::invalid_argument("non-intersectional constraints need exactly p lower bounds");
    }
    return;
  }
  const Signature limit = (p >= 31) ? ~Signature{0} : ((Signature{1} << p) - 1);
  for (const auto& [sig, bound] : constraints.cell_bounds()) {
    if (sig > limit) throw std::invalid_argument("constraint signature out of range for p");
  }
}

namespace {

struct MultiCell {
  Signature sig = 0;
  int size = 0;
};

// Enumerates candidate counts for cells shared by two or more groups; for
// each assignment reports the forced per-group remainder that single-group
// cells must absorb. Returns true as soon as fn does.
bool enumerate_multicell_counts(const SelectionProblem& problem, const std::vector<int>& bounds,
                                const std::function<bool(const std::vector<std::pair<Signature, int>>&,
                                                         const std::vector<int>&, int)>& fn) {
  const GroupStructure& g = problem.structure();
  const int p = g.p();
  const int n = problem.n();

  std::vector<MultiCell> multi;
  for (const auto& [sig, items] : g.intersections()) {
    if (std::popcount(sig) >= 2) multi.push_back({sig, static_cast<int>(items.size())});
  }

  std::vector<std::pair<Signature, int>> assignment(multi.size());
  std::vector<int> need(static_cast<std::size_t>(p), 0);

  std::function<bool(std::size_t, int)> recurse = [&](std::size_t depth, int used) -> bool {
    if (depth == multi.size()) {
      int forced_total = used;
      for (int l = 0; l < p; ++l) {
        int covered = 0;
        for (const auto& [sig, k] : assignment) {
          if (signature_has_group(sig, l, p)) covered += k;
        }
        need[static_cast<std::size_t>(l)] = std::max(0, bounds[static_cast<std::size_t>(l)] - covered);
        const Signature single = Signature{1} << (p - 1 - l);
        if (need[static_cast<std::size_t>(l)] > g.cell_size(single)) return false;
        forced_total += need[static_cast<std::size_t>(l)];
      }
      if (forced_total > n) return false;
      return fn(assignment, need, forced_total);
    }
    const int cap = std::min(multi[depth].size, n - used);
    for (int k = 0; k <= cap; ++k) {
      assignment[depth] = {multi[depth].sig, k};
      if (recurse(depth + 1, used + k)) return true;
    }
    return false;
  };
  return recurse(0, 0);
}

}  // namespace

FeasibilityReport check_feasibility(const SelectionProblem& problem, const ConstraintSet& constraints) {
  validate(constraints, problem);
  const GroupStructure& g = problem.structure();
  const int n = problem.n();

  if (constraints.kind() == ConstraintKind::Intersectional) {
    long long total = 0;
    for (const auto& [sig, bound] : constraints.cell_bounds()) {
      const int size = g.cell_size(sig);
      if (bound > size) {
        return {false, "bound " + std::to_string(bound) + " on cell " +
                           signature_to_string(sig, g.p()) + " exceeds its size " + std::to_string(size)};
      }
      total += bound;
    }
    if (total > n) {
      return {false, "cell bounds sum to " + std::to_string(total) + " > n = " + std::to_string(n)};
    }
    return {true, "ok"};
  }

  if (g.p() > 3) {
    throw std::invalid_argument("unsupported group count: non-intersectional feasibility is limited to p <= 3");
  }
  const bool ok = enumerate_multicell_counts(
      problem, constraints.group_bounds(),
      [](const std::vector<std::pair<Signature, int>>&, const std::vector<int>&, int) { return true; });
  if (!ok) {
    return {false, "no allocation of cell counts meets the group bounds within n = " + std::to_string(n) +
                       " slots"};
  }
  return {true, "ok"};
}

std::map<Signature, DesignedBound> design_intersectional_detail(const SelectionProblem& problem,
                                                                double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw std::invalid_argument("recovery slack epsilon must lie in (0, 1)");
  }
  const GroupStructure& g = problem.structure();
  const double n = static_cast<double>(problem.n());
  const double m = static_cast<double>(g.m());
  const double spread = std::ldexp(n * epsilon, -g.p());

  std::map<Signature, DesignedBound> out;
  for (const auto& [sig, items] : g.intersections()) {
    const double size = static_cast<double>(items.size());
    const double raw = (size / m) * n * (1.0 - epsilon) + spread;
    int bound = static_cast<int>(std::floor(raw));
    DesignedBound d;
    d.capped = bound > static_cast<int>(items.size());
    d.bound = d.capped ? static_cast<int>(items.size()) : bound;
    out[sig] = d;
  }
  return out;
}

ConstraintSet design_intersectional(const SelectionProblem& problem, double epsilon) {
  std::map<Signature, int> bounds;
  for (const auto& [sig, d] : design_intersectional_detail(problem, epsilon)) bounds[sig] = d.bound;
  return ConstraintSet::intersectional(std::move(bounds));
}

ConstraintSet proportional_nonintersectional(const SelectionProblem& problem) {
  const GroupStructure& g = problem.structure();
  std::vector<int> bounds(static_cast<std::size_t>(g.p()));
  for (int l = 0; l < g.p(); ++l) {
    const long long gl = g.group_size(l);
    bounds[static_cast<std::size_t>(l)] =
        static_cast<int>((gl * static_cast<long long>(problem.n())) / static_cast<long long>(g.m()));
  }
  return ConstraintSet::non_intersectional(std::move(bounds));
}

}  // namespace biasedselect
