#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "biasedselect/constraints.hpp"
#include "biasedselect/group_structure.hpp"

namespace biasedselect {

// A chosen subset with per-cell counts and totals. Every solver returns
// selections whose in-cell members are the top K_sigma by observed utility
// (ties to the lowest index).
struct Selection {
  std::vector<std::int32_t> chosen;  // ascending item indices, 0-based
  std::map<Signature, int> counts;   // K_sigma per stored cell
  double latent_total = 0.0;
  double observed_total = 0.0;
};

Selection make_selection(std::vector<std::int32_t> chosen, const GroupStructure& structure,
                         std::span<const double> w, std::span<const double> w_hat);

// x*: the n largest latent utilities.
Selection select_unconstrained(const GroupStructure& structure, std::span<const double> w, int n);

// x-hat: the n largest observed utilities.
Selection select_biased(const GroupStructure& structure, std::span<const double> w,
                        std::span<const double> w_hat, int n);

// x-tilde under per-cell lower bounds: mandatory per-cell prefixes, then a
// greedy fill of the remaining slots. O(m log m).
Selection select_constrained_intersectional(const GroupStructure& structure, std::span<const double> w,
                                            std::span<const double> w_hat, const ConstraintSet& constraints,
                                            int n);

// x-tilde under per-group lower bounds (p <= 3): exact via enumeration of
// the multi-group cell counts with a greedy fill per candidate.
Selection select_constrained_nonintersectional(const GroupStructure& structure, std::span<const double> w,
                                               std::span<const double> w_hat,
                                               const ConstraintSet& constraints, int n);

inline constexpr long long kBruteForceLimit = 1'000'000;

// Enumerates all size-n subsets (C(m, n) <= kBruteForceLimit), filters by the
// constraints, and returns the best by observed utility; ties go to the
// lexicographically smallest index set. Pass constraints = nullptr for the
// unconstrained oracle.
Selection brute_force_select(const GroupStructure& structure, std::span<const double> w,
                             std::span<const double> w_hat, const ConstraintSet* constraints, int n);

// latent(x-tilde) / latent(x*); throws when the optimal latent total is not
// positive rather than dividing.
double utility_ratio_single(const Selection& sel_tilde, const Selection& sel_star);

// Whether every cell's chosen items are exactly its top-K_sigma by
// (observed utility desc, index asc).
bool satisfies_top_k_per_cell(const Selection& sel, const GroupStructure& structure,
                              std::span<const double> w_hat);

// Per-draw engine answering repeated non-intersectional solves against one
// observed-utility vector; grid sweeps reuse the sorted cells and the merged
// order across all (L1, L2) cells.
class NonIntersectionalSolver {
 public:
  NonIntersectionalSolver(const GroupStructure& structure, std::span<const double> w_hat);

  Selection solve(std::span<const int> bounds, int n, std::span<const double> w) const;

 private:
  struct Cell {
    Signature sig = 0;
    std::vector<std::int32_t> order;   // cell items by (w_hat desc, idx asc)
    std::vector<double> prefix;        // prefix[j] = sum of first j
    std::vector<std::int32_t> cum;     // cum[j] = cell items among first j merged
  };

  double evaluate(std::span<const int> forced, int topup, int* merged_prefix) const;

  const GroupStructure* structure_;
  std::span<const double> w_hat_;
  std::vector<Cell> cells_;
  std::vector<int> multi_;                  // indices into cells_ with >= 2 groups
  std::vector<int> single_of_group_;        // cell index of {l}, or -1
  int m_ = 0;
};

}  // namespace biasedselect
