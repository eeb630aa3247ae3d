#include "biasedselect/selection.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "biasedselect/kernels.hpp"

namespace biasedselect {

namespace {

std::vector<std::int32_t> argsort_desc(std::span<const double> values) {
  std::vector<std::int32_t> order(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) order[i] = static_cast<std::int32_t>(i);
  std::sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
    const double va = values[static_cast<std::size_t>(a)];
    const double vb = values[static_cast<std::size_t>(b)];
    if (va != vb) return va > vb;
    return a < b;
  });
  return order;
}

void require_sizes(const GroupStructure& structure, std::span<const double> w, int n) {
  if (static_cast<int>(w.size()) != structure.m()) throw std::invalid_argument("|w| must equal m");
  if (n < 0 || n > structure.m()) throw std::invalid_argument("need 0 <= n <= m");
}

}  // namespace

Selection make_selection(std::vector<std::int32_t> chosen, const GroupStructure& structure,
                         std::span<const double> w, std::span<const double> w_hat) {
  std::sort(chosen.begin(), chosen.end());
  Selection sel;
  for (const auto& [sig, items] : structure.intersections()) sel.counts[sig] = 0;
  for (std::int32_t i : chosen) ++sel.counts[structure.signature_of(i)];
  sel.latent_total = kernels::gather_sum(w, chosen);
  sel.observed_total = kernels::gather_sum(w_hat, chosen);
  sel.chosen = std::move(chosen);
  return sel;
}

Selection select_unconstrained(const GroupStructure& structure, std::span<const double> w, int n) {
  require_sizes(structure, w, n);
  const auto order = argsort_desc(w);
  std::vector<std::int32_t> chosen(order.begin(), order.begin() + n);
  return make_selection(std::move(chosen), structure, w, w);
}

Selection select_biased(const GroupStructure& structure, std::span<const double> w,
                        std::span<const double> w_hat, int n) {
  require_sizes(structure, w_hat, n);
  const auto order = argsort_desc(w_hat);
  std::vector<std::int32_t> chosen(order.begin(), order.begin() + n);
  return make_selection(std::move(chosen), structure, w, w_hat);
}

Selection select_constrained_intersectional(const GroupStructure& structure, std::span<const double> w,
                                            std::span<const double> w_hat, const ConstraintSet& constraints,
                                            int n) {
  require_sizes(structure, w_hat, n);
  if (constraints.kind() != ConstraintKind::Intersectional) {
    throw std::invalid_argument("expected intersectional constraints");
  }
  long long bound_sum = 0;
  for (const auto& [sig, bound] : constraints.cell_bounds()) {
    if (bound > structure.cell_size(sig)) {
      throw InfeasibleError("bound on cell " + signature_to_string(sig, structure.p()) +
                            " exceeds its size");
    }
    bound_sum += bound;
  }
  if (bound_sum > n) throw InfeasibleError("cell bounds sum beyond n");

  auto bound_of = [&](Signature sig) {
    auto it = constraints.cell_bounds().find(sig);
    return it == constraints.cell_bounds().end() ? 0 : it->second;
  };

  // One pass over the global order: forced per-cell prefixes are always
  // taken, leftovers greedily while free slots remain.
  const auto order = argsort_desc(w_hat);
  std::map<Signature, int> taken;
  int free_slots = n - static_cast<int>(bound_sum);
  std::vector<std::int32_t> chosen;
  chosen.reserve(static_cast<std::size_t>(n));
  for (std::int32_t i : order) {
    const Signature sig = structure.signature_of(i);
    int& t = taken[sig];
    if (t < bound_of(sig)) {
      ++t;
      chosen.push_back(i);
    } else if (free_slots > 0) {
      ++t;
      --free_slots;
      chosen.push_back(i);
    }
    if (static_cast<int>(chosen.size()) == n) break;
  }
  return make_selection(std::move(chosen), structure, w, w_hat);
}

NonIntersectionalSolver::NonIntersectionalSolver(const GroupStructure& structure,
                                                 std::span<const double> w_hat)
    : structure_(&structure), w_hat_(w_hat), m_(structure.m()) {
  if (structure.p() > 3) {
    throw std::invalid_argument("unsupported group count: non-intersectional solving is limited to p <= 3");
  }
  if (static_cast<int>(w_hat.size()) != m_) throw std::invalid_argument("|w_hat| must equal m");

  const auto merged = argsort_desc(w_hat);
  std::map<Signature, int> index_of;
  for (const auto& [sig, items] : structure.intersections()) {
    Cell c;
    c.sig = sig;
    c.prefix.push_back(0.0);
    c.cum.assign(static_cast<std::size_t>(m_) + 1, 0);
    index_of[sig] = static_cast<int>(cells_.size());
    cells_.push_back(std::move(c));
  }
  for (int j = 0; j < m_; ++j) {
    const std::int32_t item = merged[static_cast<std::size_t>(j)];
    Cell& c = cells_[static_cast<std::size_t>(index_of[structure.signature_of(item)])];
    c.order.push_back(item);
    c.prefix.push_back(c.prefix.back() + w_hat[static_cast<std::size_t>(item)]);
    for (auto& cell : cells_) cell.cum[static_cast<std::size_t>(j) + 1] = static_cast<std::int32_t>(cell.order.size());
  }

  single_of_group_.assign(static_cast<std::size_t>(structure.p()), -1);
  for (std::size_t ci = 0; ci < cells_.size(); ++ci) {
    const Signature sig = cells_[ci].sig;
    if (std::popcount(sig) >= 2) multi_.push_back(static_cast<int>(ci));
    if (std::popcount(sig) == 1) {
      for (int l = 0; l < structure.p(); ++l) {
        if (signature_has_group(sig, l, structure.p())) single_of_group_[static_cast<std::size_t>(l)] = static_cast<int>(ci);
      }
    }
  }
}

double NonIntersectionalSolver::evaluate(std::span<const int> forced, int topup,
                                         int* merged_prefix) const {
  double value = 0.0;
  for (std::size_t ci = 0; ci < cells_.size(); ++ci) {
    value += cells_[ci].prefix[static_cast<std::size_t>(forced[ci])];
  }
  if (topup == 0) {
    *merged_prefix = 0;
    return value;
  }
  // Smallest merged prefix whose leftovers (beyond the forced prefixes)
  // reach the fill count; leftovers grow by at most one per step.
  int lo = 0, hi = m_;
  while (lo < hi) {
    const int mid = lo + (hi - lo) / 2;
    long long leftover = 0;
    for (std::size_t ci = 0; ci < cells_.size(); ++ci) {
      leftover += std::max(0, static_cast<int>(cells_[ci].cum[static_cast<std::size_t>(mid)]) - forced[ci]);
    }
    if (leftover >= topup) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  *merged_prefix = lo;
  for (std::size_t ci = 0; ci < cells_.size(); ++ci) {
    const int take = std::max(forced[ci], static_cast<int>(cells_[ci].cum[static_cast<std::size_t>(lo)]));
    value += cells_[ci].prefix[static_cast<std::size_t>(take)] - cells_[ci].prefix[static_cast<std::size_t>(forced[ci])];
  }
  return value;
}

Selection NonIntersectionalSolver::solve(std::span<const int> bounds, int n,
                                         std::span<const double> w) const {
  const GroupStructure& g = *structure_;
  const int p = g.p();
  if (static_cast<int>(bounds.size()) != p) {
    throw std::invalid_argument("non-intersectional constraints need exactly p lower bounds");
  }
  if (n < 0 || n > m_) throw std::invalid_argument("need 0 <= n <= m");

  std::vector<int> forced(cells_.size(), 0);
  std::vector<int> best_forced;
  double best_value = 0.0;
  int best_prefix = 0;
  bool found = false;

  std::vector<int> multi_counts(multi_.size(), 0);
  std::function<void(std::size_t, int)> recurse = [&](std::size_t depth, int used) {
    if (depth == multi_.size()) {
      std::fill(forced.begin(), forced.end(), 0);
      for (std::size_t mi = 0; mi < multi_.size(); ++mi) {
        forced[static_cast<std::size_t>(multi_[mi])] = multi_counts[mi];
      }
      int total = used;
      for (int l = 0; l < p; ++l) {
        int covered = 0;
        for (std::size_t mi = 0; mi < multi_.size(); ++mi) {
          if (signature_has_group(cells_[static_cast<std::size_t>(multi_[mi])].sig, l, p)) covered += multi_counts[mi];
        }
        const int need = std::max(0, bounds[static_cast<std::size_t>(l)] - covered);
        if (need == 0) continue;
        const int ci = single_of_group_[static_cast<std::size_t>(l)];
        if (ci < 0 || need > static_cast<int>(cells_[static_cast<std::size_t>(ci)].order.size())) return;
        forced[static_cast<std::size_t>(ci)] = need;
        total += need;
      }
      if (total > n) return;
      int prefix = 0;
      const double value = evaluate(forced, n - total, &prefix);
      if (!found || value > best_value) {
        found = true;
        best_value = value;
        best_forced = forced;
        best_prefix = prefix;
      }
      return;
    }
    const Cell& cell = cells_[static_cast<std::size_t>(multi_[depth])];
    const int cap = std::min(static_cast<int>(cell.order.size()), n - used);
    for (int k = 0; k <= cap; ++k) {
      multi_counts[depth] = k;
      recurse(depth + 1, used + k);
    }
  };
  recurse(0, 0);

  if (!found) throw InfeasibleError("no allocation of cell counts meets the group bounds");

  std::vector<std::int32_t> chosen;
  chosen.reserve(static_cast<std::size_t>(n));
  for (std::size_t ci = 0; ci < cells_.size(); ++ci) {
    const int take = std::max(best_forced[ci],
                              static_cast<int>(cells_[ci].cum[static_cast<std::size_t>(best_prefix)]));
    for (int j = 0; j < take; ++j) chosen.push_back(cells_[ci].order[static_cast<std::size_t>(j)]);
  }
  return make_selection(std::move(chosen), g, w, w_hat_);
}

Selection select_constrained_nonintersectional(const GroupStructure& structure, std::span<const double> w,
                                               std::span<const double> w_hat,
                                               const ConstraintSet& constraints, int n) {
  if (constraints.kind() != ConstraintKind::NonIntersectional) {
    throw std::invalid_argument("expected non-intersectional constraints");
  }
  NonIntersectionalSolver solver(structure, w_hat);
  return solver.solve(constraints.group_bounds(), n, w);
}

namespace {

long long binomial_capped(int m, int n, long long cap) {
  long long result = 1;
  n = std::min(n, m - n);
  if (n < 0) return 0;
  for (int i = 1; i <= n; ++i) {
    result = result * (m - n + i) / i;
    if (result > cap) return cap + 1;
  }
  return result;
}

bool subset_feasible(const GroupStructure& g, const std::vector<std::int32_t>& subset,
                     const ConstraintSet& constraints) {
  if (constraints.kind() == ConstraintKind::Intersectional) {
    std::map<Signature, int> counts;
    for (std::int32_t i : subset) ++counts[g.signature_of(i)];
    for (const auto& [sig, bound] : constraints.cell_bounds()) {
      auto it = counts.find(sig);
      if ((it == counts.end() ? 0 : it->second) < bound) return false;
    }
    return true;
  }
  const int p = g.p();
  for (int l = 0; l < p; ++l) {
    int count = 0;
    for (std::int32_t i : subset) {
      if (signature_has_group(g.signature_of(i), l, p)) ++count;
    }
    if (count < constraints.group_bounds()[static_cast<std::size_t>(l)]) return false;
  }
  return true;
}

}  // namespace

Selection brute_force_select(const GroupStructure& structure, std::span<const double> w,
                             std::span<const double> w_hat, const ConstraintSet* constraints, int n) {
  require_sizes(structure, w_hat, n);
  const int m = structure.m();
  if (binomial_capped(m, n, kBruteForceLimit) > kBruteForceLimit) {
    throw std::invalid_argument("instance too large for subset enumeration");
  }

  std::vector<std::int32_t> subset(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) subset[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(i);

  bool found = false;
  double best_value = 0.0;
  std::vector<std::int32_t> best;

  // Lexicographic enumeration; strict improvement keeps the lexicographically
  // smallest maximizer.
  while (true) {
    if (constraints == nullptr || subset_feasible(structure, subset, *constraints)) {
      double value = 0.0;
      for (std::int32_t i : subset) value += w_hat[static_cast<std::size_t>(i)];
      if (!found || value > best_value) {
        found = true;
        best_value = value;
        best = subset;
      }
    }
    // next combination
    int i = n - 1;
    while (i >= 0 && subset[static_cast<std::size_t>(i)] == m - n + i) --i;
    if (i < 0) break;
    ++subset[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < n; ++j) {
      subset[static_cast<std::size_t>(j)] = subset[static_cast<std::size_t>(j - 1)] + 1;
    }
  }

  if (!found) throw InfeasibleError("no feasible subset");
  return make_selection(std::move(best), structure, w, w_hat);
}

double utility_ratio_single(const Selection& sel_tilde, const Selection& sel_star) {
  if (!(sel_star.latent_total > 0.0)) {
    throw std::domain_error("optimal latent utility is not positive");
  }
  return sel_tilde.latent_total / sel_star.latent_total;
}

bool satisfies_top_k_per_cell(const Selection& sel, const GroupStructure& structure,
                              std::span<const double> w_hat) {
  std::map<Signature, std::vector<std::int32_t>> chosen_by_cell;
  for (std::int32_t i : sel.chosen) chosen_by_cell[structure.signature_of(i)].push_back(i);
  for (const auto& [sig, items] : structure.intersections()) {
    auto it = chosen_by_cell.find(sig);
    const std::size_t k = (it == chosen_by_cell.end()) ? 0 : it->second.size();
    if (k == 0) continue;
    std::vector<std::int32_t> cell_order = items;
    std::sort(cell_order.begin(), cell_order.end(), [&](std::int32_t a, std::int32_t b) {
      const double va = w_hat[static_cast<std::size_t>(a)];
      const double vb = w_hat[static_cast<std::size_t>(b)];
      if (va != vb) return va > vb;
      return a < b;
    });
    std::vector<std::int32_t> expected(cell_order.begin(), cell_order.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(expected.begin(), expected.end());
    if (expected != it->second) return false;
  }
  return true;
}

}  // namespace biasedselect
