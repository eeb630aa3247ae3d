#include "biasedselect/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "biasedselect/kernels.hpp"
#include "biasedselect/parallel.hpp"
#include "biasedselect/rng.hpp"

namespace biasedselect {

namespace {

struct SummaryStats {
  double mean = 0.0;
  double std_error = 0.0;
};

SummaryStats summarize(const std::vector<double>& values) {
  SummaryStats s;
  const int t = static_cast<int>(values.size());
  if (t == 0) return s;
  s.mean = kernels::sum(values) / static_cast<double>(t);
  if (t < 2) return s;
  double ss = 0.0;
  for (double v : values) {
    const double d = v - s.mean;
    ss += d * d;
  }
  s.std_error = std::sqrt(ss / (static_cast<double>(t) * static_cast<double>(t - 1)));
  return s;
}

// Per-item observed utilities; the multiplicative model reduces to one
// elementwise multiply against cached cell factors.
class BiasApplier {
 public:
  BiasApplier(const GroupStructure& structure, const Bias& bias) : structure_(&structure), bias_(&bias) {
    if (const auto* mult = std::get_if<MultiplicativeBias>(&bias)) {
      factors_ = item_factors(structure, *mult);
    } else {
      const auto& gen = std::get<GeneralBias>(bias);
      if (gen.p() != structure.p()) throw std::invalid_argument("bias group count must match the structure");
    }
  }

  void apply(std::span<const double> w, std::span<double> w_hat) const {
    if (!factors_.empty()) {
      kernels::multiply(w_hat, w, factors_);
      return;
    }
    const auto& gen = std::get<GeneralBias>(*bias_);
    for (int i = 0; i < structure_->m(); ++i) {
      w_hat[static_cast<std::size_t>(i)] =
          gen.apply(structure_->signature_of(i), w[static_cast<std::size_t>(i)]);
    }
  }

 private:
  const GroupStructure* structure_;
  const Bias* bias_;
  std::vector<double> factors_;
};

}  // namespace

RatioEstimate estimate_utility_ratio(const SelectionProblem& problem, const UtilityDistribution& dist,
                                     const Bias& bias, const ConstraintSet* constraints, int trials,
                                     std::uint64_t seed, bool keep_per_trial, int threads) {
  if (trials < 1) throw std::invalid_argument("need at least one trial");
  if (constraints != nullptr) {
    const FeasibilityReport report = check_feasibility(problem, *constraints);
    if (!report.feasible) throw InfeasibleError(report.diagnostic);
  }
  const GroupStructure& g = problem.structure();
  const int m = g.m();
  const int n = problem.n();
  const BiasApplier applier(g, bias);

  std::vector<double> ratios(static_cast<std::size_t>(trials));
  std::vector<double> numer(static_cast<std::size_t>(trials));
  std::vector<double> denom(static_cast<std::size_t>(trials));

  parallel_for(0, trials, threads, [&](int t) {
    rng::Stream stream(seed, static_cast<std::uint64_t>(t));
    std::vector<double> w(static_cast<std::size_t>(m));
    std::vector<double> w_hat(static_cast<std::size_t>(m));
    dist.sample(stream, w);
    applier.apply(w, w_hat);

    const Selection star = select_unconstrained(g, w, n);
    Selection tilde;
    if (constraints == nullptr) {
      tilde = select_biased(g, w, w_hat, n);
    } else if (constraints->kind() == ConstraintKind::Intersectional) {
      tilde = select_constrained_intersectional(g, w, w_hat, *constraints, n);
    } else {
      tilde = select_constrained_nonintersectional(g, w, w_hat, *constraints, n);
    }
    ratios[static_cast<std::size_t>(t)] = utility_ratio_single(tilde, star);
    numer[static_cast<std::size_t>(t)] = tilde.latent_total;
    denom[static_cast<std::size_t>(t)] = star.latent_total;
  });

  const SummaryStats stats = summarize(ratios);
  RatioEstimate est;
  est.mean = stats.mean;
  est.std_error = stats.std_error;
  est.trials = trials;
  est.seed = seed;
  est.diag_ratio_of_means = kernels::sum(numer) / kernels::sum(denom);
  if (keep_per_trial) est.per_trial = std::move(ratios);
  return est;
}

SweepResult sweep_nonintersectional(const SelectionProblem& problem, const UtilityDistribution& dist,
                                    const Bias& bias, const std::vector<int>& l1_grid,
                                    const std::vector<int>& l2_grid, int trials, std::uint64_t seed,
                                    int threads) {
  if (trials < 1) throw std::invalid_argument("need at least one trial");
  if (l1_grid.empty() || l2_grid.empty()) throw std::invalid_argument("sweep grids must be non-empty");
  const GroupStructure& g = problem.structure();
  const int p = g.p();
  if (p < 2 || p > 3) throw std::invalid_argument("sweep supports p = 2 or 3 (third bound held at 0)");
  for (int l1 : l1_grid) {
    if (l1 < 0 || l1 > g.group_size(0)) throw std::invalid_argument("L1 grid exceeds |G1|");
  }
  for (int l2 : l2_grid) {
    if (l2 < 0 || l2 > g.group_size(1)) throw std::invalid_argument("L2 grid exceeds |G2|");
  }

  const int m = g.m();
  const int n = problem.n();
  const BiasApplier applier(g, bias);
  const std::size_t n_cells = l1_grid.size() * l2_grid.size();

  // A grid cell can be jointly infeasible (both bounds cannot be met at
  // once) even when each axis stays inside its group; such cells carry no
  // estimate and never win the argmax.
  std::vector<char> feasible(n_cells, 0);
  {
    std::size_t cell = 0;
    bool any = false;
    for (int l1 : l1_grid) {
      for (int l2 : l2_grid) {
        std::vector<int> bounds(static_cast<std::size_t>(p), 0);
        bounds[0] = l1;
        bounds[1] = l2;
        feasible[cell] =
            check_feasibility(problem, ConstraintSet::non_intersectional(bounds)).feasible ? 1 : 0;
        any = any || feasible[cell];
        ++cell;
      }
    }
    if (!any) throw InfeasibleError("every sweep cell is infeasible");
  }

  // ratios[cell * trials + t]; common random numbers across cells.
  std::vector<double> ratios(n_cells * static_cast<std::size_t>(trials));

  parallel_for(0, trials, threads, [&](int t) {
    rng::Stream stream(seed, static_cast<std::uint64_t>(t));
    std::vector<double> w(static_cast<std::size_t>(m));
    std::vector<double> w_hat(static_cast<std::size_t>(m));
    dist.sample(stream, w);
    applier.apply(w, w_hat);

    const Selection star = select_unconstrained(g, w, n);
    const NonIntersectionalSolver solver(g, w_hat);
    std::vector<int> bounds(static_cast<std::size_t>(p), 0);
    std::size_t cell = 0;
    for (int l1 : l1_grid) {
      bounds[0] = l1;
      for (int l2 : l2_grid) {
        bounds[1] = l2;
        if (feasible[cell]) {
          const Selection tilde = solver.solve(bounds, n, w);
          ratios[cell * static_cast<std::size_t>(trials) + static_cast<std::size_t>(t)] =
              utility_ratio_single(tilde, star);
        }
        ++cell;
      }
    }
  });

  SweepResult result;
  result.cells.reserve(n_cells);
  std::size_t cell = 0;
  for (int l1 : l1_grid) {
    for (int l2 : l2_grid) {
      SweepCell sc;
      sc.l1 = l1;
      sc.l2 = l2;
      sc.estimate.trials = trials;
      sc.estimate.seed = seed;
      if (feasible[cell]) {
        std::vector<double> cell_ratios(
            ratios.begin() + static_cast<std::ptrdiff_t>(cell * static_cast<std::size_t>(trials)),
            ratios.begin() + static_cast<std::ptrdiff_t>((cell + 1) * static_cast<std::size_t>(trials)));
        const SummaryStats stats = summarize(cell_ratios);
        sc.estimate.mean = stats.mean;
        sc.estimate.std_error = stats.std_error;
        sc.feasible = true;
      } else {
        sc.estimate.mean = std::nan("");
        sc.estimate.std_error = std::nan("");
        sc.feasible = false;
      }
      result.cells.push_back(std::move(sc));
      ++cell;
    }
  }
  result.argmax = 0;
  bool have_max = false;
  for (std::size_t i = 0; i < result.cells.size(); ++i) {
    if (!result.cells[i].feasible) continue;
    if (!have_max || result.cells[i].estimate.mean > result.cells[result.argmax].estimate.mean) {
      result.argmax = i;
      have_max = true;
    }
  }
  return result;
}

std::vector<CellCountReport> check_cell_counts(const SelectionProblem& problem,
                                               const UtilityDistribution& dist, int trials,
                                               std::uint64_t seed, int threads) {
  if (trials < 100) throw std::invalid_argument("cell-count check needs at least 100 trials");
  const GroupStructure& g = problem.structure();
  const int m = g.m();
  const int n = problem.n();

  std::vector<Signature> sigs;
  for (const auto& [sig, items] : g.intersections()) sigs.push_back(sig);
  const std::size_t n_cells = sigs.size();

  std::vector<std::int32_t> counts(n_cells * static_cast<std::size_t>(trials), 0);
  parallel_for(0, trials, threads, [&](int t) {
    rng::Stream stream(seed, static_cast<std::uint64_t>(t));
    std::vector<double> w(static_cast<std::size_t>(m));
    dist.sample(stream, w);
    const Selection star = select_unconstrained(g, w, n);
    for (std::size_t c = 0; c < n_cells; ++c) {
      counts[c * static_cast<std::size_t>(trials) + static_cast<std::size_t>(t)] =
          static_cast<std::int32_t>(star.counts.at(sigs[c]));
    }
  });

  std::vector<CellCountReport> reports;
  for (std::size_t c = 0; c < n_cells; ++c) {
    CellCountReport r;
    r.sig = sigs[c];
    r.analytic_mean = static_cast<double>(g.cell_size(sigs[c])) * static_cast<double>(n) /
                      static_cast<double>(m);
    double sum = 0.0;
    for (int t = 0; t < trials; ++t) {
      sum += counts[c * static_cast<std::size_t>(trials) + static_cast<std::size_t>(t)];
    }
    r.empirical_mean = sum / static_cast<double>(trials);
    double ss = 0.0;
    for (int t = 0; t < trials; ++t) {
      const double d = counts[c * static_cast<std::size_t>(trials) + static_cast<std::size_t>(t)] -
                       r.empirical_mean;
      ss += d * d;
    }
    r.std_error = std::sqrt(ss / (static_cast<double>(trials) * static_cast<double>(trials - 1)));
    if (r.std_error > 0.0) {
      r.z = (r.empirical_mean - r.analytic_mean) / r.std_error;
      r.flagged = std::abs(r.z) > 4.0;
    } else {
      r.z = 0.0;
      r.flagged = r.empirical_mean != r.analytic_mean;
    }
    reports.push_back(r);
  }
  return reports;
}

double expected_top_k_sum(int k, int m) {
  if (k < 1 || k > m) throw std::invalid_argument("need 1 <= k <= m");
  return static_cast<double>(k) * (1.0 - static_cast<double>(k + 1) / (2.0 * static_cast<double>(m + 1)));
}

OrderStatMoments order_stat_moments(int k, int m) {
  if (k < 1 || k > m) throw std::invalid_argument("need 1 <= k <= m");
  OrderStatMoments o;
  const double kd = k, md = m;
  o.mean = kd / (md + 1.0);
  o.variance = kd * (md - kd + 1.0) / ((md + 1.0) * (md + 1.0) * (md + 2.0));
  return o;
}

ExpectationReport check_unconstrained_expectation(int m, int n, int trials, std::uint64_t seed,
                                                  int threads) {
  if (trials < 2) throw std::invalid_argument("need at least two trials");
  if (n < 1 || n > m) throw std::invalid_argument("need 1 <= n <= m");
  const UtilityDistribution dist = UtilityDistribution::uniform(0.0, 1.0);

  std::vector<double> sums(static_cast<std::size_t>(trials));
  parallel_for(0, trials, threads, [&](int t) {
    rng::Stream stream(seed, static_cast<std::uint64_t>(t));
    std::vector<double> w(static_cast<std::size_t>(m));
    dist.sample(stream, w);
    std::sort(w.begin(), w.end(), std::greater<>());
    sums[static_cast<std::size_t>(t)] = kernels::sum(std::span<const double>(w.data(), static_cast<std::size_t>(n)));
  });

  const SummaryStats stats = summarize(sums);
  ExpectationReport r;
  r.empirical = stats.mean;
  r.analytic = expected_top_k_sum(n, m);
  r.std_error = stats.std_error;
  r.z = r.std_error > 0.0 ? (r.empirical - r.analytic) / r.std_error : 0.0;
  r.flagged = std::abs(r.z) > 4.0;
  return r;
}

}  // namespace biasedselect
