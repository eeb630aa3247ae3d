#pragma once

#include <cstdint>
#include <vector>

#include "biasedselect/bias.hpp"
#include "biasedselect/constraints.hpp"
#include "biasedselect/distribution.hpp"
#include "biasedselect/selection.hpp"

namespace biasedselect {

// Monte Carlo estimate of the utility ratio. The mean is the mean of
// per-trial ratios (the estimand is E[ratio], not a ratio of expectations);
// the ratio of summed utilities is reported only as a labeled diagnostic.
struct RatioEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  int trials = 0;
  std::uint64_t seed = 0;
  double diag_ratio_of_means = 0.0;
  std::vector<double> per_trial;  // retained on request
};

// Trial t draws from the substream (seed, t), so the estimate is bit-identical
// for any worker count. constraints == nullptr estimates the unconstrained
// biased decision maker.
RatioEstimate estimate_utility_ratio(const SelectionProblem& problem, const UtilityDistribution& dist,
                                     const Bias& bias, const ConstraintSet* constraints, int trials,
                                     std::uint64_t seed, bool keep_per_trial = false, int threads = 0);

struct SweepCell {
  int l1 = 0;
  int l2 = 0;
  bool feasible = true;  // jointly infeasible cells carry NaN estimates
  RatioEstimate estimate;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  std::size_t argmax = 0;  // maximizing cell; ties to the lexicographically smallest (L1, L2)
};

// Non-intersectional (L1, L2) sweep with common random numbers: every grid
// cell sees the same per-trial draws, which keeps the argmax stable. For
// p = 3 the third bound is held at zero.
SweepResult sweep_nonintersectional(const SelectionProblem& problem, const UtilityDistribution& dist,
                                    const Bias& bias, const std::vector<int>& l1_grid,
                                    const std::vector<int>& l2_grid, int trials, std::uint64_t seed,
                                    int threads = 0);

struct CellCountReport {
  Signature sig = 0;
  double empirical_mean = 0.0;
  double analytic_mean = 0.0;  // |I_sigma| * n / m
  double std_error = 0.0;
  double z = 0.0;
  bool flagged = false;  // beyond 4 standard errors
};

// Empirical mean of N_sigma (items x* takes per cell) against the
// hypergeometric mean.
std::vector<CellCountReport> check_cell_counts(const SelectionProblem& problem,
                                               const UtilityDistribution& dist, int trials,
                                               std::uint64_t seed, int threads = 0);

// E[sum of the top k of m Uniform(0,1) draws] = k (1 - (k+1)/(2(m+1))).
double expected_top_k_sum(int k, int m);

struct OrderStatMoments {
  double mean = 0.0;      // k/(m+1)
  double variance = 0.0;  // k(m-k+1)/((m+1)^2 (m+2))
};
OrderStatMoments order_stat_moments(int k, int m);

struct ExpectationReport {
  double empirical = 0.0;
  double analytic = 0.0;
  double std_error = 0.0;
  double z = 0.0;
  bool flagged = false;
};

// Empirical E[<x*, w>] for Uniform(0,1) against n(1 - (n+1)/(2(m+1))).
ExpectationReport check_unconstrained_expectation(int m, int n, int trials, std::uint64_t seed,
                                                  int threads = 0);

}  // namespace biasedselect
