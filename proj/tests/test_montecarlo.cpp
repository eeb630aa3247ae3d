#include <doctest.h>

#include <cmath>

#include "biasedselect/asymptotics.hpp"
#include "biasedselect/montecarlo.hpp"

using namespace biasedselect;

namespace {

SelectionProblem balanced(int m, int n) {
  return make_balanced_problem(m, 2, {{3, 0.25}, {2, 0.25}, {1, 0.25}, {0, 0.25}}, n);
}

ConstraintSet zero_intersectional(const GroupStructure& g) {
  std::map<Signature, int> bounds;
  for (const auto& [sig, items] : g.intersections()) bounds[sig] = 0;
  return ConstraintSet::intersectional(std::move(bounds));
}

}  // namespace

TEST_CASE("no bias and no constraints give ratio exactly 1") {
  const auto prob = balanced(40, 20);
  const auto est = estimate_utility_ratio(prob, UtilityDistribution::uniform(0, 1),
                                          MultiplicativeBias({1.0, 1.0}), nullptr, 50, 11);
  CHECK(est.mean == 1.0);
  CHECK(est.std_error == 0.0);
}

TEST_CASE("uniform unconstrained estimates stay above one half") {
  const auto prob = balanced(40, 20);
  const auto est = estimate_utility_ratio(prob, UtilityDistribution::uniform(0, 1),
                                          MultiplicativeBias({0.2, 0.7}), nullptr, 300, 12);
  CHECK(est.mean > 0.5);
  CHECK(est.mean <= 1.0);
  CHECK(est.std_error > 0.0);
}

TEST_CASE("estimates are reproducible across worker counts") {
  const auto prob = balanced(80, 40);
  const auto dist = UtilityDistribution::uniform(0, 1);
  const MultiplicativeBias bias({0.5, 0.8});
  const auto design = design_intersectional(prob, 0.2);

  const auto one = estimate_utility_ratio(prob, dist, bias, &design, 64, 33, true, 1);
  const auto four = estimate_utility_ratio(prob, dist, bias, &design, 64, 33, true, 4);
  CHECK(one.mean == four.mean);
  CHECK(one.std_error == four.std_error);
  CHECK(one.per_trial == four.per_trial);
}

TEST_CASE("per-trial ratios are invariant to scaling the distribution") {
  const auto prob = balanced(60, 30);
  const MultiplicativeBias bias({0.4, 0.6});
  const auto design = design_intersectional(prob, 0.3);

  const auto base = estimate_utility_ratio(prob, UtilityDistribution::uniform(0, 1), bias, &design,
                                           100, 77, true);
  const auto scaled = estimate_utility_ratio(prob, UtilityDistribution::uniform(0, 4), bias, &design,
                                             100, 77, true);
  CHECK(base.per_trial == scaled.per_trial);
}

TEST_CASE("intersectional and non-intersectional zero bounds agree per trial") {
  const auto prob = balanced(40, 20);
  const auto dist = UtilityDistribution::uniform(0, 1);
  const MultiplicativeBias bias({0.3, 0.9});

  const auto inter = zero_intersectional(prob.structure());
  const auto non = ConstraintSet::non_intersectional({0, 0});
  const auto a = estimate_utility_ratio(prob, dist, bias, &inter, 60, 5, true);
  const auto b = estimate_utility_ratio(prob, dist, bias, &non, 60, 5, true);
  CHECK(a.per_trial == b.per_trial);
}

TEST_CASE("infeasible constraints are rejected before any trials") {
  const auto prob = balanced(40, 20);
  const auto bad = ConstraintSet::non_intersectional({20, 20});  // needs the whole budget twice
  CHECK_THROWS_AS(estimate_utility_ratio(prob, UtilityDistribution::uniform(0, 1),
                                         MultiplicativeBias({0.5, 0.5}), &bad, 10, 1),
                  InfeasibleError);
}

TEST_CASE("designed constraints recover most of the utility at desk scale") {
  const auto prob = balanced(400, 200);
  const auto design = design_intersectional(prob, 0.1);
  const auto est = estimate_utility_ratio(prob, UtilityDistribution::uniform(0, 1),
                                          MultiplicativeBias({0.5, 0.5}), &design, 100, 2024);
  CHECK(est.mean >= 0.9);
}

TEST_CASE("sweep: degenerate grid equals a point estimate") {
  const auto prob = balanced(40, 20);
  const auto dist = UtilityDistribution::uniform(0, 1);
  const MultiplicativeBias bias({0.4, 0.8});

  const auto sweep = sweep_nonintersectional(prob, dist, bias, {0}, {0}, 50, 9);
  REQUIRE(sweep.cells.size() == 1);
  const auto non = ConstraintSet::non_intersectional({0, 0});
  const auto est = estimate_utility_ratio(prob, dist, bias, &non, 50, 9);
  CHECK(sweep.cells[0].estimate.mean == est.mean);
  CHECK(sweep.cells[0].estimate.std_error == est.std_error);
}

TEST_CASE("sweep: no bias peaks at zero bounds with mean 1") {
  const auto prob = balanced(40, 20);
  const auto sweep = sweep_nonintersectional(prob, UtilityDistribution::uniform(0, 1),
                                             MultiplicativeBias({1.0, 1.0}), {0, 5, 10}, {0, 5, 10},
                                             40, 10);
  const auto& best = sweep.cells[sweep.argmax];
  CHECK(best.l1 == 0);
  CHECK(best.l2 == 0);
  CHECK(best.estimate.mean == 1.0);
  for (const auto& cell : sweep.cells) CHECK(cell.estimate.mean <= 1.0);
}

TEST_CASE("sweep grids must stay inside the group sizes") {
  const auto prob = balanced(40, 20);
  CHECK_THROWS_AS(sweep_nonintersectional(prob, UtilityDistribution::uniform(0, 1),
                                          MultiplicativeBias({0.5, 0.5}), {0, 21}, {0}, 10, 1),
                  std::invalid_argument);
}

TEST_CASE("sweep maximum tracks the continuous-program maximum") {
  const int m = 400;
  const auto prob = balanced(m, 200);
  const auto dist = UtilityDistribution::uniform(0, 1);
  const MultiplicativeBias bias({0.1, 0.1});

  std::vector<int> grid;
  for (int l = 0; l <= 200; l += 10) grid.push_back(l);
  const auto sweep = sweep_nonintersectional(prob, dist, bias, grid, grid, 400, 31);
  const auto& best = sweep.cells[sweep.argmax];

  const std::array<double, 4> sizes{100, 100, 100, 100};
  const UniformCellObjective observed({1.0, 0.1, 0.1, 0.01}, sizes);
  const UniformCellObjective latent({1, 1, 1, 1}, sizes);
  const auto limit = max_limit_ratio(observed, latent, 200, 100);

  // finite-m estimate against the m -> infinity maximum; the concentration
  // gap scales like 1/sqrt(m) and dominates the Monte Carlo error here
  const double slack = 3.0 * best.estimate.std_error + 0.1 / std::sqrt(static_cast<double>(m));
  CHECK(std::abs(best.estimate.mean - limit.ratio) <= slack);
}

TEST_CASE("cell counts follow the hypergeometric mean") {
  const auto prob = balanced(400, 200);
  const auto reports = check_cell_counts(prob, UtilityDistribution::uniform(0, 1), 400, 2);
  for (const auto& r : reports) {
    CHECK(r.analytic_mean == doctest::Approx(50.0));
    CHECK_FALSE(r.flagged);
  }

  SUBCASE("full selection is deterministic") {
    const auto full = balanced(40, 40);
    for (const auto& r : check_cell_counts(full, UtilityDistribution::uniform(0, 1), 100, 3)) {
      CHECK(r.empirical_mean == doctest::Approx(10.0));
      CHECK_FALSE(r.flagged);
    }
  }
  SUBCASE("single cell takes everything") {
    std::vector<Signature> memberships(30, 0);
    const SelectionProblem single(GroupStructure(memberships, 1), 12);
    const auto reports2 = check_cell_counts(single, UtilityDistribution::uniform(0, 1), 100, 4);
    REQUIRE(reports2.size() == 1);
    CHECK(reports2[0].empirical_mean == doctest::Approx(12.0));
  }
}

TEST_CASE("order statistic formulas") {
  CHECK(expected_top_k_sum(50, 100) == doctest::Approx(50.0 * (1.0 - 51.0 / 202.0)));
  CHECK(expected_top_k_sum(1, 1) == doctest::Approx(0.5));
  CHECK(expected_top_k_sum(100, 100) == doctest::Approx(50.0));
  CHECK(order_stat_moments(100, 100).mean == doctest::Approx(100.0 / 101.0));
  CHECK(order_stat_moments(50, 100).variance ==
        doctest::Approx(50.0 * 51.0 / (101.0 * 101.0 * 102.0)));
  CHECK_THROWS_AS(expected_top_k_sum(0, 5), std::invalid_argument);
  CHECK_THROWS_AS(order_stat_moments(6, 5), std::invalid_argument);
}

TEST_CASE("empirical top-n sums match the closed form") {
  const auto report = check_unconstrained_expectation(100, 50, 10000, 6);
  CHECK(report.analytic == doctest::Approx(37.376237623762376));
  CHECK_FALSE(report.flagged);
}
