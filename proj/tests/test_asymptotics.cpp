#include <doctest.h>

#include <cmath>

#include "biasedselect/asymptotics.hpp"
#include "biasedselect/constraints.hpp"
#include "biasedselect/rng.hpp"

using namespace biasedselect;

namespace {

UniformCellObjective uniform_objective(std::array<double, 4> beta_factors, std::array<double, 4> sizes) {
  return UniformCellObjective(beta_factors, sizes);
}

std::array<double, 4> factors_of(double beta1, double beta2) {
  // index by signature value: 0="00", 1="01", 2="10", 3="11"
  return {1.0, beta2, beta1, beta1 * beta2};
}

// Dense grid search over the feasible polytope of Program (2). Each axis
// carries the regular grid plus its box and coverage boundary values, so
// solutions on constraint faces are reachable exactly.
double grid_search_value(const CellObjective& f, double n, double L1, double L2, int steps) {
  const auto& s = f.sizes();
  const double h = n / static_cast<double>(steps);
  auto candidates = [&](double cap, double boundary) {
    std::vector<double> out;
    for (double v = 0.0; v < cap; v += h) out.push_back(v);
    out.push_back(cap);
    if (boundary > 0.0 && boundary < cap) out.push_back(boundary);
    return out;
  };

  double best = -1.0;
  for (double k3 : candidates(std::min(s[3], n), std::max({L1, L2, L1 + L2 - n}))) {
    for (double k2 : candidates(std::min(s[2], n - k3), L1 - k3)) {
      for (double k1 : candidates(std::min(s[1], n - k3 - k2), L2 - k3)) {
        const double k0 = n - k3 - k2 - k1;
        if (k0 < -1e-12 || k0 > s[0] + 1e-12) continue;
        if (k2 + k3 < L1 - 1e-12 || k1 + k3 < L2 - 1e-12) continue;
        AllocationVector k;
        k.k = {std::min(std::max(k0, 0.0), s[0]), k1, k2, k3};
        best = std::max(best, f.total(k));
      }
    }
  }
  return best;
}

}  // namespace

TEST_CASE("f_value closed forms for the uniform distribution") {
  const std::array<double, 4> sizes{25, 25, 25, 25};  // m = 100
  const auto f1 = uniform_objective({1, 1, 1, 1}, sizes);

  SUBCASE("proportional allocation gives n(1 - n/(2m))") {
    const double n = 50;
    AllocationVector k;
    for (int c = 0; c < 4; ++c) k.k[static_cast<std::size_t>(c)] = sizes[static_cast<std::size_t>(c)] * n / 100.0;
    CHECK(f1.total(k) == doctest::Approx(n * (1.0 - n / 200.0)).epsilon(1e-12));
  }
  SUBCASE("empty allocation") {
    CHECK(f1.total(AllocationVector{}) == 0.0);
  }
  SUBCASE("full allocation gives m/2") {
    AllocationVector k;
    k.k = {25, 25, 25, 25};
    CHECK(f1.total(k) == doctest::Approx(50.0));
  }
}

TEST_CASE("general objective matches the uniform closed form") {
  const std::array<double, 4> sizes{0.25, 0.25, 0.25, 0.25};
  const auto dist = UtilityDistribution::uniform(0, 1);
  const Bias bias = MultiplicativeBias({0.6, 0.8});
  const auto obj = make_objectives(bias, dist, sizes);

  std::array<std::function<double(double)>, 4> maps;
  const auto factors = factors_of(0.6, 0.8);
  for (int c = 0; c < 4; ++c) {
    const double f = factors[static_cast<std::size_t>(c)];
    maps[static_cast<std::size_t>(c)] = [f](double x) { return f * x; };
  }
  const GeneralCellObjective general(std::move(maps), dist, sizes, 1e-12);

  rng::Stream stream(21);
  for (int round = 0; round < 20; ++round) {
    AllocationVector k;
    for (int c = 0; c < 4; ++c) k.k[static_cast<std::size_t>(c)] = 0.25 * stream.uniform01();
    CHECK(general.total(k) == doctest::Approx(obj.observed->total(k)).epsilon(1e-9));
  }
}

TEST_CASE("analytic gradient matches central differences") {
  const std::array<double, 4> sizes{0.3, 0.2, 0.25, 0.25};
  const auto uniform = uniform_objective(factors_of(0.5, 0.7), sizes);

  const auto tn = UtilityDistribution::truncated_normal(0.5, 0.2, 0.0, 1.0);
  std::array<std::function<double(double)>, 4> maps;
  const auto factors = factors_of(0.5, 0.7);
  for (int c = 0; c < 4; ++c) {
    const double f = factors[static_cast<std::size_t>(c)];
    maps[static_cast<std::size_t>(c)] = [f](double x) { return f * x; };
  }
  const GeneralCellObjective general(std::move(maps), tn, sizes, 1e-12);

  rng::Stream stream(22);
  for (const CellObjective* obj : {static_cast<const CellObjective*>(&uniform),
                                   static_cast<const CellObjective*>(&general)}) {
    for (int round = 0; round < 10; ++round) {
      const int c = static_cast<int>(stream.next_u64() % 4);
      const double s = obj->sizes()[static_cast<std::size_t>(c)];
      const double k = (0.1 + 0.8 * stream.uniform01()) * s;
      const double h = 1e-5;
      const double fd = (obj->value(c, k + h) - obj->value(c, k - h)) / (2.0 * h);
      const double analytic = obj->marginal(c, k);
      CHECK(fd == doctest::Approx(analytic).epsilon(1e-5));
    }
  }
}

TEST_CASE("program 1 is the proportional allocation") {
  SUBCASE("balanced quarter cells") {
    const auto s = solve_program1({25, 25, 25, 25}, 50);
    for (double v : s.k) CHECK(v == doctest::Approx(12.5));
  }
  SUBCASE("full selection") {
    const auto s = solve_program1({25, 25, 25, 25}, 100);
    for (double v : s.k) CHECK(v == doctest::Approx(25.0));
  }
  SUBCASE("asymmetric sizes") {
    // cells ("11","10","01","00") = (40,40,160,160)
    const auto s = solve_program1({160, 160, 40, 40}, 100);
    CHECK(s.k[3] == doctest::Approx(10.0));
    CHECK(s.k[2] == doctest::Approx(10.0));
    CHECK(s.k[1] == doctest::Approx(40.0));
    CHECK(s.k[0] == doctest::Approx(40.0));
  }
}

TEST_CASE("program 2 basic solutions") {
  const std::array<double, 4> sizes{0.25, 0.25, 0.25, 0.25};

  SUBCASE("no bias, no constraints: proportional") {
    const auto f = uniform_objective({1, 1, 1, 1}, sizes);
    const auto k = solve_program2(f, 0.5, 0.0, 0.0);
    for (double v : k.k) CHECK(v == doctest::Approx(0.125).epsilon(1e-8));
  }
  SUBCASE("constraint-pinned corner") {
    // L1 = L2 = n with |I_11| >= n forces everything into the shared cell
    const auto f = uniform_objective(factors_of(0.5, 0.5), sizes);
    const auto k = solve_program2(f, 0.2, 0.2, 0.2);
    CHECK(k.k[3] == doctest::Approx(0.2).epsilon(1e-8));
    CHECK(k.k[0] == doctest::Approx(0.0).epsilon(1e-8));
  }
  SUBCASE("infeasible bounds") {
    const auto f = uniform_objective({1, 1, 1, 1}, sizes);
    CHECK_THROWS_AS(solve_program2(f, 0.5, 0.6, 0.6), InfeasibleError);
  }
}

TEST_CASE("program 2 matches a dense grid search") {
  rng::Stream stream(23);
  int checked = 0;
  for (int round = 0; round < 60 && checked < 25; ++round) {
    // near-balanced cells keep the grid's quadratic offset well under the
    // 1e-4 comparison tolerance at step n/200
    std::array<double, 4> sizes;
    for (double& s : sizes) s = 0.2 + 0.15 * stream.uniform01();
    const double mass = sizes[0] + sizes[1] + sizes[2] + sizes[3];
    const double n = (0.3 + 0.3 * stream.uniform01()) * mass;
    const double g1 = sizes[2] + sizes[3];
    const double g2 = sizes[1] + sizes[3];
    const double l1 = 0.8 * stream.uniform01() * std::min(g1, n);
    const double l2 = 0.8 * stream.uniform01() * std::min(g2, n);
    const auto f = uniform_objective(factors_of(0.1 + 0.9 * stream.uniform01(),
                                                0.1 + 0.9 * stream.uniform01()),
                                     sizes);

    AllocationVector k;
    try {
      k = solve_program2(f, n, l1, l2);
    } catch (const InfeasibleError&) {
      continue;
    }
    ++checked;
    const double solver_value = f.total(k);
    const double grid_value = grid_search_value(f, n, l1, l2, 200);
    CHECK(solver_value >= grid_value - 1e-9);
    CHECK(std::abs(solver_value - grid_value) <= 1e-4);
  }
  CHECK(checked >= 20);
}

TEST_CASE("program 2 solutions satisfy the KKT conditions") {
  rng::Stream stream(24);
  int checked = 0;
  for (int round = 0; round < 250 && checked < 100; ++round) {
    std::array<double, 4> sizes;
    for (double& s : sizes) s = 0.15 + 0.85 * stream.uniform01();
    const double mass = sizes[0] + sizes[1] + sizes[2] + sizes[3];
    const double n = (0.3 + 0.4 * stream.uniform01()) * mass;
    const double l1 = 0.8 * stream.uniform01() * std::min(sizes[2] + sizes[3], n);
    const double l2 = 0.8 * stream.uniform01() * std::min(sizes[1] + sizes[3], n);
    const auto f = uniform_objective(factors_of(0.05 + 0.95 * stream.uniform01(),
                                                0.05 + 0.95 * stream.uniform01()),
                                     sizes);
    AllocationVector k;
    try {
      k = solve_program2(f, n, l1, l2);
    } catch (const InfeasibleError&) {
      continue;
    }
    ++checked;
    CHECK(kkt_residual(f, n, l1, l2, k) <= 1e-8);
  }
  CHECK(checked >= 80);
}

TEST_CASE("program nesting: constrained latent value never beats program 1") {
  rng::Stream stream(25);
  const std::array<double, 4> sizes{0.25, 0.25, 0.25, 0.25};
  const auto latent = uniform_objective({1, 1, 1, 1}, sizes);
  int checked = 0;
  for (int round = 0; round < 120 && checked < 50; ++round) {
    const auto observed = uniform_objective(factors_of(0.05 + 0.95 * stream.uniform01(),
                                                       0.05 + 0.95 * stream.uniform01()),
                                            sizes);
    const double l1 = 0.5 * stream.uniform01();
    const double l2 = 0.5 * stream.uniform01();
    double r = 0.0;
    try {
      r = limit_utility_ratio(observed, latent, 0.5, l1, l2);
    } catch (const InfeasibleError&) {
      continue;
    }
    ++checked;
    CHECK(r <= 1.0 + 1e-9);
    CHECK(r > 0.0);
  }
  CHECK(checked >= 30);
}

TEST_CASE("interior stationarity at beta = 1") {
  const std::array<double, 4> sizes{0.2, 0.35, 0.15, 0.3};
  const auto f = uniform_objective({1, 1, 1, 1}, sizes);
  const auto s = solve_program1(sizes, 0.4);
  // <grad f, (1, -1, -1, 1)> over cells (00, 01, 10, 11)
  const double inner = f.marginal(0, s.k[0]) - f.marginal(1, s.k[1]) - f.marginal(2, s.k[2]) +
                       f.marginal(3, s.k[3]);
  CHECK(inner == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("limit utility ratios") {
  const std::array<double, 4> sizes{0.25, 0.25, 0.25, 0.25};
  const auto latent = uniform_objective({1, 1, 1, 1}, sizes);

  SUBCASE("no bias recovers 1 under mild constraints") {
    const auto observed = uniform_objective({1, 1, 1, 1}, sizes);
    CHECK(limit_utility_ratio(observed, latent, 0.5, 0.1, 0.2) == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("unconstrained with real bias loses utility") {
    const auto observed = uniform_objective(factors_of(0.5, 0.5), sizes);
    const double r = limit_utility_ratio(observed, latent, 0.5, 0.0, 0.0);
    CHECK(r < 1.0 - 1e-4);
    // cross-check the allocation against the grid oracle through f_1
    const AllocationVector tilde = solve_program2(observed, 0.5, 0.0, 0.0);
    const double expected = latent.total(tilde) / latent.total(solve_program1(sizes, 0.5));
    CHECK(r == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("zero interaction gap plus proportional bounds recover 1") {
    // additive slopes: b00 + b11 = b10 + b01 pointwise
    const auto dist = UtilityDistribution::uniform(0, 1);
    std::array<std::function<double(double)>, 4> obs_maps{
        [](double x) { return 1.0 * x; },  // 00
        [](double x) { return 0.7 * x; },  // 01
        [](double x) { return 0.6 * x; },  // 10
        [](double x) { return 0.3 * x; },  // 11
    };
    std::array<std::function<double(double)>, 4> lat_maps{
        [](double x) { return x; }, [](double x) { return x; }, [](double x) { return x; },
        [](double x) { return x; }};
    const GeneralCellObjective observed(std::move(obs_maps), dist, sizes, 1e-11);
    const GeneralCellObjective lat(std::move(lat_maps), dist, sizes, 1e-11);
    const double l1 = (sizes[2] + sizes[3]) * 0.5;  // |G1| * n / m
    const double l2 = (sizes[1] + sizes[3]) * 0.5;
    CHECK(limit_utility_ratio(observed, lat, 0.5, l1, l2) == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("max_limit_ratio") {
  const std::array<double, 4> sizes{0.25, 0.25, 0.25, 0.25};
  const auto latent = uniform_objective({1, 1, 1, 1}, sizes);

  SUBCASE("no bias: maximum 1 at L = (0, 0)") {
    const auto observed = uniform_objective({1, 1, 1, 1}, sizes);
    const auto best = max_limit_ratio(observed, latent, 0.5, 40);
    CHECK(best.ratio == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(best.l1 == doctest::Approx(0.0));
    CHECK(best.l2 == doctest::Approx(0.0));
  }
  SUBCASE("one unbiased group is recoverable") {
    const auto observed = uniform_objective(factors_of(1.0, 0.5), sizes);
    const auto best = max_limit_ratio(observed, latent, 0.5, 80);
    CHECK(best.ratio >= 1.0 - 1e-3);
  }
}

TEST_CASE("closed-form bound reports") {
  SUBCASE("two-group uniform bound") {
    CHECK(uniform_ratio_bound(0.25, 0.5, 1.0, 0.5).value == doctest::Approx(1.0));
    CHECK(uniform_ratio_bound(0.25, 0.5, 0.0, 0.0).value == doctest::Approx(1.0 - 1.0 / 576.0));
    const auto r = uniform_ratio_bound(0.25, 0.5, 0.3, 0.6);
    const double term = (0.25 / 3.0) * 0.5 * 0.7 * 0.4;
    CHECK(r.value == doctest::Approx(1.0 - term * term));
  }
  SUBCASE("generalized bound") {
    CHECK(general_ratio_bound(0.8, 0.25, 0.5, 0.0).value == doctest::Approx(1.0));
    CHECK(general_ratio_bound(1.0, 0.25, 0.5, 0.125).value == doctest::Approx(1.0 - 1.0 / 4096.0));
    // smaller c weakens (raises) the bound
    CHECK(general_ratio_bound(0.5, 0.25, 0.5, 0.125).value > general_ratio_bound(1.0, 0.25, 0.5, 0.125).value);
  }
  SUBCASE("8/9 + (3/2) max beta") {
    CHECK(extreme_bias_ratio_bound(0.0, 0.0).value == doctest::Approx(8.0 / 9.0));
    CHECK(extreme_bias_ratio_bound(2.0 / 27.0, 0.0).value == doctest::Approx(1.0));
    CHECK(extreme_bias_ratio_bound(0.01, 0.02).value == doctest::Approx(8.0 / 9.0 + 0.03));
  }
}
