#include <CLI11.hpp>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "biasedselect/asymptotics.hpp"
#include "biasedselect/io.hpp"
#include "biasedselect/montecarlo.hpp"
#include "biasedselect/rng.hpp"

namespace bs = biasedselect;
using nlohmann::json;

namespace {

struct CommonOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
};

bs::io::ExperimentConfig load(const CommonOptions& opts) {
  bs::io::ExperimentConfig cfg = bs::io::load_config(opts.config_path);
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.trials) cfg.trials = *opts.trials;
  return cfg;
}

const bs::SelectionProblem& need_problem(const bs::io::ExperimentConfig& cfg) {
  if (!cfg.problem) throw bs::io::ConfigError("config needs a 'problem' section");
  return *cfg.problem;
}

const bs::UtilityDistribution& need_distribution(const bs::io::ExperimentConfig& cfg) {
  if (!cfg.distribution) throw bs::io::ConfigError("config needs a 'distribution' section");
  return *cfg.distribution;
}

const bs::Bias& need_bias(const bs::io::ExperimentConfig& cfg) {
  if (!cfg.bias) throw bs::io::ConfigError("config needs a 'bias' section");
  return *cfg.bias;
}

std::string out_path(const CommonOptions& opts, const std::string& name) {
  std::filesystem::create_directories(opts.out_dir);
  return (std::filesystem::path(opts.out_dir) / name).string();
}

std::array<double, 4> cell_sizes_p2(const bs::SelectionProblem& problem) {
  if (problem.structure().p() != 2) {
    throw bs::io::ConfigError("this command needs a p = 2 problem");
  }
  std::array<double, 4> sizes{};
  for (int c = 0; c < 4; ++c) {
    sizes[static_cast<std::size_t>(c)] = problem.structure().cell_size(static_cast<bs::Signature>(c));
  }
  return sizes;
}

std::array<double, 2> bias_beta_pair(const bs::Bias& bias) {
  const auto& beta = std::visit([](const auto& b) -> const std::vector<double>& { return b.beta(); }, bias);
  if (beta.size() != 2) throw bs::io::ConfigError("expected a beta vector of length 2");
  return {beta[0], beta[1]};
}

int cmd_simulate(const CommonOptions& opts) {
  const bs::io::ExperimentConfig cfg = load(opts);
  const bs::SelectionProblem& problem = need_problem(cfg);
  const bs::UtilityDistribution& dist = need_distribution(cfg);
  const bs::Bias& bias = need_bias(cfg);

  if (cfg.constraints && cfg.design_epsilon) {
    throw bs::io::ConfigError("give either 'constraints' or 'design', not both");
  }
  std::optional<bs::ConstraintSet> constraints = cfg.constraints;
  if (cfg.design_epsilon) constraints = bs::design_intersectional(problem, *cfg.design_epsilon);

  const bs::RatioEstimate est =
      bs::estimate_utility_ratio(problem, dist, bias, constraints ? &*constraints : nullptr,
                                 cfg.trials.value_or(1000), cfg.seed, cfg.keep_per_trial);

  const std::string csv = out_path(opts, cfg.csv_name.empty() ? "simulate.csv" : cfg.csv_name);
  bs::io::write_csv(csv, {"mean", "stderr", "trials", "seed", "diag_ratio_of_means"},
                    {{bs::io::format_g17(est.mean), bs::io::format_g17(est.std_error),
                      std::to_string(est.trials), std::to_string(est.seed),
                      bs::io::format_g17(est.diag_ratio_of_means)}});

  json summary{{"command", "simulate"},
               {"mean", est.mean},
               {"stderr", est.std_error},
               {"trials", est.trials},
               {"seed", est.seed},
               {"diag_ratio_of_means", est.diag_ratio_of_means}};
  if (constraints) summary["constraints"] = bs::io::constraints_to_json(*constraints, problem.structure().p());
  if (cfg.keep_per_trial) summary["per_trial"] = est.per_trial;
  bs::io::write_json(out_path(opts, cfg.json_name.empty() ? "simulate.json" : cfg.json_name), summary);
  std::printf("mean=%.6f stderr=%.2e trials=%d\n", est.mean, est.std_error, est.trials);
  return 0;
}

int cmd_sweep(const CommonOptions& opts) {
  const bs::io::ExperimentConfig cfg = load(opts);
  const bs::SelectionProblem& problem = need_problem(cfg);
  const bs::UtilityDistribution& dist = need_distribution(cfg);
  const bs::Bias& bias = need_bias(cfg);
  if (cfg.l1_grid.empty() || cfg.l2_grid.empty()) {
    throw bs::io::ConfigError("sweep needs 'sweep.l1_grid' and 'sweep.l2_grid'");
  }

  const int trials = cfg.trials.value_or(200);
  std::vector<std::vector<std::string>> rows;
  json summary{{"command", "sweep"}, {"trials", trials}, {"seed", cfg.seed}};

  if (!cfg.beta_grid.empty()) {
    if (!std::holds_alternative<bs::MultiplicativeBias>(bias)) {
      throw bs::io::ConfigError("a beta_grid sweep needs multiplicative bias");
    }
    json maxima = json::array();
    for (const auto& [b1, b2] : cfg.beta_grid) {
      const bs::Bias point = bs::MultiplicativeBias({b1, b2});
      const bs::SweepResult sweep = bs::sweep_nonintersectional(problem, dist, point, cfg.l1_grid,
                                                                cfg.l2_grid, trials, cfg.seed);
      const bs::SweepCell& best = sweep.cells[sweep.argmax];
      rows.push_back({bs::io::format_g17(b1), bs::io::format_g17(b2), std::to_string(best.l1),
                      std::to_string(best.l2), bs::io::format_g17(best.estimate.mean),
                      bs::io::format_g17(best.estimate.std_error)});
      maxima.push_back(json{{"beta1", b1},
                            {"beta2", b2},
                            {"l1", best.l1},
                            {"l2", best.l2},
                            {"max_mean", best.estimate.mean},
                            {"stderr", best.estimate.std_error}});
    }
    const std::string csv = out_path(opts, cfg.csv_name.empty() ? "sweep.csv" : cfg.csv_name);
    bs::io::write_csv(csv, {"beta1", "beta2", "best_l1", "best_l2", "max_mean", "stderr"}, rows);
    summary["maxima"] = maxima;
  } else {
    const bs::SweepResult sweep =
        bs::sweep_nonintersectional(problem, dist, bias, cfg.l1_grid, cfg.l2_grid, trials, cfg.seed);
    for (const bs::SweepCell& cell : sweep.cells) {
      rows.push_back({std::to_string(cell.l1), std::to_string(cell.l2),
                      bs::io::format_g17(cell.estimate.mean), bs::io::format_g17(cell.estimate.std_error),
                      std::to_string(trials), std::to_string(cfg.seed)});
    }
    const std::string csv = out_path(opts, cfg.csv_name.empty() ? "sweep.csv" : cfg.csv_name);
    bs::io::write_csv(csv, {"l1", "l2", "mean", "stderr", "trials", "seed"}, rows);
    const bs::SweepCell& best = sweep.cells[sweep.argmax];
    summary["argmax"] = json{{"l1", best.l1},
                             {"l2", best.l2},
                             {"mean", best.estimate.mean},
                             {"stderr", best.estimate.std_error}};
  }
  bs::io::write_json(out_path(opts, cfg.json_name.empty() ? "sweep.json" : cfg.json_name), summary);
  return 0;
}

int cmd_asymptotic(const CommonOptions& opts) {
  const bs::io::ExperimentConfig cfg = load(opts);
  const bs::SelectionProblem& problem = need_problem(cfg);
  const bs::UtilityDistribution& dist = need_distribution(cfg);
  const bs::Bias& bias = need_bias(cfg);
  const std::array<double, 4> sizes = cell_sizes_p2(problem);
  const double n = problem.n();
  const double eta = problem.eta().value();
  const double rho = problem.rho().value();
  const auto c_params = bs::assumption2_c(dist);

  std::vector<std::array<double, 2>> beta_points = cfg.beta_grid;
  const bool use_config_bias = beta_points.empty();
  if (use_config_bias) beta_points.push_back(bias_beta_pair(bias));

  std::vector<std::vector<std::string>> rows;
  json points = json::array();
  for (const auto& [b1, b2] : beta_points) {
    bs::Bias point = use_config_bias ? bias : bs::Bias(bs::MultiplicativeBias({b1, b2}));
    const bs::ProgramObjectives obj = bs::make_objectives(point, dist, sizes);
    const bs::MaxRatioResult best =
        bs::max_limit_ratio(*obj.observed, *obj.latent, n, cfg.asymptotic_grid);

    double bound1 = std::nan("");
    double bound3 = std::nan("");
    if (eta > 0.0 && eta < 1.0 && rho > 0.0) {
      bound1 = bs::uniform_ratio_bound(rho, eta, b1, b2).value;
      if (c_params) {
        const double delta_b = bs::interaction_gap(point, dist, problem);
        bound3 = bs::general_ratio_bound(c_params->c, rho, eta, delta_b).value;
      }
    }
    rows.push_back({bs::io::format_g17(b1), bs::io::format_g17(b2), bs::io::format_g17(best.l1),
                    bs::io::format_g17(best.l2), bs::io::format_g17(best.ratio),
                    bs::io::format_g17(bound1), bs::io::format_g17(bound3)});
    points.push_back(json{{"beta1", b1},
                          {"beta2", b2},
                          {"l1", best.l1},
                          {"l2", best.l2},
                          {"limit_ratio", best.ratio},
                          {"thm1_bound", bound1},
                          {"thm3_bound", bound3}});
  }
  const std::string csv = out_path(opts, cfg.csv_name.empty() ? "asymptotic.csv" : cfg.csv_name);
  bs::io::write_csv(csv, {"beta1", "beta2", "L1", "L2", "limit_ratio", "thm1_bound", "thm3_bound"}, rows);
  bs::io::write_json(out_path(opts, cfg.json_name.empty() ? "asymptotic.json" : cfg.json_name),
                     json{{"command", "asymptotic"}, {"grid", cfg.asymptotic_grid}, {"points", points}});
  return 0;
}

int cmd_design(const CommonOptions& opts) {
  const bs::io::ExperimentConfig cfg = load(opts);
  const bs::SelectionProblem& problem = need_problem(cfg);
  if (!cfg.design_epsilon) throw bs::io::ConfigError("design needs 'design.epsilon'");

  const auto detail = bs::design_intersectional_detail(problem, *cfg.design_epsilon);
  const bs::ConstraintSet constraints = bs::design_intersectional(problem, *cfg.design_epsilon);
  const bs::FeasibilityReport feas = bs::check_feasibility(problem, constraints);

  const int p = problem.structure().p();
  json bounds = json::object();
  long long total = 0;
  for (const auto& [sig, d] : detail) {
    bounds[bs::signature_to_string(sig, p)] = json{{"bound", d.bound}, {"capped", d.capped}};
    total += d.bound;
  }
  json out{{"command", "design"},
           {"epsilon", *cfg.design_epsilon},
           {"n", problem.n()},
           {"sum_of_bounds", total},
           {"bounds", bounds},
           {"constraints", bs::io::constraints_to_json(constraints, p)},
           {"feasible", feas.feasible},
           {"diagnostic", feas.diagnostic}};
  bs::io::write_json(out_path(opts, cfg.json_name.empty() ? "design.json" : cfg.json_name), out);
  std::printf("designed %zu cell bounds, sum %lld <= n = %d\n", detail.size(), total, problem.n());
  return 0;
}

// Built-in validator suites.
bool verify_oracle_equivalence(std::uint64_t seed) {
  bs::rng::Stream stream(seed, 0xa11ce);
  int checked = 0;
  for (int round = 0; round < 2500; ++round) {
    const int p = 1 + static_cast<int>(stream.next_u64() % 3);
    const int m = 4 + static_cast<int>(stream.next_u64() % 6);
    std::vector<bs::Signature> memberships;
    for (int i = 0; i < m; ++i) {
      memberships.push_back(static_cast<bs::Signature>(stream.next_u64() % (1u << p)));
    }
    const bs::GroupStructure g(memberships, p);
    const int n = 1 + static_cast<int>(stream.next_u64() % static_cast<std::uint64_t>(m));
    std::vector<double> w(static_cast<std::size_t>(m)), beta(static_cast<std::size_t>(p));
    for (double& v : w) v = stream.uniform01();
    for (double& b : beta) b = 0.05 + 0.95 * stream.uniform01();
    const bs::MultiplicativeBias bias(beta);
    const std::vector<double> w_hat = bs::observed_utilities(w, g, bias);

    const bs::SelectionProblem problem(g, n);
    // random intersectional bounds
    std::map<bs::Signature, int> cell_bounds;
    int budget = n;
    for (const auto& [sig, items] : g.intersections()) {
      const int cap = std::min<int>(static_cast<int>(items.size()), budget);
      const int bound = cap > 0 ? static_cast<int>(stream.next_u64() % static_cast<std::uint64_t>(cap + 1)) : 0;
      cell_bounds[sig] = bound;
      budget -= bound;
    }
    const bs::ConstraintSet inter = bs::ConstraintSet::intersectional(cell_bounds);
    const bs::Selection fast_i = bs::select_constrained_intersectional(g, w, w_hat, inter, n);
    const bs::Selection brute_i = bs::brute_force_select(g, w, w_hat, &inter, n);
    if (std::abs(fast_i.observed_total - brute_i.observed_total) > 1e-12) return false;

    // random feasible non-intersectional bounds
    std::vector<int> group_bounds(static_cast<std::size_t>(p), 0);
    for (int l = 0; l < p; ++l) {
      group_bounds[static_cast<std::size_t>(l)] =
          static_cast<int>(stream.next_u64() % static_cast<std::uint64_t>(g.group_size(l) + 1));
    }
    const bs::ConstraintSet non = bs::ConstraintSet::non_intersectional(group_bounds);
    if (!bs::check_feasibility(problem, non).feasible) continue;
    const bs::Selection fast_n = bs::select_constrained_nonintersectional(g, w, w_hat, non, n);
    const bs::Selection brute_n = bs::brute_force_select(g, w, w_hat, &non, n);
    if (std::abs(fast_n.observed_total - brute_n.observed_total) > 1e-12) return false;
    ++checked;
  }
  return checked > 1000;
}

bool verify_order_stats(std::uint64_t seed) {
  const bs::ExpectationReport r = bs::check_unconstrained_expectation(100, 50, 20000, seed);
  if (r.flagged) return false;
  const bs::OrderStatMoments top = bs::order_stat_moments(100, 100);
  if (std::abs(top.mean - 100.0 / 101.0) > 1e-15) return false;
  return std::abs(bs::expected_top_k_sum(50, 100) - 50.0 * (1.0 - 51.0 / 202.0)) < 1e-12;
}

bool verify_hypergeometric(std::uint64_t seed) {
  const bs::SelectionProblem problem = bs::make_balanced_problem(
      400, 2, {{3, 0.25}, {2, 0.25}, {1, 0.25}, {0, 0.25}}, 200);
  const auto reports = bs::check_cell_counts(problem, bs::UtilityDistribution::uniform(0, 1), 2000, seed);
  for (const auto& r : reports) {
    if (r.flagged) return false;
  }
  return true;
}

int cmd_verify(std::uint64_t seed) {
  struct Suite {
    const char* name;
    bool (*run)(std::uint64_t);
  };
  const Suite suites[] = {{"oracle-equivalence", verify_oracle_equivalence},
                          {"order-statistics", verify_order_stats},
                          {"hypergeometric-cell-counts", verify_hypergeometric}};
  bool all_ok = true;
  for (const Suite& suite : suites) {
    const bool ok = suite.run(seed);
    std::printf("%s %s\n", ok ? "PASS" : "FAIL", suite.name);
    all_ok = all_ok && ok;
  }
  return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subset selection under intersectional implicit bias: simulation and analysis"};
  app.require_subcommand(1);

  CommonOptions opts;
  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    if (needs_config) {
      cmd->add_option("--config", opts.config_path, "experiment config (JSON)")->required();
    }
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--seed", opts.seed, "override the config seed");
    cmd->add_option("--trials", opts.trials, "override the config trial count");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "estimate the utility ratio by Monte Carlo");
  add_common(simulate, true);
  CLI::App* sweep = app.add_subcommand("sweep", "sweep non-intersectional (L1, L2) bounds");
  add_common(sweep, true);
  CLI::App* asymptotic = app.add_subcommand("asymptotic", "limit utility ratios and bounds");
  add_common(asymptotic, true);
  CLI::App* design = app.add_subcommand("design", "derive intersectional lower bounds");
  add_common(design, true);
  CLI::App* verify = app.add_subcommand("verify", "run the built-in validator suites");
  verify->add_option("--seed", opts.seed, "validator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage errors are config errors; --help is not
  }

  try {
    if (simulate->parsed()) return cmd_simulate(opts);
    if (sweep->parsed()) return cmd_sweep(opts);
    if (asymptotic->parsed()) return cmd_asymptotic(opts);
    if (design->parsed()) return cmd_design(opts);
    if (verify->parsed()) return cmd_verify(opts.seed.value_or(1));
  } catch (const bs::io::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const bs::InfeasibleError& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
