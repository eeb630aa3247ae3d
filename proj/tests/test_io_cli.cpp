#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "biasedselect/io.hpp"
#include "biasedselect/selection.hpp"

using namespace biasedselect;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kConfig = R"({
  "problem": {"m": 200, "n": 100, "p": 2,
              "cells": {"11": 50, "10": 50, "01": 50, "00": 50}},
  "distribution": {"kind": "uniform", "lo": 0.0, "hi": 1.0},
  "bias": {"kind": "multiplicative", "beta": [0.5, 0.5]},
  "design": {"epsilon": 0.1},
  "run": {"trials": 20, "seed": 99}
})";

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("biasedselect_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const fs::path& dir, const std::string& name, const std::string& content) {
  const fs::path p = dir / name;
  std::ofstream out(p);
  out << content;
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(BIASEDSELECT_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("experiment config round trip") {
  const fs::path dir = temp_dir("config");
  const fs::path cfg_path = write_file(dir, "config.json", kConfig);

  const io::ExperimentConfig cfg = io::load_config(cfg_path.string());
  REQUIRE(cfg.problem.has_value());
  CHECK(cfg.problem->m() == 200);
  CHECK(cfg.problem->n() == 100);
  CHECK(cfg.problem->structure().cell_size(3) == 50);
  REQUIRE(cfg.distribution.has_value());
  CHECK(cfg.distribution->kind() == UtilityDistribution::Kind::Uniform);
  REQUIRE(cfg.bias.has_value());
  CHECK(cfg.design_epsilon == doctest::Approx(0.1));
  CHECK(cfg.trials == 20);
  CHECK(cfg.seed == 99);
}

TEST_CASE("json serialization round trips") {
  const auto prob = make_balanced_problem(12, 2, {{3, 0.25}, {2, 0.25}, {1, 0.25}, {0, 0.25}}, 6);
  const json pj = io::problem_to_json(prob);
  const SelectionProblem back = io::problem_from_json(pj);
  CHECK(back.m() == prob.m());
  CHECK(back.n() == prob.n());
  CHECK(back.structure().cell_size(2) == 3);

  const ConstraintSet inter = ConstraintSet::intersectional({{3, 2}, {0, 1}});
  const ConstraintSet inter_back = io::constraints_from_json(io::constraints_to_json(inter, 2));
  CHECK(inter_back.kind() == ConstraintKind::Intersectional);
  CHECK(inter_back.cell_bounds() == inter.cell_bounds());

  const ConstraintSet non = ConstraintSet::non_intersectional({4, 0});
  CHECK(io::constraints_from_json(io::constraints_to_json(non, 2)).group_bounds() ==
        non.group_bounds());

  const auto dist = UtilityDistribution::truncated_power_law(2.5, 1.0, 8.0);
  const auto dist_back = io::distribution_from_json(io::distribution_to_json(dist));
  CHECK(dist_back.kind() == UtilityDistribution::Kind::TruncatedPowerLaw);
  CHECK(dist_back.param(0) == 2.5);

  const Bias bias = MultiplicativeBias({0.25, 0.75});
  const Bias bias_back = io::bias_from_json(io::bias_to_json(bias));
  CHECK(std::get<MultiplicativeBias>(bias_back).beta() == std::vector<double>{0.25, 0.75});

  // interleaved layouts keep their item-to-cell assignment
  const SelectionProblem interleaved(GroupStructure({1, 0, 1, 0, 2}, 2), 2);
  const SelectionProblem ib = io::problem_from_json(io::problem_to_json(interleaved));
  for (int i = 0; i < interleaved.m(); ++i) {
    CHECK(ib.structure().signature_of(i) == interleaved.structure().signature_of(i));
  }
}

TEST_CASE("config validation failures") {
  const fs::path dir = temp_dir("bad_config");
  CHECK_THROWS_AS(io::load_config((dir / "missing.json").string()), io::ConfigError);

  const fs::path not_json = write_file(dir, "broken.json", "{nope");
  CHECK_THROWS_AS(io::load_config(not_json.string()), io::ConfigError);

  const fs::path bad_sig = write_file(dir, "bad_sig.json", R"({
    "problem": {"m": 4, "n": 2, "p": 2, "cells": {"2": 4}}})");
  CHECK_THROWS_AS(io::load_config(bad_sig.string()), io::ConfigError);

  const fs::path bad_sum = write_file(dir, "bad_sum.json", R"({
    "problem": {"m": 5, "n": 2, "p": 1, "cells": {"1": 2, "0": 2}}})");
  CHECK_THROWS_AS(io::load_config(bad_sum.string()), io::ConfigError);
}

TEST_CASE("format_g17 round trips doubles") {
  for (double v : {0.1, 1.0 / 3.0, 37.376237623762376, 1e-300}) {
    CHECK(std::stod(io::format_g17(v)) == v);
  }
}

TEST_CASE("cli: design emits the constraint document") {
  const fs::path dir = temp_dir("cli_design");
  const fs::path cfg = write_file(dir, "config.json", kConfig);
  const int rc = run_cli("design --config " + cfg.string() + " --out " + dir.string());
  CHECK(rc == 0);

  std::ifstream in(dir / "design.json");
  REQUIRE(in.good());
  json out;
  in >> out;
  CHECK(out["epsilon"] == doctest::Approx(0.1));
  CHECK(out["feasible"] == true);
  for (const auto& [sig, entry] : out["bounds"].items()) {
    CHECK(entry["bound"] == 25);
    CHECK(entry["capped"] == false);
  }
}

TEST_CASE("cli: simulate writes csv and json") {
  const fs::path dir = temp_dir("cli_simulate");
  const fs::path cfg = write_file(dir, "config.json", kConfig);
  const int rc = run_cli("simulate --config " + cfg.string() + " --out " + dir.string() +
                         " --trials 10 --seed 5");
  CHECK(rc == 0);
  CHECK(fs::exists(dir / "simulate.csv"));
  CHECK(fs::exists(dir / "simulate.json"));

  std::ifstream in(dir / "simulate.json");
  json out;
  in >> out;
  CHECK(out["trials"] == 10);
  CHECK(out["seed"] == 5);
  CHECK(out["mean"].get<double>() > 0.5);
}

TEST_CASE("cli: usage errors exit 2") {
  CHECK(run_cli("simulate") == 2);            // missing --config
  CHECK(run_cli("no_such_subcommand") == 2);
  CHECK(run_cli("--help") == 0);
}

TEST_CASE("cli: design with epsilon outside (0,1) exits 2") {
  const fs::path dir = temp_dir("cli_design_eps");
  const fs::path cfg = write_file(dir, "config.json", R"({
    "problem": {"m": 8, "n": 4, "p": 2, "cells": {"11": 2, "10": 2, "01": 2, "00": 2}},
    "design": {"epsilon": 1.5}
  })");
  CHECK(run_cli("design --config " + cfg.string() + " --out " + dir.string()) == 2);
  CHECK_FALSE(fs::exists(dir / "design.json"));
}

TEST_CASE("cli: malformed config exits 2 and writes nothing") {
  const fs::path dir = temp_dir("cli_bad");
  const fs::path cfg = write_file(dir, "config.json", R"({"problem": {"m": 0}})");
  const int rc = run_cli("simulate --config " + cfg.string() + " --out " + dir.string());
  CHECK(rc == 2);
  CHECK_FALSE(fs::exists(dir / "simulate.csv"));
  CHECK_FALSE(fs::exists(dir / "simulate.json"));
}

TEST_CASE("cli: infeasible constraints exit 3") {
  const fs::path dir = temp_dir("cli_infeasible");
  const fs::path cfg = write_file(dir, "config.json", R"({
    "problem": {"m": 20, "n": 10, "p": 2, "cells": {"10": 10, "01": 10}},
    "distribution": {"kind": "uniform", "lo": 0.0, "hi": 1.0},
    "bias": {"kind": "multiplicative", "beta": [0.5, 0.5]},
    "constraints": {"kind": "non_intersectional", "bounds": [10, 10]},
    "run": {"trials": 5, "seed": 1}
  })");
  const int rc = run_cli("simulate --config " + cfg.string() + " --out " + dir.string());
  CHECK(rc == 3);
  CHECK_FALSE(fs::exists(dir / "simulate.csv"));
}

TEST_CASE("cli: sweep grid outside the group sizes exits 2") {
  const fs::path dir = temp_dir("cli_sweep_bad");
  const fs::path cfg = write_file(dir, "config.json", R"({
    "problem": {"m": 20, "n": 10, "p": 2, "cells": {"11": 5, "10": 5, "01": 5, "00": 5}},
    "distribution": {"kind": "uniform", "lo": 0.0, "hi": 1.0},
    "bias": {"kind": "multiplicative", "beta": [0.5, 0.5]},
    "sweep": {"l1_grid": [0, 11], "l2_grid": [0]},
    "run": {"trials": 5, "seed": 1}
  })");
  const int rc = run_cli("sweep --config " + cfg.string() + " --out " + dir.string());
  CHECK(rc == 2);
}

TEST_CASE("selections serialize with 1-based indices") {
  const GroupStructure g({3, 0, 0}, 2);
  const std::vector<double> w{0.9, 0.4, 0.8};
  const Selection sel = select_unconstrained(g, w, 2);
  const json j = io::selection_to_json(sel, 2);
  CHECK(j["chosen"] == json::array({1, 3}));
  CHECK(j["counts"]["11"] == 1);
  CHECK(j["counts"]["00"] == 1);
  CHECK(j["latent_total"].get<double>() == doctest::Approx(1.7));
}

TEST_CASE("cli: repeated runs produce byte-identical outputs") {
  const fs::path dir_a = temp_dir("cli_repeat_a");
  const fs::path dir_b = temp_dir("cli_repeat_b");
  const fs::path cfg = write_file(dir_a, "config.json", kConfig);
  REQUIRE(run_cli("simulate --config " + cfg.string() + " --out " + dir_a.string()) == 0);
  REQUIRE(run_cli("simulate --config " + cfg.string() + " --out " + dir_b.string()) == 0);

  for (const char* name : {"simulate.csv", "simulate.json"}) {
    std::ifstream a(dir_a / name), b(dir_b / name);
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());
    CHECK(!sa.str().empty());
  }
}

TEST_CASE("cli: thread count env var never changes results") {
  const fs::path dir_a = temp_dir("cli_threads_a");
  const fs::path dir_b = temp_dir("cli_threads_b");
  const fs::path cfg = write_file(dir_a, "config.json", kConfig);
  const std::string base = "simulate --config " + cfg.string();
  {
    const std::string cmd = std::string("BIASEDSELECT_THREADS=1 ") + BIASEDSELECT_CLI_PATH + " " +
                            base + " --out " + dir_a.string() + " > /dev/null 2>&1";
    REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  }
  {
    const std::string cmd = std::string("BIASEDSELECT_THREADS=3 ") + BIASEDSELECT_CLI_PATH + " " +
                            base + " --out " + dir_b.string() + " > /dev/null 2>&1";
    REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  }
  std::ifstream a(dir_a / "simulate.csv"), b(dir_b / "simulate.csv");
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());
}

TEST_CASE("cli: asymptotic emits limit ratios with bound columns") {
  const fs::path dir = temp_dir("cli_asym");
  const fs::path cfg = write_file(dir, "config.json", R"({
    "problem": {"m": 200, "n": 100, "p": 2,
                "cells": {"11": 50, "10": 50, "01": 50, "00": 50}},
    "distribution": {"kind": "uniform", "lo": 0.0, "hi": 1.0},
    "bias": {"kind": "multiplicative", "beta": [0.5, 0.5]},
    "asymptotic": {"grid": 40}
  })");
  const int rc = run_cli("asymptotic --config " + cfg.string() + " --out " + dir.string());
  CHECK(rc == 0);
  std::ifstream in(dir / "asymptotic.json");
  REQUIRE(in.good());
  json out;
  in >> out;
  REQUIRE(out["points"].size() == 1);
  const auto& point = out["points"][0];
  CHECK(point["limit_ratio"].get<double>() < 1.0);
  CHECK(point["limit_ratio"].get<double>() > 0.5);
  CHECK(point["thm1_bound"].get<double>() <= 1.0);
  CHECK(point["limit_ratio"].get<double>() <= point["thm1_bound"].get<double>() + 1e-6);
}
