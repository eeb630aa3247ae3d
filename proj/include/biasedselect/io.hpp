#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "biasedselect/bias.hpp"
#include "biasedselect/constraints.hpp"
#include "biasedselect/distribution.hpp"
#include "biasedselect/group_structure.hpp"
#include "biasedselect/selection.hpp"

namespace biasedselect::io {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Structured-text forms. Signatures are bit-strings with the most
// significant bit = group 1; item indices serialize 1-based.
nlohmann::json problem_to_json(const SelectionProblem& problem);
SelectionProblem problem_from_json(const nlohmann::json& j);

nlohmann::json constraints_to_json(const ConstraintSet& constraints, int p);
ConstraintSet constraints_from_json(const nlohmann::json& j);

nlohmann::json distribution_to_json(const UtilityDistribution& dist);
UtilityDistribution distribution_from_json(const nlohmann::json& j);

nlohmann::json bias_to_json(const Bias& bias);
Bias bias_from_json(const nlohmann::json& j);

nlohmann::json selection_to_json(const Selection& sel, int p);

// One experiment per file: problem, distribution, bias, constraints or
// design parameters, run parameters, optional sweep/asymptotic sections.
struct ExperimentConfig {
  std::optional<SelectionProblem> problem;
  std::optional<UtilityDistribution> distribution;
  std::optional<Bias> bias;
  std::optional<ConstraintSet> constraints;
  std::optional<double> design_epsilon;
  // defaults resolve per command: 1000 for point estimates, 200 per sweep cell
  std::optional<int> trials;
  std::uint64_t seed = 1;
  bool keep_per_trial = false;
  std::vector<int> l1_grid;
  std::vector<int> l2_grid;
  std::vector<std::array<double, 2>> beta_grid;
  int asymptotic_grid = 200;
  std::string csv_name;
  std::string json_name;
};

ExperimentConfig load_config(const std::string& path);

// Round-trip-exact rendering (17 significant digits).
std::string format_g17(double v);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

void write_json(const std::string& path, const nlohmann::json& j);

}  // namespace biasedselect::io
