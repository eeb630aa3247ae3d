#pragma once

#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "biasedselect/distribution.hpp"
#include "biasedselect/group_structure.hpp"

namespace biasedselect {

// Multiplicative model: an item in cell sigma has observed utility
// beta_sigma * w with beta_sigma the product of its groups' parameters.
class MultiplicativeBias {
 public:
  explicit MultiplicativeBias(std::vector<double> beta);

  int p() const { return static_cast<int>(beta_.size()); }
  const std::vector<double>& beta() const { return beta_; }
  double cell_factor(Signature sig) const;

 private:
  std::vector<double> beta_;
};

// One cell's strictly increasing bias map.
class CellBiasSpec {
 public:
  // b(x) = x * (beta_sigma)^q with beta_sigma taken from the carried vector.
  static CellBiasSpec power_of_product(double q);
  // Piecewise-linear through the knots; extended with the end slopes.
  // Knot values must be strictly increasing (by at least 1e-12).
  static CellBiasSpec piecewise_linear(std::vector<std::pair<double, double>> knots);

  bool is_power() const { return knots_.empty(); }
  double exponent() const { return q_; }
  const std::vector<std::pair<double, double>>& knots() const { return knots_; }

  double eval(double x, double cell_factor) const;
  double derivative(double x, double cell_factor) const;
  double min_slope(double cell_factor) const;
  double max_slope(double cell_factor) const;

 private:
  double q_ = 1.0;
  std::vector<std::pair<double, double>> knots_;
};

// Generalized model: per-cell strictly increasing maps b_sigma. Cells
// without an explicit spec default to the multiplicative map (q = 1).
class GeneralBias {
 public:
  GeneralBias(std::vector<double> beta, std::map<Signature, CellBiasSpec> cells);

  int p() const { return static_cast<int>(beta_.size()); }
  const std::vector<double>& beta() const { return beta_; }
  const std::map<Signature, CellBiasSpec>& cells() const { return cells_; }

  double apply(Signature sig, double x) const;
  double derivative(Signature sig, double x) const;
  // Minimum derivative over the cells reachable with p groups (the constant
  // d of the generalized model).
  double min_derivative() const;

 private:
  const CellBiasSpec& spec_for(Signature sig) const;
  double factor_for(Signature sig) const;

  std::vector<double> beta_;
  std::map<Signature, CellBiasSpec> cells_;
  CellBiasSpec default_spec_ = CellBiasSpec::power_of_product(1.0);
};

using Bias = std::variant<MultiplicativeBias, GeneralBias>;

// Per-item multiplicative factors beta_sigma(i) (multiplicative model only).
std::vector<double> item_factors(const GroupStructure& structure, const MultiplicativeBias& bias);

std::vector<double> observed_utilities(std::span<const double> w, const GroupStructure& structure,
                                       const MultiplicativeBias& bias);
std::vector<double> observed_utilities(std::span<const double> w, const GroupStructure& structure,
                                       const GeneralBias& bias);
std::vector<double> observed_utilities(std::span<const double> w, const GroupStructure& structure,
                                       const Bias& bias);

// (b_00 - b_10 - b_01 + b_11) at F^-1(1 - n/m); requires p = 2. Zero gap is
// the regime where non-intersectional constraints can recover full utility.
double interaction_gap(const Bias& bias, const UtilityDistribution& dist, const SelectionProblem& problem);

struct Assumption2Report {
  bool pass = false;
  double c = 0.0;
  double d = 0.0;
  std::string detail;
};

// Grid check of the generalized-model conditions: density in [c, 1/c],
// b_sigma <= 1/c and d <= b_sigma' <= 1/c on the support.
Assumption2Report assumption2_check(const Bias& bias, const UtilityDistribution& dist,
                                    int grid_points = 10000);

}  // namespace biasedselect
