#pragma once

#include <array>
#include <functional>
#include <memory>

#include "biasedselect/bias.hpp"
#include "biasedselect/distribution.hpp"

namespace biasedselect {

// Continuous per-cell allocation for p = 2, indexed by signature value
// (0 = "00", 1 = "01", 2 = "10", 3 = "11").
struct AllocationVector {
  std::array<double, 4> k{0.0, 0.0, 0.0, 0.0};
};

inline constexpr int kCellG1Only = 2;  // "10"
inline constexpr int kCellG2Only = 1;  // "01"
inline constexpr int kCellBoth = 3;    // "11"
inline constexpr int kCellNone = 0;    // "00"

// Separable strictly concave objective sum_c value(c, k_c) with decreasing
// per-cell marginals. Cells of size zero contribute nothing and stay at 0.
class CellObjective {
 public:
  virtual ~CellObjective() = default;

  const std::array<double, 4>& sizes() const { return sizes_; }
  double total_mass() const { return sizes_[0] + sizes_[1] + sizes_[2] + sizes_[3]; }

  virtual double value(int cell, double k) const = 0;
  virtual double marginal(int cell, double k) const = 0;
  // k with marginal(cell, k) = lambda, clamped to [0, size]; the default
  // bisects the monotone marginal.
  virtual double marginal_inverse(int cell, double lambda) const;

  double total(const AllocationVector& k) const;

 protected:
  explicit CellObjective(std::array<double, 4> sizes) : sizes_(sizes) {}
  std::array<double, 4> sizes_;
};

// f_gamma for Uniform(0, 1): value gamma*k*(1 - k/(2 size)), closed forms
// throughout. gamma = 1 gives the latent objective, gamma = beta_sigma the
// observed one.
class UniformCellObjective final : public CellObjective {
 public:
  UniformCellObjective(std::array<double, 4> gamma, std::array<double, 4> sizes);

  double value(int cell, double k) const override;
  double marginal(int cell, double k) const override;
  double marginal_inverse(int cell, double lambda) const override;

 private:
  std::array<double, 4> gamma_;
};

// f_b for a general distribution: value size * integral of b(x) dmu(x) from
// the quantile z(k) to the top of the support, by adaptive quadrature.
class GeneralCellObjective final : public CellObjective {
 public:
  GeneralCellObjective(std::array<std::function<double(double)>, 4> cell_maps,
                       const UtilityDistribution& dist, std::array<double, 4> sizes,
                       double quad_tol = 1e-9);

  double value(int cell, double k) const override;
  double marginal(int cell, double k) const override;

 private:
  double z_of(int cell, double k) const;

  std::array<std::function<double(double)>, 4> maps_;
  const UtilityDistribution* dist_;
  double quad_tol_;
};

// Objective pair (observed f_b, latent f_1) for a p = 2 instance; picks the
// closed forms for Uniform(0,1) + multiplicative bias and quadrature
// otherwise.
struct ProgramObjectives {
  std::unique_ptr<CellObjective> observed;
  std::unique_ptr<CellObjective> latent;
};
ProgramObjectives make_objectives(const Bias& bias, const UtilityDistribution& dist,
                                  std::array<double, 4> sizes, double quad_tol = 1e-9);

// Program (1): proportional allocation size * n / m, the analytic optimum
// for any continuous distribution.
AllocationVector solve_program1(std::array<double, 4> sizes, double n);

// Program (2): maximize the observed objective subject to sum k = n, the two
// group coverage bounds, and the boxes. Exact case enumeration over the
// coverage constraints with one-dimensional bisections.
AllocationVector solve_program2(const CellObjective& observed, double n, double L1, double L2);

// KKT residual of an allocation for Program (2): max of primal violations,
// stationarity residual, multiplier sign violations, and complementary
// slackness.
double kkt_residual(const CellObjective& observed, double n, double L1, double L2,
                    const AllocationVector& k);

// f_1(s_tilde) / f_1(s*): the m -> infinity utility ratio at (L1, L2).
double limit_utility_ratio(const CellObjective& observed, const CellObjective& latent, double n,
                           double L1, double L2);

struct MaxRatioResult {
  double l1 = 0.0;
  double l2 = 0.0;
  double ratio = 0.0;
};

// Grid search over (L1, L2) in [0, |G1|] x [0, |G2|] plus one golden-section
// refinement pass per coordinate.
MaxRatioResult max_limit_ratio(const CellObjective& observed, const CellObjective& latent, double n,
                               int grid_points = 200, int threads = 0);

struct BoundReport {
  double value = 1.0;
  double rho = 0.0;
  double eta = 0.0;
  double beta1 = 1.0;
  double beta2 = 1.0;
  double c = 0.0;
  double delta_b = 0.0;
};

// 1 - (rho/3 * min(eta, 1-eta) * (1-beta1)(1-beta2))^2.
BoundReport uniform_ratio_bound(double rho, double eta, double beta1, double beta2);
// 1 - (c^4 * rho * min(eta, 1-eta) * delta_b)^2.
BoundReport general_ratio_bound(double c, double rho, double eta, double delta_b);
// 8/9 + (3/2) max(beta1, beta2).
BoundReport extreme_bias_ratio_bound(double beta1, double beta2);

}  // namespace biasedselect
