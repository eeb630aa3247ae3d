#pragma once

#include <optional>
#include <span>
#include <string>

#include "biasedselect/rng.hpp"

namespace biasedselect {

// Continuous latent-utility distribution on a bounded non-negative interval.
// Sampling is inverse-transform on 53-bit uniforms, so matched seeds give
// matched draws across distributions.
class UtilityDistribution {
 public:
  enum class Kind { Uniform, TruncatedNormal, TruncatedPowerLaw };

  static UtilityDistribution uniform(double lo, double hi);
  static UtilityDistribution truncated_normal(double mu, double sigma, double lo, double hi);
  // Density proportional to x^-alpha on [xmin, xmax]; alpha > 1 by convention.
  static UtilityDistribution truncated_power_law(double alpha, double xmin, double xmax);

  Kind kind() const { return kind_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double sup_support() const { return hi_; }

  double pdf(double x) const;       // 0 outside the support
  double cdf(double x) const;       // clamped to [0, 1]
  double quantile(double q) const;  // exact inverse of cdf; throws for q outside [0, 1]
  double mean() const;              // closed form (uniform) or quadrature

  void sample(rng::Stream& stream, std::span<double> out) const;

  // Raw parameters in declaration order (for serialization).
  double param(int i) const { return params_[static_cast<std::size_t>(i)]; }

 private:
  UtilityDistribution() = default;

  Kind kind_ = Kind::Uniform;
  double lo_ = 0.0, hi_ = 1.0;
  double params_[4] = {0, 0, 0, 0};
  // truncated normal cache
  double tn_z_ = 1.0;       // Phi(b') - Phi(a')
  double tn_phi_lo_ = 0.0;  // Phi((lo-mu)/sigma)
  // power law cache
  double pl_a_ = 0.0, pl_b_ = 0.0, pl_norm_ = 1.0;  // xmin^(1-a), xmax^(1-a), normalizer
};

struct Assumption2Params {
  double c = 0.0;  // density lies in [c, 1/c] on the support
};

// Extracts the density-bound constant on a dense support grid; empty when
// the density is not bounded away from zero there.
std::optional<Assumption2Params> assumption2_c(const UtilityDistribution& dist, int grid_points = 10000);

}  // namespace biasedselect
