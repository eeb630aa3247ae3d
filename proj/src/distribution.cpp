#include "biasedselect/distribution.hpp"

#include <cmath>
#include <stdexcept>

#include "biasedselect/kernels.hpp"
#include "biasedselect/numerics.hpp"

namespace biasedselect {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

double std_normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

}  // namespace

UtilityDistribution UtilityDistribution::uniform(double lo, double hi) {
  if (!(lo >= 0.0 && lo < hi)) throw std::invalid_argument("uniform needs 0 <= lo < hi");
  UtilityDistribution d;
  d.kind_ = Kind::Uniform;
  d.lo_ = lo;
  d.hi_ = hi;
  d.params_[0] = lo;
  d.params_[1] = hi;
  return d;
}

UtilityDistribution UtilityDistribution::truncated_normal(double mu, double sigma, double lo, double hi) {
  if (!(sigma > 0.0)) throw std::invalid_argument("trunc_normal needs sigma > 0");
  if (!(lo >= 0.0 && lo < hi)) throw std::invalid_argument("trunc_normal needs 0 <= lo < hi");
  UtilityDistribution d;
  d.kind_ = Kind::TruncatedNormal;
  d.lo_ = lo;
  d.hi_ = hi;
  d.params_[0] = mu;
  d.params_[1] = sigma;
  d.params_[2] = lo;
  d.params_[3] = hi;
  d.tn_phi_lo_ = std_normal_cdf((lo - mu) / sigma);
  d.tn_z_ = std_normal_cdf((hi - mu) / sigma) - d.tn_phi_lo_;
  if (!(d.tn_z_ > 0.0)) throw std::invalid_argument("trunc_normal carries no mass on [lo, hi]");
  return d;
}

UtilityDistribution UtilityDistribution::truncated_power_law(double alpha, double xmin, double xmax) {
  if (!(alpha > 1.0)) throw std::invalid_argument("trunc_powerlaw needs alpha > 1");
  if (!(xmin > 0.0 && xmin < xmax)) throw std::invalid_argument("trunc_powerlaw needs 0 < xmin < xmax");
  UtilityDistribution d;
  d.kind_ = Kind::TruncatedPowerLaw;
  d.lo_ = xmin;
  d.hi_ = xmax;
  d.params_[0] = alpha;
  d.params_[1] = xmin;
  d.params_[2] = xmax;
  d.pl_a_ = std::pow(xmin, 1.0 - alpha);
  d.pl_b_ = std::pow(xmax, 1.0 - alpha);
  d.pl_norm_ = (d.pl_b_ - d.pl_a_) / (1.0 - alpha);
  return d;
}

double UtilityDistribution::pdf(double x) const {
  if (x < lo_ || x > hi_) return 0.0;
  switch (kind_) {
    case Kind::Uniform:
      return 1.0 / (hi_ - lo_);
    case Kind::TruncatedNormal: {
      const double mu = params_[0], sigma = params_[1];
      return std_normal_pdf((x - mu) / sigma) / (sigma * tn_z_);
    }
    case Kind::TruncatedPowerLaw:
      return std::pow(x, -params_[0]) / pl_norm_;
  }
  return 0.0;
}

double UtilityDistribution::cdf(double x) const {
  if (x <= lo_) return 0.0;
  if (x >= hi_) return 1.0;
  switch (kind_) {
    case Kind::Uniform:
      return (x - lo_) / (hi_ - lo_);
    case Kind::TruncatedNormal: {
      const double mu = params_[0], sigma = params_[1];
      return (std_normal_cdf((x - mu) / sigma) - tn_phi_lo_) / tn_z_;
    }
    case Kind::TruncatedPowerLaw: {
      const double alpha = params_[0];
      return (std::pow(x, 1.0 - alpha) - pl_a_) / (pl_b_ - pl_a_);
    }
  }
  return 0.0;
}

double UtilityDistribution::quantile(double q) const {
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile needs q in [0, 1]");
  if (q <= 0.0) return lo_;
  if (q >= 1.0) return hi_;
  switch (kind_) {
    case Kind::Uniform:
      return lo_ + (hi_ - lo_) * q;
    case Kind::TruncatedNormal:
      // No closed form; bisection on the cdf.
      return numerics::bisect_decreasing([&](double x) { return q - cdf(x); }, lo_, hi_, 1e-12, 200);
    case Kind::TruncatedPowerLaw: {
      const double alpha = params_[0];
      const double x = std::pow(pl_a_ + q * (pl_b_ - pl_a_), 1.0 / (1.0 - alpha));
      return std::min(std::max(x, lo_), hi_);
    }
  }
  return lo_;
}

double UtilityDistribution::mean() const {
  if (kind_ == Kind::Uniform) return 0.5 * (lo_ + hi_);
  return numerics::integrate([&](double x) { return x * pdf(x); }, lo_, hi_, 1e-10);
}

void UtilityDistribution::sample(rng::Stream& stream, std::span<double> out) const {
  stream.fill_uniform01(out);
  if (kind_ == Kind::Uniform) {
    kernels::affine(out, out, hi_ - lo_, lo_);
    return;
  }
  for (double& v : out) v = quantile(v);
}

std::optional<Assumption2Params> assumption2_c(const UtilityDistribution& dist, int grid_points) {
  if (grid_points < 2) throw std::invalid_argument("assumption2_c needs at least 2 grid points");
  const double lo = dist.lo(), hi = dist.hi();
  double dmin = dist.pdf(lo), dmax = dmin;
  for (int i = 1; i < grid_points; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid_points - 1);
    const double density = dist.pdf(x);
    dmin = std::min(dmin, density);
    dmax = std::max(dmax, density);
  }
  if (!(dmin > 0.0)) return std::nullopt;
  return Assumption2Params{std::min(dmin, 1.0 / dmax)};
}

}  // namespace biasedselect
