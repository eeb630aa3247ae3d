#include "biasedselect/bias.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "biasedselect/kernels.hpp"

namespace biasedselect {

MultiplicativeBias::MultiplicativeBias(std::vector<double> beta) : beta_(std::move(beta)) {
  if (beta_.empty()) throw std::invalid_argument("beta vector must be non-empty");
  for (double b : beta_) {
    if (!(b > 0.0 && b <= 1.0)) throw std::invalid_argument("each beta must lie in (0, 1]");
  }
}

double MultiplicativeBias::cell_factor(Signature sig) const {
  const int p = this->p();
  double f = 1.0;
  for (int l = 0; l < p; ++l) {
    if (signature_has_group(sig, l, p)) f *= beta_[static_cast<std::size_t>(l)];
  }
  return f;
}

CellBiasSpec CellBiasSpec::power_of_product(double q) {
  if (!(q >= 0.0)) throw std::invalid_argument("power-of-product exponent must be non-negative");
  CellBiasSpec s;
  s.q_ = q;
  return s;
}

CellBiasSpec CellBiasSpec::piecewise_linear(std::vector<std::pair<double, double>> knots) {
  if (knots.size() < 2) throw std::invalid_argument("piecewise-linear spec needs at least 2 knots");
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (!(knots[i].first > knots[i - 1].first)) {
      throw std::invalid_argument("piecewise-linear knot abscissae must be strictly increasing");
    }
    // Plateaus would break within-cell order preservation, which the exact
    // solvers rely on.
    if (!(knots[i].second >= knots[i - 1].second + 1e-12)) {
      throw std::invalid_argument("piecewise-linear spec is not strictly increasing");
    }
  }
  CellBiasSpec s;
  s.knots_ = std::move(knots);
  return s;
}

double CellBiasSpec::eval(double x, double cell_factor) const {
  if (is_power()) return x * std::pow(cell_factor, q_);
  std::size_t seg = 0;
  if (x >= knots_.back().first) {
    seg = knots_.size() - 2;
  } else if (x > knots_.front().first) {
    seg = static_cast<std::size_t>(
              std::upper_bound(knots_.begin(), knots_.end(), std::pair<double, double>{x, 1e300}) -
              knots_.begin()) -
          1;
  }
  const auto& [x0, y0] = knots_[seg];
  const auto& [x1, y1] = knots_[seg + 1];
  return y0 + (y1 - y0) / (x1 - x0) * (x - x0);
}

double CellBiasSpec::derivative(double x, double cell_factor) const {
  if (is_power()) return std::pow(cell_factor, q_);
  std::size_t seg = 0;
  if (x >= knots_.back().first) {
    seg = knots_.size() - 2;
  } else if (x > knots_.front().first) {
    seg = static_cast<std::size_t>(
              std::upper_bound(knots_.begin(), knots_.end(), std::pair<double, double>{x, 1e300}) -
              knots_.begin()) -
          1;
  }
  const auto& [x0, y0] = knots_[seg];
  const auto& [x1, y1] = knots_[seg + 1];
  return (y1 - y0) / (x1 - x0);
}

double CellBiasSpec::min_slope(double cell_factor) const {
  if (is_power()) return std::pow(cell_factor, q_);
  double best = (knots_[1].second - knots_[0].second) / (knots_[1].first - knots_[0].first);
  for (std::size_t i = 1; i + 1 < knots_.size(); ++i) {
    best = std::min(best, (knots_[i + 1].second - knots_[i].second) /
                              (knots_[i + 1].first - knots_[i].first));
  }
  return best;
}

double CellBiasSpec::max_slope(double cell_factor) const {
  if (is_power()) return std::pow(cell_factor, q_);
  double best = (knots_[1].second - knots_[0].second) / (knots_[1].first - knots_[0].first);
  for (std::size_t i = 1; i + 1 < knots_.size(); ++i) {
    best = std::max(best, (knots_[i + 1].second - knots_[i].second) /
                              (knots_[i + 1].first - knots_[i].first));
  }
  return best;
}

GeneralBias::GeneralBias(std::vector<double> beta, std::map<Signature, CellBiasSpec> cells)
    : beta_(std::move(beta)), cells_(std::move(cells)) {
  if (beta_.empty()) throw std::invalid_argument("beta vector must be non-empty");
  for (double b : beta_) {
    if (!(b > 0.0 && b <= 1.0)) throw std::invalid_argument("each beta must lie in (0, 1]");
  }
  const int p = this->p();
  const Signature limit = (p >= 31) ? ~Signature{0} : ((Signature{1} << p) - 1);
  for (const auto& [sig, spec] : cells_) {
    if (sig > limit) throw std::invalid_argument("cell signature out of range for p");
  }
}

const CellBiasSpec& GeneralBias::spec_for(Signature sig) const {
  auto it = cells_.find(sig);
  return it == cells_.end() ? default_spec_ : it->second;
}

double GeneralBias::factor_for(Signature sig) const {
  const int p = this->p();
  double f = 1.0;
  for (int l = 0; l < p; ++l) {
    if (signature_has_group(sig, l, p)) f *= beta_[static_cast<std::size_t>(l)];
  }
  return f;
}

double GeneralBias::apply(Signature sig, double x) const { return spec_for(sig).eval(x, factor_for(sig)); }

double GeneralBias::derivative(Signature sig, double x) const {
  return spec_for(sig).derivative(x, factor_for(sig));
}

double GeneralBias::min_derivative() const {
  const int p = this->p();
  if (p > 16) throw std::invalid_argument("min_derivative enumerates cells; p > 16 unsupported");
  double d = 1e300;
  for (Signature sig = 0; sig < (Signature{1} << p); ++sig) {
    d = std::min(d, spec_for(sig).min_slope(factor_for(sig)));
  }
  return d;
}

std::vector<double> item_factors(const GroupStructure& structure, const MultiplicativeBias& bias) {
  if (bias.p() != structure.p()) throw std::invalid_argument("bias group count must match the structure");
  std::map<Signature, double> cache;
  for (const auto& [sig, items] : structure.intersections()) cache[sig] = bias.cell_factor(sig);
  std::vector<double> out(static_cast<std::size_t>(structure.m()));
  for (int i = 0; i < structure.m(); ++i) {
    out[static_cast<std::size_t>(i)] = cache[structure.signature_of(i)];
  }
  return out;
}

std::vector<double> observed_utilities(std::span<const double> w, const GroupStructure& structure,
                                       const MultiplicativeBias& bias) {
  if (static_cast<int>(w.size()) != structure.m()) throw std::invalid_argument("|w| must equal m");
  std::vector<double> factors = item_factors(structure, bias);
  std::vector<double> out(w.size());
  kernels::multiply(out, w, factors);
  return out;
}

std::vector<double> observed_utilities(std::span<const double> w, const GroupStructure& structure,
                                       const GeneralBias& bias) {
  if (static_cast<int>(w.size()) != structure.m()) throw std::invalid_argument("|w| must equal m");
  if (bias.p() != structure.p()) throw std::invalid_argument("bias group count must match the structure");
  std::vector<double> out(w.size());
  for (int i = 0; i < structure.m(); ++i) {
    out[static_cast<std::size_t>(i)] = bias.apply(structure.signature_of(i), w[static_cast<std::size_t>(i)]);
  }
  return out;
}

std::vector<double> observed_utilities(std::span<const double> w, const GroupStructure& structure,
                                       const Bias& bias) {
  return std::visit([&](const auto& b) { return observed_utilities(w, structure, b); }, bias);
}

namespace {

double interaction_gap_at(const Bias& bias, double x) {
  // Cells indexed by signature value for p = 2: 0=00, 1=01, 2=10, 3=11.
  auto b_of = [&](Signature sig, double v) {
    if (const auto* mult = std::get_if<MultiplicativeBias>(&bias)) return mult->cell_factor(sig) * v;
    return std::get<GeneralBias>(bias).apply(sig, v);
  };
  return b_of(0, x) - b_of(2, x) - b_of(1, x) + b_of(3, x);
}

int bias_p(const Bias& bias) {
  return std::visit([](const auto& b) { return b.p(); }, bias);
}

}  // namespace

double interaction_gap(const Bias& bias, const UtilityDistribution& dist, const SelectionProblem& problem) {
  if (bias_p(bias) != 2 || problem.structure().p() != 2) {
    throw std::invalid_argument("interaction gap is defined for p = 2");
  }
  const double x = dist.quantile(1.0 - problem.eta().value());
  return interaction_gap_at(bias, x);
}

Assumption2Report assumption2_check(const Bias& bias, const UtilityDistribution& dist, int grid_points) {
  Assumption2Report report;
  const auto dc = assumption2_c(dist, grid_points);
  if (!dc) {
    report.detail = "distribution density is not bounded away from zero on its support";
    return report;
  }
  report.c = dc->c;
  const double cap = 1.0 / report.c;

  const int p = bias_p(bias);
  if (p > 16) throw std::invalid_argument("assumption2_check enumerates cells; p > 16 unsupported");

  double min_deriv = 1e300;
  double max_deriv = 0.0;
  double max_value = 0.0;
  const double lo = dist.lo(), hi = dist.hi();
  for (Signature sig = 0; sig < (Signature{1} << p); ++sig) {
    for (int i = 0; i < grid_points; ++i) {
      const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid_points - 1);
      double value, deriv;
      if (const auto* mult = std::get_if<MultiplicativeBias>(&bias)) {
        const double f = mult->cell_factor(sig);
        value = f * x;
        deriv = f;
      } else {
        const auto& gen = std::get<GeneralBias>(bias);
        value = gen.apply(sig, x);
        deriv = gen.derivative(sig, x);
      }
      min_deriv = std::min(min_deriv, deriv);
      max_deriv = std::max(max_deriv, deriv);
      max_value = std::max(max_value, value);
    }
  }
  report.d = min_deriv;
  if (!(min_deriv > 0.0)) {
    report.detail = "bias derivative is not positive everywhere";
    return report;
  }
  if (max_value > cap + 1e-12 || max_deriv > cap + 1e-12) {
    report.detail = "bias value or derivative exceeds 1/c = " + std::to_string(cap);
    return report;
  }
  report.pass = true;
  report.detail = "ok";
  return report;
}

}  // namespace biasedselect
