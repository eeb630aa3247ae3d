#include "biasedselect/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "biasedselect/constraints.hpp"
#include "biasedselect/numerics.hpp"
#include "biasedselect/parallel.hpp"

namespace biasedselect {

namespace {

constexpr double kFeasTol = 1e-9;
constexpr int kBisectIters = 120;

double clamp(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

}  // namespace

double CellObjective::total(const AllocationVector& k) const {
  double v = 0.0;
  for (int c = 0; c < 4; ++c) {
    if (sizes_[static_cast<std::size_t>(c)] > 0.0) v += value(c, k.k[static_cast<std::size_t>(c)]);
  }
  return v;
}

double CellObjective::marginal_inverse(int cell, double lambda) const {
  const double size = sizes_[static_cast<std::size_t>(cell)];
  if (size <= 0.0) return 0.0;
  if (lambda >= marginal(cell, 0.0)) return 0.0;
  if (lambda <= marginal(cell, size)) return size;
  return numerics::bisect_decreasing([&](double k) { return marginal(cell, k) - lambda; }, 0.0, size,
                                     0.0, kBisectIters);
}

UniformCellObjective::UniformCellObjective(std::array<double, 4> gamma, std::array<double, 4> sizes)
    : CellObjective(sizes), gamma_(gamma) {}

double UniformCellObjective::value(int cell, double k) const {
  const double s = sizes_[static_cast<std::size_t>(cell)];
  if (s <= 0.0) return 0.0;
  return gamma_[static_cast<std::size_t>(cell)] * k * (1.0 - k / (2.0 * s));
}

double UniformCellObjective::marginal(int cell, double k) const {
  const double s = sizes_[static_cast<std::size_t>(cell)];
  if (s <= 0.0) return -std::numeric_limits<double>::infinity();
  return gamma_[static_cast<std::size_t>(cell)] * (1.0 - k / s);
}

double UniformCellObjective::marginal_inverse(int cell, double lambda) const {
  const double s = sizes_[static_cast<std::size_t>(cell)];
  if (s <= 0.0) return 0.0;
  const double g = gamma_[static_cast<std::size_t>(cell)];
  if (g <= 0.0) return lambda <= 0.0 ? s : 0.0;
  return clamp(s * (1.0 - lambda / g), 0.0, s);
}

GeneralCellObjective::GeneralCellObjective(std::array<std::function<double(double)>, 4> cell_maps,
                                           const UtilityDistribution& dist, std::array<double, 4> sizes,
                                           double quad_tol)
    : CellObjective(sizes), maps_(std::move(cell_maps)), dist_(&dist), quad_tol_(quad_tol) {}

double GeneralCellObjective::z_of(int cell, double k) const {
  const double s = sizes_[static_cast<std::size_t>(cell)];
  return dist_->quantile(1.0 - clamp(k / s, 0.0, 1.0));
}

double GeneralCellObjective::value(int cell, double k) const {
  const double s = sizes_[static_cast<std::size_t>(cell)];
  if (s <= 0.0 || k <= 0.0) return 0.0;
  const double z = z_of(cell, k);
  const auto& b = maps_[static_cast<std::size_t>(cell)];
  return s * numerics::integrate([&](double x) { return b(x) * dist_->pdf(x); }, z, dist_->hi(),
                                 quad_tol_);
}

double GeneralCellObjective::marginal(int cell, double k) const {
  const double s = sizes_[static_cast<std::size_t>(cell)];
  if (s <= 0.0) return -std::numeric_limits<double>::infinity();
  return maps_[static_cast<std::size_t>(cell)](z_of(cell, k));
}

ProgramObjectives make_objectives(const Bias& bias, const UtilityDistribution& dist,
                                  std::array<double, 4> sizes, double quad_tol) {
  const int p = std::visit([](const auto& b) { return b.p(); }, bias);
  if (p != 2) throw std::invalid_argument("continuous programs are defined for p = 2");

  ProgramObjectives out;
  const bool unit_uniform = dist.kind() == UtilityDistribution::Kind::Uniform && dist.lo() == 0.0 &&
                            dist.hi() == 1.0;
  if (unit_uniform) {
    if (const auto* mult = std::get_if<MultiplicativeBias>(&bias)) {
      std::array<double, 4> gamma;
      for (int c = 0; c < 4; ++c) gamma[static_cast<std::size_t>(c)] = mult->cell_factor(static_cast<Signature>(c));
      out.observed = std::make_unique<UniformCellObjective>(gamma, sizes);
      out.latent = std::make_unique<UniformCellObjective>(std::array<double, 4>{1, 1, 1, 1}, sizes);
      return out;
    }
  }
  std::array<std::function<double(double)>, 4> observed_maps;
  std::array<std::function<double(double)>, 4> latent_maps;
  for (int c = 0; c < 4; ++c) {
    const auto sig = static_cast<Signature>(c);
    if (const auto* mult = std::get_if<MultiplicativeBias>(&bias)) {
      const double f = mult->cell_factor(sig);
      observed_maps[static_cast<std::size_t>(c)] = [f](double x) { return f * x; };
    } else {
      const auto* gen = &std::get<GeneralBias>(bias);
      observed_maps[static_cast<std::size_t>(c)] = [gen, sig](double x) { return gen->apply(sig, x); };
    }
    latent_maps[static_cast<std::size_t>(c)] = [](double x) { return x; };
  }
  out.observed = std::make_unique<GeneralCellObjective>(std::move(observed_maps), dist, sizes, quad_tol);
  out.latent = std::make_unique<GeneralCellObjective>(std::move(latent_maps), dist, sizes, quad_tol);
  return out;
}

AllocationVector solve_program1(std::array<double, 4> sizes, double n) {
  const double m = sizes[0] + sizes[1] + sizes[2] + sizes[3];
  if (!(n >= 0.0 && n <= m + kFeasTol)) throw std::invalid_argument("need 0 <= n <= total mass");
  AllocationVector s;
  for (int c = 0; c < 4; ++c) s.k[static_cast<std::size_t>(c)] = sizes[static_cast<std::size_t>(c)] * n / m;
  return s;
}

namespace {

struct Candidate {
  AllocationVector k;
  bool valid = false;
};

// Water-filling over the four boxes with a common multiplier.
Candidate case_free(const CellObjective& f, double n) {
  const auto& sizes = f.sizes();
  Candidate cand;
  double lam_lo = std::numeric_limits<double>::infinity();
  double lam_hi = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < 4; ++c) {
    if (sizes[static_cast<std::size_t>(c)] <= 0.0) continue;
    lam_hi = std::max(lam_hi, f.marginal(c, 0.0));
    lam_lo = std::min(lam_lo, f.marginal(c, sizes[static_cast<std::size_t>(c)]));
  }
  auto fill = [&](double lam) {
    AllocationVector k;
    for (int c = 0; c < 4; ++c) k.k[static_cast<std::size_t>(c)] = f.marginal_inverse(c, lam);
    return k;
  };
  const double lam = numerics::bisect_decreasing(
      [&](double l) {
        const AllocationVector k = fill(l);
        return (k.k[0] + k.k[1] + k.k[2] + k.k[3]) - n;
      },
      lam_lo, lam_hi, 0.0, kBisectIters);
  cand.k = fill(lam);
  cand.valid = true;
  return cand;
}

// Two-cell subproblem: split `total` between cells a and b.
bool split_pair(const CellObjective& f, int a, int b, double total, double* ka, double* kb) {
  const double sa = f.sizes()[static_cast<std::size_t>(a)];
  const double sb = f.sizes()[static_cast<std::size_t>(b)];
  if (total < -kFeasTol || total > sa + sb + kFeasTol) return false;
  total = clamp(total, 0.0, sa + sb);
  const double lo = std::max(0.0, total - sb);
  const double hi = std::min(total, sa);
  if (lo > hi + kFeasTol) return false;
  double x;
  if (hi - lo <= 0.0) {
    x = lo;
  } else {
    x = numerics::bisect_decreasing(
        [&](double v) { return f.marginal(a, v) - f.marginal(b, total - v); }, lo, hi, 0.0,
        kBisectIters);
  }
  *ka = x;
  *kb = total - x;
  return true;
}

Candidate case_one_group(const CellObjective& f, double n, double bound, bool first_group) {
  // Coverage bound held at equality for one group; the two halves separate.
  Candidate cand;
  const int shared = kCellBoth;
  const int own = first_group ? kCellG1Only : kCellG2Only;
  const int other = first_group ? kCellG2Only : kCellG1Only;
  double k_shared, k_own, k_other, k_none;
  if (!split_pair(f, shared, own, bound, &k_shared, &k_own)) return cand;
  if (!split_pair(f, other, kCellNone, n - bound, &k_other, &k_none)) return cand;
  cand.k.k[static_cast<std::size_t>(shared)] = k_shared;
  cand.k.k[static_cast<std::size_t>(own)] = k_own;
  cand.k.k[static_cast<std::size_t>(other)] = k_other;
  cand.k.k[static_cast<std::size_t>(kCellNone)] = k_none;
  cand.valid = true;
  return cand;
}

Candidate case_both_groups(const CellObjective& f, double n, double L1, double L2) {
  // Both coverage bounds at equality; one free variable t = k_11.
  Candidate cand;
  const auto& s = f.sizes();
  const double lo = std::max(std::max(0.0, L1 - s[kCellG1Only]),
                             std::max(L2 - s[kCellG2Only], L1 + L2 - n));
  const double hi = std::min(std::min(s[kCellBoth], std::min(L1, L2)),
                             s[kCellNone] - n + L1 + L2);
  if (lo > hi + kFeasTol) return cand;
  const double a = lo, b = std::max(lo, hi);
  auto deriv = [&](double t) {
    return f.marginal(kCellBoth, t) - f.marginal(kCellG1Only, L1 - t) -
           f.marginal(kCellG2Only, L2 - t) + f.marginal(kCellNone, n - L1 - L2 + t);
  };
  const double t = (b - a <= 0.0) ? a : numerics::bisect_decreasing(deriv, a, b, 0.0, kBisectIters);
  cand.k.k[kCellBoth] = t;
  cand.k.k[kCellG1Only] = L1 - t;
  cand.k.k[kCellG2Only] = L2 - t;
  cand.k.k[kCellNone] = n - L1 - L2 + t;
  cand.valid = true;
  return cand;
}

bool primal_feasible(const CellObjective& f, const AllocationVector& k, double n, double L1, double L2,
                     double tol) {
  const auto& s = f.sizes();
  for (int c = 0; c < 4; ++c) {
    if (k.k[static_cast<std::size_t>(c)] < -tol || k.k[static_cast<std::size_t>(c)] > s[static_cast<std::size_t>(c)] + tol) return false;
  }
  if (std::abs(k.k[0] + k.k[1] + k.k[2] + k.k[3] - n) > tol * std::max(1.0, n)) return false;
  if (k.k[kCellG1Only] + k.k[kCellBoth] < L1 - tol * std::max(1.0, n)) return false;
  if (k.k[kCellG2Only] + k.k[kCellBoth] < L2 - tol * std::max(1.0, n)) return false;
  return true;
}

}  // namespace

AllocationVector solve_program2(const CellObjective& observed, double n, double L1, double L2) {
  const auto& s = observed.sizes();
  const double mass = observed.total_mass();
  if (!(n >= 0.0 && n <= mass + kFeasTol)) throw InfeasibleError("n exceeds the total mass");
  if (L1 < 0.0 || L2 < 0.0) throw std::invalid_argument("lower bounds must be non-negative");

  // Continuous feasibility: some k_11 realizes both coverage bounds in budget.
  {
    const double lo_req = std::max(std::max(0.0, L1 - s[kCellG1Only]), L2 - s[kCellG2Only]);
    const double hi_cap = std::min(s[kCellBoth], n);
    const double probe = clamp(std::max(L1, L2), lo_req, hi_cap);
    const double forced = probe + std::max(0.0, L1 - probe) + std::max(0.0, L2 - probe);
    if (lo_req > hi_cap + kFeasTol || forced > n + kFeasTol * std::max(1.0, n)) {
      throw InfeasibleError("group bounds cannot be met in the continuous relaxation");
    }
  }

  Candidate candidates[4];
  candidates[0] = case_free(observed, n);
  candidates[1] = case_one_group(observed, n, L1, true);
  candidates[2] = case_one_group(observed, n, L2, false);
  candidates[3] = case_both_groups(observed, n, L1, L2);

  const double tol = 1e-7;
  bool any = false;
  double best_value = 0.0;
  AllocationVector best;
  for (const Candidate& cand : candidates) {
    if (!cand.valid || !primal_feasible(observed, cand.k, n, L1, L2, tol)) continue;
    const double value = observed.total(cand.k);
    if (!any || value > best_value) {
      any = true;
      best_value = value;
      best = cand.k;
    }
  }
  if (!any) throw InfeasibleError("no case solution is feasible");
  for (int c = 0; c < 4; ++c) {
    best.k[static_cast<std::size_t>(c)] = clamp(best.k[static_cast<std::size_t>(c)], 0.0, s[static_cast<std::size_t>(c)]);
  }
  return best;
}

double kkt_residual(const CellObjective& observed, double n, double L1, double L2,
                    const AllocationVector& k) {
  const auto& s = observed.sizes();
  const double scale = std::max(1.0, n);
  const double act_tol = 1e-6 * scale;
  double residual = 0.0;

  // primal feasibility
  residual = std::max(residual, std::abs(k.k[0] + k.k[1] + k.k[2] + k.k[3] - n));
  const double cover1 = k.k[kCellG1Only] + k.k[kCellBoth];
  const double cover2 = k.k[kCellG2Only] + k.k[kCellBoth];
  residual = std::max(residual, std::max(0.0, L1 - cover1));
  residual = std::max(residual, std::max(0.0, L2 - cover2));
  for (int c = 0; c < 4; ++c) {
    residual = std::max(residual, std::max(0.0, -k.k[static_cast<std::size_t>(c)]));
    residual = std::max(residual, std::max(0.0, k.k[static_cast<std::size_t>(c)] - s[static_cast<std::size_t>(c)]));
  }

  const bool a1 = cover1 <= L1 + act_tol;
  const bool a2 = cover2 <= L2 + act_tol;

  // stationarity: grad_c = mu - alpha1*[c in G1] - alpha2*[c in G2] on free
  // cells; recover (mu, alpha) by least squares over the free rows.
  double grad[4];
  bool at_lower[4], at_upper[4];
  for (int c = 0; c < 4; ++c) {
    if (s[static_cast<std::size_t>(c)] <= 0.0) {
      grad[c] = 0.0;
      at_lower[c] = true;
      at_upper[c] = true;
      continue;
    }
    grad[c] = observed.marginal(c, k.k[static_cast<std::size_t>(c)]);
    at_lower[c] = k.k[static_cast<std::size_t>(c)] <= act_tol;
    at_upper[c] = k.k[static_cast<std::size_t>(c)] >= s[static_cast<std::size_t>(c)] - act_tol;
  }

  const double g1c[4] = {0, 0, 1, 1};  // cells covering group 1
  const double g2c[4] = {0, 1, 0, 1};
  const int nvar = 1 + (a1 ? 1 : 0) + (a2 ? 1 : 0);
  double ata[3][3] = {{0}};
  double atb[3] = {0};
  auto row_of = [&](int c, double* row) {
    row[0] = 1.0;
    int j = 1;
    if (a1) row[j++] = -g1c[c];
    if (a2) row[j++] = -g2c[c];
  };
  int free_rows = 0;
  for (int c = 0; c < 4; ++c) {
    if (s[static_cast<std::size_t>(c)] <= 0.0 || at_lower[c] || at_upper[c]) continue;
    double row[3] = {0, 0, 0};
    row_of(c, row);
    for (int i = 0; i < nvar; ++i) {
      for (int j = 0; j < nvar; ++j) ata[i][j] += row[i] * row[j];
      atb[i] += row[i] * grad[c];
    }
    ++free_rows;
  }
  if (free_rows == 0) {
    for (int c = 0; c < 4; ++c) {
      if (s[static_cast<std::size_t>(c)] <= 0.0) continue;
      double row[3] = {0, 0, 0};
      row_of(c, row);
      for (int i = 0; i < nvar; ++i) {
        for (int j = 0; j < nvar; ++j) ata[i][j] += row[i] * row[j];
        atb[i] += row[i] * grad[c];
      }
    }
  }
  for (int i = 0; i < nvar; ++i) ata[i][i] += 1e-12;

  // tiny Gaussian elimination
  double theta[3] = {0, 0, 0};
  {
    double a[3][4];
    for (int i = 0; i < nvar; ++i) {
      for (int j = 0; j < nvar; ++j) a[i][j] = ata[i][j];
      a[i][nvar] = atb[i];
    }
    for (int col = 0; col < nvar; ++col) {
      int piv = col;
      for (int r = col + 1; r < nvar; ++r) {
        if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
      }
      for (int j = 0; j <= nvar; ++j) std::swap(a[col][j], a[piv][j]);
      if (std::abs(a[col][col]) < 1e-300) continue;
      for (int r = 0; r < nvar; ++r) {
        if (r == col) continue;
        const double factor = a[r][col] / a[col][col];
        for (int j = 0; j <= nvar; ++j) a[r][j] -= factor * a[col][j];
      }
    }
    for (int i = 0; i < nvar; ++i) {
      theta[i] = std::abs(a[i][i]) < 1e-300 ? 0.0 : a[i][nvar] / a[i][i];
    }
  }
  const double mu = theta[0];
  double alpha1 = 0.0, alpha2 = 0.0;
  {
    int j = 1;
    if (a1) alpha1 = theta[j++];
    if (a2) alpha2 = theta[j++];
  }

  residual = std::max(residual, std::max(0.0, -alpha1));
  residual = std::max(residual, std::max(0.0, -alpha2));
  residual = std::max(residual, std::abs(alpha1 * (cover1 - L1)));
  residual = std::max(residual, std::abs(alpha2 * (cover2 - L2)));

  for (int c = 0; c < 4; ++c) {
    if (s[static_cast<std::size_t>(c)] <= 0.0) continue;
    const double adjusted = mu - alpha1 * g1c[c] - alpha2 * g2c[c];
    const double slack = adjusted - grad[c];  // lambda_lower - lambda_upper
    if (at_lower[c] && !at_upper[c]) {
      residual = std::max(residual, std::max(0.0, -slack));
    } else if (at_upper[c] && !at_lower[c]) {
      residual = std::max(residual, std::max(0.0, slack));
    } else if (!at_lower[c] && !at_upper[c]) {
      residual = std::max(residual, std::abs(slack));
    }
  }
  return residual;
}

double limit_utility_ratio(const CellObjective& observed, const CellObjective& latent, double n,
                           double L1, double L2) {
  const AllocationVector tilde = solve_program2(observed, n, L1, L2);
  const AllocationVector star = solve_program1(latent.sizes(), n);
  const double denom = latent.total(star);
  if (!(denom > 0.0)) throw std::domain_error("latent optimum is not positive");
  return latent.total(tilde) / denom;
}

MaxRatioResult max_limit_ratio(const CellObjective& observed, const CellObjective& latent, double n,
                               int grid_points, int threads) {
  if (grid_points < 2) throw std::invalid_argument("grid needs at least 2 points per axis");
  const auto& s = observed.sizes();
  const double G1 = s[kCellG1Only] + s[kCellBoth];
  const double G2 = s[kCellG2Only] + s[kCellBoth];

  const AllocationVector star = solve_program1(latent.sizes(), n);
  const double denom = latent.total(star);
  if (!(denom > 0.0)) throw std::domain_error("latent optimum is not positive");

  // Grid points the decision maker cannot satisfy are not admissible
  // interventions; they never win the max.
  auto ratio_at = [&](double l1, double l2) {
    try {
      return latent.total(solve_program2(observed, n, l1, l2)) / denom;
    } catch (const InfeasibleError&) {
      return -1.0;
    }
  };

  auto l1_of = [&](int i) { return G1 * static_cast<double>(i) / static_cast<double>(grid_points - 1); };
  auto l2_of = [&](int j) { return G2 * static_cast<double>(j) / static_cast<double>(grid_points - 1); };

  std::vector<double> values(static_cast<std::size_t>(grid_points) * static_cast<std::size_t>(grid_points));
  parallel_for(0, grid_points, threads, [&](int i) {
    for (int j = 0; j < grid_points; ++j) {
      values[static_cast<std::size_t>(i) * static_cast<std::size_t>(grid_points) + static_cast<std::size_t>(j)] =
          ratio_at(l1_of(i), l2_of(j));
    }
  });

  MaxRatioResult best;
  best.ratio = -1.0;
  for (int i = 0; i < grid_points; ++i) {
    for (int j = 0; j < grid_points; ++j) {
      const double v = values[static_cast<std::size_t>(i) * static_cast<std::size_t>(grid_points) + static_cast<std::size_t>(j)];
      if (v > best.ratio) {
        best.ratio = v;
        best.l1 = l1_of(i);
        best.l2 = l2_of(j);
      }
    }
  }

  // One refinement pass around the grid argmax.
  const double step1 = G1 / static_cast<double>(grid_points - 1);
  const double step2 = G2 / static_cast<double>(grid_points - 1);
  const auto [l1r, v1] = numerics::golden_section_max(
      [&](double l1) { return ratio_at(l1, best.l2); }, std::max(0.0, best.l1 - step1),
      std::min(G1, best.l1 + step1), 60);
  if (v1 > best.ratio) {
    best.ratio = v1;
    best.l1 = l1r;
  }
  const auto [l2r, v2] = numerics::golden_section_max(
      [&](double l2) { return ratio_at(best.l1, l2); }, std::max(0.0, best.l2 - step2),
      std::min(G2, best.l2 + step2), 60);
  if (v2 > best.ratio) {
    best.ratio = v2;
    best.l2 = l2r;
  }
  return best;
}

BoundReport uniform_ratio_bound(double rho, double eta, double beta1, double beta2) {
  if (!(rho > 0.0) || !(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("need rho > 0, eta in (0,1)");
  BoundReport r;
  r.rho = rho;
  r.eta = eta;
  r.beta1 = beta1;
  r.beta2 = beta2;
  const double term = (rho / 3.0) * std::min(eta, 1.0 - eta) * (1.0 - beta1) * (1.0 - beta2);
  r.value = 1.0 - term * term;
  return r;
}

BoundReport general_ratio_bound(double c, double rho, double eta, double delta_b) {
  if (!(c > 0.0 && c <= 1.0)) throw std::invalid_argument("need c in (0, 1]");
  if (!(rho > 0.0) || !(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("need rho > 0, eta in (0,1)");
  BoundReport r;
  r.c = c;
  r.rho = rho;
  r.eta = eta;
  r.delta_b = delta_b;
  const double c4 = c * c * c * c;
  const double term = c4 * rho * std::min(eta, 1.0 - eta) * delta_b;
  r.value = 1.0 - term * term;
  return r;
}

BoundReport extreme_bias_ratio_bound(double beta1, double beta2) {
  BoundReport r;
  r.beta1 = beta1;
  r.beta2 = beta2;
  // Ratios never exceed 1, so the bound is clamped where it goes vacuous.
  r.value = std::min(1.0, 8.0 / 9.0 + 1.5 * std::max(beta1, beta2));
  return r;
}

}  // namespace biasedselect
