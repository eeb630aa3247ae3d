#include "biasedselect/group_structure.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace biasedselect {

std::string signature_to_string(Signature sig, int p) {
  std::string s(static_cast<std::size_t>(p), '0');
  for (int l = 0; l < p; ++l) {
    if (sig & (Signature{1} << (p - 1 - l))) s[static_cast<std::size_t>(l)] = '1';
  }
  return s;
}

Signature signature_from_string(const std::string& s) {
  if (s.empty() || s.size() > 31) throw std::invalid_argument("signature must have 1..31 bits");
  Signature sig = 0;
  for (char c : s) {
    if (c != '0' && c != '1') throw std::invalid_argument("signature must be a bit-string");
    sig = (sig << 1) | static_cast<Signature>(c == '1');
  }
  return sig;
}

bool signature_has_group(Signature sig, int group, int p) {
  return (sig & (Signature{1} << (p - 1 - group))) != 0;
}

GroupStructure::GroupStructure(std::vector<Signature> memberships, int p)
    : p_(p), membership_(std::move(memberships)) {
  if (p_ < 1) throw std::invalid_argument("group count p must be at least 1");
  if (p_ > 31) throw std::invalid_argument("group count p must be at most 31");
  if (membership_.empty()) throw std::invalid_argument("item list must be non-empty");
  const Signature limit = (p_ >= 31) ? ~Signature{0} : ((Signature{1} << p_) - 1);
  for (std::size_t i = 0; i < membership_.size(); ++i) {
    if (membership_[i] > limit) throw std::invalid_argument("membership signature out of range for p");
    cells_[membership_[i]].push_back(static_cast<std::int32_t>(i));
  }
  group_sizes_.assign(static_cast<std::size_t>(p_), 0);
  for (const auto& [sig, items] : cells_) {
    for (int l = 0; l < p_; ++l) {
      if (signature_has_group(sig, l, p_)) group_sizes_[static_cast<std::size_t>(l)] += static_cast<int>(items.size());
    }
  }
}

int GroupStructure::cell_size(Signature sig) const {
  auto it = cells_.find(sig);
  return it == cells_.end() ? 0 : static_cast<int>(it->second.size());
}

int GroupStructure::min_cell_size() const {
  int best = std::numeric_limits<int>::max();
  for (const auto& [sig, items] : cells_) best = std::min(best, static_cast<int>(items.size()));
  return best;
}

SelectionProblem::SelectionProblem(GroupStructure structure, int n)
    : structure_(std::move(structure)), n_(n) {
  if (n_ < 1 || n_ > structure_.m()) throw std::invalid_argument("selection size n must satisfy 1 <= n <= m");
}

GroupStructure build_structure(int m, const std::vector<Signature>& memberships, int p) {
  if (static_cast<int>(memberships.size()) != m) {
    throw std::invalid_argument("membership list length must equal m");
  }
  return GroupStructure(memberships, p);
}

SelectionProblem make_balanced_problem(int m, int p, const std::map<Signature, double>& cell_fractions,
                                       int n) {
  if (m < 1) throw std::invalid_argument("m must be positive");
  double total = 0.0;
  for (const auto& [sig, frac] : cell_fractions) total += frac;
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("cell fractions must sum to 1");

  std::vector<Signature> memberships;
  memberships.reserve(static_cast<std::size_t>(m));
  for (const auto& [sig, frac] : cell_fractions) {
    const double exact = frac * static_cast<double>(m);
    const double rounded = std::round(exact);
    if (std::abs(exact - rounded) > 1e-9 * static_cast<double>(m)) {
      throw std::invalid_argument("cell fraction " + signature_to_string(sig, p) +
                                  " does not give an integral cell size");
    }
    for (int i = 0; i < static_cast<int>(rounded); ++i) memberships.push_back(sig);
  }
  if (static_cast<int>(memberships.size()) != m) {
    throw std::invalid_argument("cell sizes do not sum to m");
  }
  return SelectionProblem(GroupStructure(std::move(memberships), p), n);
}

}  // namespace biasedselect
