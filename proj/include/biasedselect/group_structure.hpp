#pragma once

#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

namespace biasedselect {

// Exact fraction, kept reduced. Selection rates and cell fractions are
// rationals of small integers and should not pick up rounding.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Rational() = default;
  Rational(std::int64_t n, std::int64_t d) : num(n), den(d) {
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Rational&) const = default;
};

// Group-membership signature: bit (p-1-l) set means the item is in group l
// (0-based), so the most-significant bit of the p-bit string is group 1.
using Signature = std::uint32_t;

std::string signature_to_string(Signature sig, int p);
Signature signature_from_string(const std::string& s);
bool signature_has_group(Signature sig, int group, int p);

// Items, their group memberships, and the induced intersection partition.
// Only non-empty cells are stored, so p may exceed log2(m). Immutable.
class GroupStructure {
 public:
  GroupStructure(std::vector<Signature> memberships, int p);

  int m() const { return static_cast<int>(membership_.size()); }
  int p() const { return p_; }
  Signature signature_of(int item) const { return membership_[static_cast<std::size_t>(item)]; }

  // Cell -> ascending item indices (0-based); keys ascend numerically, which
  // matches ascending bit-string order.
  const std::map<Signature, std::vector<std::int32_t>>& intersections() const { return cells_; }

  int cell_size(Signature sig) const;
  int group_size(int group) const { return group_sizes_[static_cast<std::size_t>(group)]; }
  int min_cell_size() const;

 private:
  int p_;
  std::vector<Signature> membership_;
  std::map<Signature, std::vector<std::int32_t>> cells_;
  std::vector<int> group_sizes_;
};

// A structure plus a selection size n, with the exact selection rate eta and
// minimum cell fraction rho.
class SelectionProblem {
 public:
  SelectionProblem(GroupStructure structure, int n);

  const GroupStructure& structure() const { return structure_; }
  int m() const { return structure_.m(); }
  int n() const { return n_; }
  Rational eta() const { return Rational(n_, structure_.m()); }
  Rational rho() const { return Rational(structure_.min_cell_size(), structure_.m()); }

 private:
  GroupStructure structure_;
  int n_;
};

GroupStructure build_structure(int m, const std::vector<Signature>& memberships, int p);

// Deterministic instance with the given cell fractions; items are assigned
// to cells in ascending signature order so seeds reproduce layouts exactly.
SelectionProblem make_balanced_problem(int m, int p, const std::map<Signature, double>& cell_fractions,
                                       int n);

}  // namespace biasedselect
