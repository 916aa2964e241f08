#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "sigver/error.hpp"

namespace sigver {

/// Entries at or above this value are forbidden assignments.
inline constexpr double kForbiddenCost = 1e30;

/// Dense square cost matrix, row-major.
class CostMatrix {
 public:
  CostMatrix() = default;
  explicit CostMatrix(int n, double fill = 0.0)
      : n_(n), entries_(static_cast<std::size_t>(n) * n, fill) {
    if (n < 0) throw Error(ErrorCode::kInvalidArgument, "negative dimension");
  }

  int size() const { return n_; }
  double& operator()(int r, int c) { return entries_[static_cast<std::size_t>(r) * n_ + c]; }
  double operator()(int r, int c) const { return entries_[static_cast<std::size_t>(r) * n_ + c]; }
  std::span<const double> row(int r) const {
    return {entries_.data() + static_cast<std::size_t>(r) * n_, static_cast<std::size_t>(n_)};
  }

  CostMatrix transposed() const {
    CostMatrix t(n_);
    for (int r = 0; r < n_; ++r)
      for (int c = 0; c < n_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  static bool forbidden(double v) { return !(v < kForbiddenCost); }

 private:
  int n_ = 0;
  std::vector<double> entries_;
};

struct Assignment {
  /// row -> column
  std::vector<int> permutation;
  /// Sum of matrix entries along `permutation`, accumulated in row order.
  double total_cost = 0.0;
};

/// Minimum-cost perfect assignment by successive shortest augmenting paths
/// with row/column potentials (Jonker-Volgenant style), O(n^3).
/// Throws InfeasibleMatrix when no assignment avoids forbidden entries.
inline Assignment solve(const CostMatrix& m) {
  const int n = m.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  for (int r = 0; r < n; ++r)
    for (double v : m.row(r))
      if (std::isnan(v) || v < 0.0) throw Error(ErrorCode::kInvalidArgument, "entries must be >= 0");

  // Columns are 1-based; column 0 is the virtual root of each search tree.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), min_slack(n + 1);
  std::vector<int> row_of(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    row_of[0] = i;
    int j0 = 0;
    std::fill(min_slack.begin(), min_slack.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = row_of[j0];
      double delta = inf;
      int j1 = -1;
      const auto cost = m.row(i0 - 1);
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double c = cost[j - 1];
        if (!CostMatrix::forbidden(c)) {
          const double reduced = c - u[i0] - v[j];
          if (reduced < min_slack[j]) {
            min_slack[j] = reduced;
            way[j] = j0;
          }
        }
        if (min_slack[j] < delta) {
          delta = min_slack[j];
          j1 = j;
        }
      }
      if (j1 < 0 || delta == inf) {
        throw Error(ErrorCode::kInfeasibleMatrix, "no finite perfect assignment exists");
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[row_of[j]] += delta;
          v[j] -= delta;
        } else {
          min_slack[j] -= delta;
        }
      }
      j0 = j1;
    } while (row_of[j0] != 0);
    do {
      const int j1 = way[j0];
      row_of[j0] = row_of[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  Assignment out;
  out.permutation.assign(n, -1);
  for (int j = 1; j <= n; ++j) out.permutation[row_of[j] - 1] = j - 1;
  for (int r = 0; r < n; ++r) out.total_cost += m(r, out.permutation[r]);
  return out;
}

}  // namespace sigver
