#include "soc/hungarian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace soc {

namespace {

// Rows <= cols required. Returns row index assigned to each column, -1 if
// the column stays unassigned.
std::vector<int> solve_rect(const std::vector<double>& a, int n, int m) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        double cur = a[static_cast<size_t>(i0 - 1) * m + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_of_col(m, -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j] != 0) row_of_col[j - 1] = p[j] - 1;
  }
  return row_of_col;
}

}  // namespace

std::vector<std::pair<int, int>> hungarian(const Tensor& cost) {
  if (cost.rank() != 2) throw ShapeError("hungarian: expected 2-D cost, got " + shape_str(cost.shape()));
  int n = cost.dim(0), m = cost.dim(1);
  const double* c = cost.data();
  for (int64_t i = 0; i < cost.size(); ++i) {
    if (!std::isfinite(c[i])) throw ContractError("hungarian: non-finite cost entry");
  }
  std::vector<std::pair<int, int>> pairs;
  if (n <= m) {
    std::vector<double> a(c, c + cost.size());
    std::vector<int> row_of_col = solve_rect(a, n, m);
    for (int j = 0; j < m; ++j) {
      if (row_of_col[j] >= 0) pairs.emplace_back(row_of_col[j], j);
    }
  } else {
    std::vector<double> a(static_cast<size_t>(m) * n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < m; ++j) a[static_cast<size_t>(j) * n + i] = c[static_cast<size_t>(i) * m + j];
    }
    std::vector<int> col_of_row = solve_rect(a, m, n);
    for (int i = 0; i < n; ++i) {
      if (col_of_row[i] >= 0) pairs.emplace_back(i, col_of_row[i]);
    }
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

double assignment_cost(const Tensor& cost, const std::vector<std::pair<int, int>>& pairs) {
  double s = 0.0;
  for (auto [r, c] : pairs) s += cost.at({r, c});
  return s;
}

}  // namespace soc
