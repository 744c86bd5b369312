#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace foglane::assign {

// Dense row-major weight matrix; only eligible cells may be paired.
struct WeightMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> weight;
  std::vector<char> eligible;

  WeightMatrix() = default;
  WeightMatrix(std::size_t r, std::size_t c)
      : rows(r), cols(c), weight(r * c, 0.0), eligible(r * c, 0) {}

  double w(std::size_t i, std::size_t j) const { return weight[i * cols + j]; }
  bool ok(std::size_t i, std::size_t j) const { return eligible[i * cols + j] != 0; }
  void set(std::size_t i, std::size_t j, double value, bool is_eligible = true) {
    weight[i * cols + j] = value;
    eligible[i * cols + j] = is_eligible ? 1 : 0;
  }
};

// assignment[i] = column paired with row i, or -1.
struct Assignment {
  std::vector<int> col_of_row;
  double value = 0.0;
};

namespace detail {

// Minimum-cost perfect matching on a square matrix (Kuhn–Munkres with
// potentials). Returns col_of_row.
inline std::vector<int> hungarian_min(const std::vector<double>& cost, std::size_t n) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0);
  std::vector<double> v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0);
  std::vector<std::size_t> way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
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
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> col_of_row(n, -1);
  for (std::size_t j = 1; j <= n; ++j) {
    if (p[j] != 0) col_of_row[p[j] - 1] = static_cast<int>(j - 1);
  }
  return col_of_row;
}

// Optimal assignment restricted to the given rows and columns. Result is
// indexed by original row ids; rows outside `rows` stay -1.
inline Assignment solve_sub(const WeightMatrix& m, const std::vector<std::size_t>& rows,
                            const std::vector<std::size_t>& cols) {
  Assignment out;
  out.col_of_row.assign(m.rows, -1);
  const std::size_t n = std::max(rows.size(), cols.size());
  if (n == 0) return out;
  std::vector<double> cost(n * n, 0.0);
  bool any = false;
  for (std::size_t a = 0; a < rows.size(); ++a) {
    for (std::size_t b = 0; b < cols.size(); ++b) {
      if (m.ok(rows[a], cols[b])) {
        cost[a * n + b] = -m.w(rows[a], cols[b]);
        any = true;
      }
    }
  }
  if (!any) return out;
  const auto sol = hungarian_min(cost, n);
  for (std::size_t a = 0; a < rows.size(); ++a) {
    const int b = sol[a];
    if (b < 0 || static_cast<std::size_t>(b) >= cols.size()) continue;
    const std::size_t i = rows[a];
    const std::size_t j = cols[static_cast<std::size_t>(b)];
    if (!m.ok(i, j)) continue;
    out.col_of_row[i] = static_cast<int>(j);
    out.value += m.w(i, j);
  }
  return out;
}

inline double tolerance(double value) { return 1e-9 * std::max(1.0, std::abs(value)); }

}  // namespace detail

// Maximum-weight one-to-one assignment over eligible cells. Among optimal
// assignments the result is the lexicographically smallest vector
// (col_of_row[0], col_of_row[1], ...), with "unassigned" ordered after
// every column. Weights of eligible cells must be positive.
inline Assignment solve(const WeightMatrix& m) {
  std::vector<std::size_t> rows(m.rows);
  std::vector<std::size_t> cols(m.cols);
  for (std::size_t i = 0; i < m.rows; ++i) rows[i] = i;
  for (std::size_t j = 0; j < m.cols; ++j) cols[j] = j;

  Assignment cur = detail::solve_sub(m, rows, cols);
  Assignment out;
  out.col_of_row.assign(m.rows, -1);
  double fixed = 0.0;
  const double best = cur.value;

  for (std::size_t i = 0; i < m.rows; ++i) {
    rows.erase(std::find(rows.begin(), rows.end(), i));
    const int chosen = cur.col_of_row[i];
    const double rest_target = best - fixed;

    int pick = chosen;
    for (std::size_t j : cols) {
      if (chosen >= 0 && static_cast<int>(j) >= chosen) break;
      if (!m.ok(i, j)) continue;
      std::vector<std::size_t> sub_cols;
      sub_cols.reserve(cols.size());
      for (std::size_t c : cols) {
        if (c != j) sub_cols.push_back(c);
      }
      Assignment trial = detail::solve_sub(m, rows, sub_cols);
      const double total = m.w(i, j) + trial.value;
      if (total >= rest_target - detail::tolerance(best)) {
        pick = static_cast<int>(j);
        trial.col_of_row[i] = pick;
        trial.value = total;
        cur = std::move(trial);
        break;
      }
    }

    out.col_of_row[i] = pick;
    if (pick >= 0) {
      fixed += m.w(i, static_cast<std::size_t>(pick));
      cols.erase(std::find(cols.begin(), cols.end(), static_cast<std::size_t>(pick)));
    }
  }
  out.value = fixed;
  return out;
}

}  // namespace foglane::assign
