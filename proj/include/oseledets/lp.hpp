#pragma once

// Small dense linear programs solved by a two-phase tableau simplex with
// Bland's rule. Everything here is exact up to floating point: the l^1 / l^inf
// distance problems, facet minimizations and polytope-section maximizations
// reduce to LPs of at most a few hundred variables.

#include "space.hpp"

#include <algorithm>
#include <optional>
#include <vector>

namespace oseledets::lp {

enum class Status { Optimal, Infeasible, Unbounded };

struct Solution {
  Status status = Status::Infeasible;
  double value = 0.0;
  Vec x;  // primal solution in the caller's variable layout
};

namespace detail {

// Standard-form problem: minimize c.x subject to A x = b, x >= 0, b >= 0.
// Phase 1 drives artificial variables out; phase 2 optimizes c. Bland's rule
// keeps cycling impossible; these problems are tiny so speed is not a concern.
inline Solution simplex_standard(Mat A, Vec b, Vec c) {
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  for (int i = 0; i < m; ++i)
    if (b[i] < 0) {
      A.row(i) = -A.row(i);
      b[i] = -b[i];
    }

  // Tableau with artificials appended: columns [x | artificial | rhs].
  Mat T(m + 1, n + m + 1);
  T.setZero();
  T.block(0, 0, m, n) = A;
  T.block(0, n, m, m) = Mat::Identity(m, m);
  T.col(n + m).head(m) = b;
  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) basis[i] = n + i;

  const double eps = 1e-11;

  auto pivot = [&](int row, int col) {
    T.row(row) /= T(row, col);
    for (int r = 0; r <= m; ++r)
      if (r != row && std::abs(T(r, col)) > 0) T.row(r) -= T(r, col) * T.row(row);
    basis[row] = col;
  };

  auto run = [&](int ncols) -> bool {
    // Objective row must already be reduced w.r.t. the basis.
    for (int iter = 0; iter < 20000; ++iter) {
      int col = -1;
      for (int j = 0; j < ncols; ++j)
        if (T(m, j) < -eps) {
          col = j;
          break;  // Bland: smallest index
        }
      if (col < 0) return true;
      int row = -1;
      double best = 0.0;
      for (int i = 0; i < m; ++i)
        if (T(i, col) > eps) {
          const double ratio = T(i, n + m) / T(i, col);
          if (row < 0 || ratio < best - eps ||
              (ratio < best + eps && basis[i] < basis[row]))
            row = i, best = ratio;
        }
      if (row < 0) return false;  // unbounded
      pivot(row, col);
    }
    return true;  // iteration cap; treat as converged for these tiny LPs
  };

  // Phase 1: minimize sum of artificials.
  for (int j = 0; j < n + m; ++j) T(m, j) = (j >= n) ? 1.0 : 0.0;
  T(m, n + m) = 0.0;
  for (int i = 0; i < m; ++i) T.row(m) -= T.row(i);  // reduce w.r.t. artificial basis
  run(n + m);
  if (-T(m, n + m) > 1e-7 * (1.0 + b.cwiseAbs().maxCoeff())) {
    Solution s;
    s.status = Status::Infeasible;
    return s;
  }
  // Drive any residual artificial out of the basis if possible.
  for (int i = 0; i < m; ++i)
    if (basis[i] >= n) {
      int col = -1;
      for (int j = 0; j < n; ++j)
        if (std::abs(T(i, j)) > eps) {
          col = j;
          break;
        }
      if (col >= 0) pivot(i, col);
    }

  // Phase 2. Pricing is restricted to the first n columns, so artificials
  // can never re-enter the basis.
  T.row(m).setZero();
  for (int j = 0; j < n; ++j) T(m, j) = c[j];
  for (int i = 0; i < m; ++i)
    if (basis[i] < n) T.row(m) -= T(m, basis[i]) * T.row(i);
  if (!run(n)) {
    Solution s;
    s.status = Status::Unbounded;
    return s;
  }

  Solution s;
  s.status = Status::Optimal;
  s.x = Vec::Zero(n);
  for (int i = 0; i < m; ++i)
    if (basis[i] < n) s.x[basis[i]] = T(i, n + m);
  s.value = c.dot(s.x);
  return s;
}

}  // namespace detail

// General-form builder: free variables, equality and <= rows. Free variables
// are split x = x+ - x-, inequality rows get slacks.
class Problem {
 public:
  explicit Problem(int nvars) : n_(nvars), c_(Vec::Zero(nvars)) {}

  void set_objective(const Vec& c) { c_ = c; }
  void add_eq(const Vec& a, double b) { rows_.push_back({a, b, true}); }
  void add_le(const Vec& a, double b) { rows_.push_back({a, b, false}); }

  Solution minimize() const {
    const int m = static_cast<int>(rows_.size());
    int nslack = 0;
    for (const auto& r : rows_)
      if (!r.eq) ++nslack;
    const int N = 2 * n_ + nslack;
    Mat A = Mat::Zero(m, N);
    Vec b(m), c = Vec::Zero(N);
    int slack = 0;
    for (int i = 0; i < m; ++i) {
      A.row(i).head(n_) = rows_[i].a.transpose();
      A.row(i).segment(n_, n_) = -rows_[i].a.transpose();
      if (!rows_[i].eq) A(i, 2 * n_ + slack++) = 1.0;
      b[i] = rows_[i].b;
    }
    c.head(n_) = c_;
    c.segment(n_, n_) = -c_;
    Solution s = detail::simplex_standard(A, b, c);
    if (s.status == Status::Optimal) {
      Vec x = s.x.head(n_) - s.x.segment(n_, n_);
      s.x = x;
    }
    return s;
  }

  Solution maximize() const {
    Problem flipped = *this;
    flipped.c_ = -c_;
    Solution s = flipped.minimize();
    s.value = -s.value;
    return s;
  }

 private:
  struct Row {
    Vec a;
    double b;
    bool eq;
  };
  int n_;
  Vec c_;
  std::vector<Row> rows_;
};

// min ||x - W a||_1 over a: LP with residual split r = r+ - r-.
// Variables [a (k, free via builder), r+ (d), r- (d)] but the builder already
// splits frees, so model r+, r- directly as constrained columns.
inline double dist_l1(const Vec& x, const Mat& W) {
  const int d = static_cast<int>(x.size());
  const int k = static_cast<int>(W.cols());
  if (k == 0) return x.cwiseAbs().sum();
  // Variables: a (k free), u (d free), with constraints u >= x - W a and
  // u >= -(x - W a); minimize sum u.
  Problem prob(k + d);
  Vec c = Vec::Zero(k + d);
  c.tail(d).setOnes();
  prob.set_objective(c);
  for (int i = 0; i < d; ++i) {
    Vec row = Vec::Zero(k + d);
    row.head(k) = -W.row(i).transpose();
    row[k + i] = -1.0;
    prob.add_le(row, -x[i]);  // x_i - (Wa)_i - u_i <= 0
    Vec row2 = Vec::Zero(k + d);
    row2.head(k) = W.row(i).transpose();
    row2[k + i] = -1.0;
    prob.add_le(row2, x[i]);  // (Wa)_i - x_i - u_i <= 0
  }
  Solution s = prob.minimize();
  if (s.status != Status::Optimal) throw std::runtime_error("dist_l1: LP failed");
  return std::max(0.0, s.value);
}

// min ||x - W a||_inf over a.
inline double dist_linf(const Vec& x, const Mat& W) {
  const int d = static_cast<int>(x.size());
  const int k = static_cast<int>(W.cols());
  if (k == 0) return x.cwiseAbs().maxCoeff();
  // Variables: a (k), t (1); minimize t s.t. |x - W a|_i <= t.
  Problem prob(k + 1);
  Vec c = Vec::Zero(k + 1);
  c[k] = 1.0;
  prob.set_objective(c);
  for (int i = 0; i < d; ++i) {
    Vec row = Vec::Zero(k + 1);
    row.head(k) = -W.row(i).transpose();
    row[k] = -1.0;
    prob.add_le(row, -x[i]);
    Vec row2 = Vec::Zero(k + 1);
    row2.head(k) = W.row(i).transpose();
    row2[k] = -1.0;
    prob.add_le(row2, x[i]);
  }
  Solution s = prob.minimize();
  if (s.status != Status::Optimal) throw std::runtime_error("dist_linf: LP failed");
  return std::max(0.0, s.value);
}

// max g.z over { z = B a : ||z||_p <= 1 } for p in {1, inf}: the section of
// the unit ball by a subspace is a polytope, so this is an LP. Returns the
// maximizing z.
inline std::pair<double, Vec> max_linear_over_ball_section(const Vec& g, const Mat& B, double p) {
  const int d = static_cast<int>(g.size());
  const int k = static_cast<int>(B.cols());
  if (k == 0) return {0.0, Vec::Zero(d)};
  if (p == 1.0) {
    // Variables a (k), u (d): u >= |B a|, sum u <= 1, maximize g.(B a).
    Problem prob(k + d);
    Vec c = Vec::Zero(k + d);
    c.head(k) = B.transpose() * g;
    prob.set_objective(c);
    for (int i = 0; i < d; ++i) {
      Vec row = Vec::Zero(k + d);
      row.head(k) = B.row(i).transpose();
      row[k + i] = -1.0;
      prob.add_le(row, 0.0);
      Vec row2 = Vec::Zero(k + d);
      row2.head(k) = -B.row(i).transpose();
      row2[k + i] = -1.0;
      prob.add_le(row2, 0.0);
    }
    Vec budget = Vec::Zero(k + d);
    budget.tail(d).setOnes();
    prob.add_le(budget, 1.0);
    Solution s = prob.maximize();
    if (s.status != Status::Optimal)
      throw std::runtime_error("max_linear_over_ball_section: LP failed");
    return {s.value, B * s.x.head(k)};
  }
  if (std::isinf(p)) {
    // Variables a (k): -1 <= (B a)_i <= 1, maximize g.(B a).
    Problem prob(k);
    prob.set_objective(B.transpose() * g);
    for (int i = 0; i < d; ++i) {
      prob.add_le(B.row(i).transpose(), 1.0);
      prob.add_le(-B.row(i).transpose(), 1.0);
    }
    Solution s = prob.maximize();
    if (s.status != Status::Optimal)
      throw std::runtime_error("max_linear_over_ball_section: LP failed");
    return {s.value, B * s.x};
  }
  throw std::invalid_argument("max_linear_over_ball_section: p must be 1 or inf");
}

}  // namespace oseledets::lp
