#pragma once

// Metric geometry on l^p spaces: distances to subspaces and ball sections,
// dual witnesses, vertex enumeration of polytope ball sections (p in {1,inf}),
// deterministic sphere nets, Grassmannian (Hausdorff) distance, Gohberg-Krein
// points, and certified min-expansion over subspace spheres.
//
// Exactness policy: p = 2 uses closed forms (SVD / projections); p in {1,inf}
// uses linear programs and vertex enumeration, exact up to LP tolerance;
// other p fall back to convex iteration plus multistart/net search, and any
// quantity used as a certificate is then a provable one-sided bound rather
// than the optimizer's point estimate.

#include "lp.hpp"
#include "rng.hpp"
#include "space.hpp"

#include <algorithm>
#include <utility>
#include <vector>

namespace oseledets {

struct OptOptions {
  int starts = 32;          // multistart count for non-exact routes
  int max_iters = 200;      // iteration cap per start
  double tol = 1e-12;       // relative improvement stop
  std::uint64_t seed = 12345;
  double net_spacing = 0.05;      // angular resolution for net mode
  long vertex_budget = 200000;    // max linear systems in vertex enumeration
  long net_tuple_budget = 200000; // max tuples scanned in net mode
  int net_fallback_points = 10000;
};

namespace detail {

// IRLS for min_a ||x - B a||_p, 1 < p < inf, p != 2. Damped for p > 2,
// delta-annealed for p < 2. Returns the achieved value (an upper bound of the
// true distance) and the coefficients.
inline double dist_irls(const Vec& x, const Mat& B, double p, Vec* coeff = nullptr) {
  const Eigen::Index d = x.size();
  if (B.cols() == 0) {
    if (coeff) *coeff = Vec::Zero(0);
    return pnorm(x, p);
  }
  Vec a = B.colPivHouseholderQr().solve(x);
  const double scale = std::max(pnorm(x, p), 1e-300);
  double delta = (p < 2.0) ? 1e-2 * scale : 0.0;
  const double delta_floor = 1e-14 * scale;
  double best = pnorm(x - B * a, p);
  Vec best_a = a;
  for (int it = 0; it < 600; ++it) {
    const Vec r = x - B * a;
    Vec w(d);
    for (Eigen::Index i = 0; i < d; ++i)
      w[i] = std::pow(r[i] * r[i] + delta * delta, (p - 2.0) / 2.0);
    const Mat WB = w.asDiagonal() * B;
    const Mat G = B.transpose() * WB;
    const Vec rhs = WB.transpose() * x;
    Vec a_ls = G.ldlt().solve(rhs);
    if (!a_ls.allFinite()) break;
    a = (p > 2.0) ? Vec(a + (a_ls - a) / (p - 1.0)) : a_ls;
    const double f = pnorm(x - B * a, p);
    if (f < best) {
      best = f;
      best_a = a;
    }
    const bool annealed = delta <= delta_floor * 1.0001;
    if (annealed && std::abs(f - best) < 1e-13 * std::max(1.0, best) && it > 10) break;
    if (p < 2.0) delta = std::max(delta * 0.7, delta_floor);
  }
  if (coeff) *coeff = best_a;
  return best;
}

}  // namespace detail

// min over a of ||x - B a||_p. Exact for p in {1, 2, inf}; IRLS otherwise
// (upper bound within ~1e-10 of the optimum).
inline double dist_to_subspace(const Vec& x, const Mat& B, double p) {
  if (B.cols() == 0) return pnorm(x, p);
  if (p == 2.0) {
    const Vec a = B.colPivHouseholderQr().solve(x);
    return (x - B * a).norm();
  }
  if (p == 1.0) return lp::dist_l1(x, B);
  if (std::isinf(p)) return lp::dist_linf(x, B);
  return detail::dist_irls(x, B, p);
}

inline double dist_to_subspace(const Vector& x, const Subspace& W) {
  if (x.space != W.space) throw std::invalid_argument("dist_to_subspace: space mismatch");
  return dist_to_subspace(x.coords, W.basis, x.space.p);
}

// Unit dual functional vanishing on W with theta(x) = dist(x, W); the
// Hahn-Banach witness of the distance. Exact via LP duality for p in {1,inf},
// orthogonal residual for p = 2; for other p the norming functional of the
// IRLS residual projected onto the annihilator (theta(x) is then a certified
// lower bound of the distance).
inline Functional distance_functional(const Vector& x, const Subspace& W) {
  if (x.space != W.space) throw std::invalid_argument("distance_functional: space mismatch");
  const double p = x.space.p;
  const Mat& B = W.basis;
  const Eigen::Index d = x.coords.size();
  const Eigen::Index k = B.cols();

  auto annihilator_fallback = [&]() -> Functional {
    const Subspace ann = annihilator(W);
    if (ann.dim() == 0)
      throw std::invalid_argument("distance_functional: W is the full space");
    Vec th = ann.basis.col(0);
    th /= pnorm(th, dual_exponent(p));
    return {x.space, th};
  };

  if (p == 2.0) {
    Vec r = x.coords;
    if (k > 0) r -= B * (B.transpose() * x.coords);
    const double nr = r.norm();
    if (nr <= 1e-14 * std::max(1.0, x.coords.norm())) return annihilator_fallback();
    return {x.space, Vec(r / nr)};
  }

  if (p == 1.0 || std::isinf(p)) {
    // maximize x.theta subject to ||theta||_q <= 1 and theta(W) = 0.
    if (p == 1.0) {
      // q = inf: box plus equality rows.
      lp::Problem prob(static_cast<int>(d));
      prob.set_objective(x.coords);
      for (Eigen::Index i = 0; i < d; ++i) {
        Vec row = Vec::Zero(d);
        row[i] = 1.0;
        prob.add_le(row, 1.0);
        row[i] = -1.0;
        prob.add_le(row, 1.0);
      }
      for (Eigen::Index j = 0; j < k; ++j) prob.add_eq(B.col(j), 0.0);
      lp::Solution s = prob.maximize();
      if (s.status != lp::Status::Optimal) return annihilator_fallback();
      Vec th = s.x;
      const double nq = pnorm(th, infinity);
      if (nq <= 1e-13) return annihilator_fallback();
      return {x.space, Vec(th / nq)};
    }
    // p = inf, q = 1: theta with sum |theta_i| <= 1 via aux variables.
    lp::Problem prob(static_cast<int>(2 * d));
    Vec c = Vec::Zero(2 * d);
    c.head(d) = x.coords;
    prob.set_objective(c);
    for (Eigen::Index i = 0; i < d; ++i) {
      Vec row = Vec::Zero(2 * d);
      row[i] = 1.0;
      row[d + i] = -1.0;
      prob.add_le(row, 0.0);  // theta_i <= u_i
      row[i] = -1.0;
      prob.add_le(row, 0.0);  // -theta_i <= u_i
    }
    Vec budget = Vec::Zero(2 * d);
    budget.tail(d).setOnes();
    prob.add_le(budget, 1.0);
    for (Eigen::Index j = 0; j < k; ++j) {
      Vec row = Vec::Zero(2 * d);
      row.head(d) = B.col(j);
      prob.add_eq(row, 0.0);
    }
    lp::Solution s = prob.maximize();
    if (s.status != lp::Status::Optimal) return annihilator_fallback();
    Vec th = s.x.head(d);
    const double nq = pnorm(th, 1.0);
    if (nq <= 1e-13) return annihilator_fallback();
    return {x.space, Vec(th / nq)};
  }

  // Smooth p: residual's norming functional, orthogonality enforced exactly.
  Vec a;
  detail::dist_irls(x.coords, B, p, &a);
  Vec r = x.coords - (k > 0 ? Vec(B * a) : Vec(Vec::Zero(d)));
  if (pnorm(r, p) <= 1e-14 * std::max(1.0, pnorm(x.coords, p))) return annihilator_fallback();
  Vec th = norming_functional({x.space, r}).coords;
  if (k > 0) th -= B * (B.transpose() * th);
  const double nq = pnorm(th, dual_exponent(p));
  if (nq <= 1e-13) return annihilator_fallback();
  return {x.space, Vec(th / nq)};
}

// A certified lower bound of dist(x, W): the value of the dual witness.
// Coincides with dist_to_subspace for p in {1, 2, inf}.
inline double certified_dist_lo(const Vector& x, const Subspace& W) {
  const double p = x.space.p;
  if (p == 1.0 || p == 2.0 || std::isinf(p)) return dist_to_subspace(x, W);
  const Functional th = distance_functional(x, W);
  return std::max(0.0, apply(th, x));
}

// Distance from x to the ball section {B a : ||B a||_p <= 1}. Exact for
// p in {1, 2, inf}; for other p an upper bound from a feasible point.
inline double dist_to_ball_section(const Vec& x, const Mat& B, double p) {
  const Eigen::Index d = x.size();
  const Eigen::Index k = B.cols();
  if (k == 0) return pnorm(x, p);
  if (p == 2.0) {
    const Vec c = B.transpose() * x;  // B orthonormal
    const Vec r = x - B * c;
    const double over = std::max(0.0, c.norm() - 1.0);
    return std::sqrt(r.squaredNorm() + over * over);
  }
  if (p == 1.0) {
    // variables a (k), u (d) >= |x - Ba|, v (d) >= |Ba|, sum v <= 1.
    lp::Problem prob(static_cast<int>(k + 2 * d));
    Vec c = Vec::Zero(k + 2 * d);
    c.segment(k, d).setOnes();
    prob.set_objective(c);
    for (Eigen::Index i = 0; i < d; ++i) {
      Vec row = Vec::Zero(k + 2 * d);
      row.head(k) = -B.row(i).transpose();
      row[k + i] = -1.0;
      prob.add_le(row, -x[i]);
      Vec row2 = Vec::Zero(k + 2 * d);
      row2.head(k) = B.row(i).transpose();
      row2[k + i] = -1.0;
      prob.add_le(row2, x[i]);
      Vec row3 = Vec::Zero(k + 2 * d);
      row3.head(k) = B.row(i).transpose();
      row3[k + d + i] = -1.0;
      prob.add_le(row3, 0.0);
      Vec row4 = Vec::Zero(k + 2 * d);
      row4.head(k) = -B.row(i).transpose();
      row4[k + d + i] = -1.0;
      prob.add_le(row4, 0.0);
    }
    Vec budget = Vec::Zero(k + 2 * d);
    budget.tail(d).setOnes();
    prob.add_le(budget, 1.0);
    lp::Solution s = prob.minimize();
    if (s.status != lp::Status::Optimal)
      throw std::runtime_error("dist_to_ball_section: LP failed");
    return std::max(0.0, s.value);
  }
  if (std::isinf(p)) {
    // variables a (k), t: |x - Ba| <= t, |Ba| <= 1.
    lp::Problem prob(static_cast<int>(k + 1));
    Vec c = Vec::Zero(k + 1);
    c[k] = 1.0;
    prob.set_objective(c);
    for (Eigen::Index i = 0; i < d; ++i) {
      Vec row = Vec::Zero(k + 1);
      row.head(k) = -B.row(i).transpose();
      row[k] = -1.0;
      prob.add_le(row, -x[i]);
      Vec row2 = Vec::Zero(k + 1);
      row2.head(k) = B.row(i).transpose();
      row2[k] = -1.0;
      prob.add_le(row2, x[i]);
      Vec row3 = Vec::Zero(k + 1);
      row3.head(k) = B.row(i).transpose();
      prob.add_le(row3, 1.0);
      Vec row4 = Vec::Zero(k + 1);
      row4.head(k) = -B.row(i).transpose();
      prob.add_le(row4, 1.0);
    }
    lp::Solution s = prob.minimize();
    if (s.status != lp::Status::Optimal)
      throw std::runtime_error("dist_to_ball_section: LP failed");
    return std::max(0.0, s.value);
  }
  // Smooth p: unconstrained IRLS, then radial pullback if outside the ball;
  // convex objective over a segment, refined by ternary search.
  Vec a;
  detail::dist_irls(x, B, p, &a);
  const double na = pnorm(B * a, p);
  if (na <= 1.0 + 1e-12) return pnorm(x - B * a, p);
  Vec lo_a = a / na;
  Vec hi_a = a;
  for (int it = 0; it < 200; ++it) {
    const Vec m1 = lo_a + (hi_a - lo_a) / 3.0;
    const Vec m2 = lo_a + 2.0 * (hi_a - lo_a) / 3.0;
    auto cost = [&](const Vec& aa) {
      Vec u = B * aa;
      const double nu = pnorm(u, p);
      if (nu > 1.0) u /= nu;
      return pnorm(x - u, p);
    };
    if (cost(m1) <= cost(m2))
      hi_a = m2;
    else
      lo_a = m1;
  }
  Vec u = B * lo_a;
  const double nu = pnorm(u, p);
  if (nu > 1.0) u /= nu;
  return pnorm(x - u, p);
}

// Vertices of the full unit ball for polytope norms.
inline std::vector<Vec> ball_vertices(int d, double p) {
  std::vector<Vec> out;
  if (p == 1.0) {
    for (int i = 0; i < d; ++i)
      for (double s : {1.0, -1.0}) {
        Vec v = Vec::Zero(d);
        v[i] = s;
        out.push_back(v);
      }
    return out;
  }
  if (std::isinf(p)) {
    const std::uint64_t count = std::uint64_t(1) << d;
    for (std::uint64_t m = 0; m < count; ++m) {
      Vec v(d);
      for (int i = 0; i < d; ++i) v[i] = (m >> i) & 1 ? -1.0 : 1.0;
      out.push_back(v);
    }
    return out;
  }
  throw std::invalid_argument("ball_vertices: p must be 1 or inf");
}

// Vertices of the section {B a : ||B a||_p <= 1} for p in {1, inf}; B is
// d x k with full column rank. Every vertex solves k active facet equations,
// so enumeration over facet subsets is exhaustive. Returns an empty list when
// the combinatorial budget would be exceeded (caller falls back to search).
inline std::vector<Vec> section_vertices(const Mat& B, double p, long budget = 200000) {
  const int d = static_cast<int>(B.rows());
  const int k = static_cast<int>(B.cols());
  std::vector<Vec> out;
  if (k == 0) return out;
  if (k == d) return ball_vertices(d, p);

  auto push_unique = [&](const Vec& v) {
    for (const auto& w : out)
      if ((w - v).cwiseAbs().maxCoeff() < 1e-9) return;
    out.push_back(v);
  };

  if (std::isinf(p)) {
    // Choose k coordinates pinned at +-1; remaining coordinates must stay in
    // the box.
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) idx[i] = i;
    long systems = 1;
    for (int i = 0; i < k; ++i) {
      systems = systems * (d - i) / (i + 1);
      if (systems > budget) return {};
    }
    systems <<= (k - 1);
    if (systems > budget) return {};
    while (true) {
      Mat BI(k, k);
      for (int r = 0; r < k; ++r) BI.row(r) = B.row(idx[r]);
      Eigen::FullPivLU<Mat> lu(BI);
      if (lu.rank() == k) {
        const std::uint64_t signs = std::uint64_t(1) << (k - 1);
        for (std::uint64_t m = 0; m < signs; ++m) {
          Vec s(k);
          s[0] = 1.0;
          for (int i = 1; i < k; ++i) s[i] = (m >> (i - 1)) & 1 ? -1.0 : 1.0;
          const Vec a = lu.solve(s);
          const Vec u = B * a;
          if (pnorm(u, infinity) <= 1.0 + 1e-8) {
            push_unique(u);
            push_unique(-u);
          }
        }
      }
      // next k-combination of {0..d-1}
      int i = k - 1;
      while (i >= 0 && idx[i] == d - k + i) --i;
      if (i < 0) break;
      ++idx[i];
      for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
    return out;
  }

  if (p == 1.0) {
    // Facets of the cross-polytope are sign patterns s with s.x = 1; a vertex
    // of the section activates k of them (with either orientation).
    if (d > 12) return {};  // 2^(d-1) facet patterns; combinations overflow past this
    const int npat = 1 << (d - 1);  // patterns canonicalized to s[0] = +1
    std::vector<Vec> pats;
    pats.reserve(npat);
    for (int m = 0; m < npat; ++m) {
      Vec s(d);
      s[0] = 1.0;
      for (int i = 1; i < d; ++i) s[i] = (m >> (i - 1)) & 1 ? -1.0 : 1.0;
      pats.push_back(s);
    }
    long systems = 1;
    for (int i = 0; i < k; ++i) {
      systems = systems * (npat - i) / (i + 1);
      if (systems > budget) return {};
    }
    systems <<= (k - 1);
    if (systems > budget) return {};
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) idx[i] = i;
    while (true) {
      Mat SB(k, k);
      for (int r = 0; r < k; ++r) SB.row(r) = pats[idx[r]].transpose() * B;
      Eigen::FullPivLU<Mat> lu(SB);
      if (lu.rank() == k) {
        const std::uint64_t orients = std::uint64_t(1) << (k - 1);
        for (std::uint64_t m = 0; m < orients; ++m) {
          Vec rhs(k);
          rhs[0] = 1.0;
          for (int i = 1; i < k; ++i) rhs[i] = (m >> (i - 1)) & 1 ? -1.0 : 1.0;
          const Vec a = lu.solve(rhs);
          const Vec u = B * a;
          if (pnorm(u, 1.0) <= 1.0 + 1e-8) {
            push_unique(u);
            push_unique(-u);
          }
        }
      }
      int i = k - 1;
      while (i >= 0 && idx[i] == npat - k + i) --i;
      if (i < 0) break;
      ++idx[i];
      for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
    return out;
  }
  throw std::invalid_argument("section_vertices: p must be 1 or inf");
}

// Deterministic net on the Euclidean unit sphere S^{d-1} built from polar
// grids; supports d <= 4. The geodesic covering radius is at most
// spacing * sqrt(d-1) / 2 (cell half-diagonal), reported by
// euclid_net_covering.
inline std::vector<Vec> euclid_sphere_net(int d, double spacing) {
  std::vector<Vec> out;
  if (d < 1 || d > 4) throw std::invalid_argument("euclid_sphere_net: d must be in 1..4");
  const double pi = 3.14159265358979323846;
  if (d == 1) {
    out.push_back(Vec::Constant(1, 1.0));
    out.push_back(Vec::Constant(1, -1.0));
    return out;
  }
  if (d == 2) {
    const int m = std::max(4, static_cast<int>(std::ceil(2 * pi / spacing)));
    for (int j = 0; j < m; ++j) {
      const double a = 2 * pi * j / m;
      Vec v(2);
      v << std::cos(a), std::sin(a);
      out.push_back(v);
    }
    return out;
  }
  if (d == 3) {
    const int mt = std::max(2, static_cast<int>(std::ceil(pi / spacing)));
    for (int i = 0; i <= mt; ++i) {
      const double th = pi * i / mt;
      const double r = std::sin(th);
      const int mp = std::max(1, static_cast<int>(std::ceil(2 * pi * r / spacing)));
      for (int j = 0; j < mp; ++j) {
        const double ph = 2 * pi * j / mp;
        Vec v(3);
        v << std::cos(th), r * std::cos(ph), r * std::sin(ph);
        out.push_back(v);
      }
    }
    return out;
  }
  // d == 4: psi level sets are 2-spheres of radius sin(psi).
  const int mpsi = std::max(2, static_cast<int>(std::ceil(pi / spacing)));
  for (int i = 0; i <= mpsi; ++i) {
    const double ps = pi * i / mpsi;
    const double r = std::sin(ps);
    if (r < 1e-12) {
      Vec v = Vec::Zero(4);
      v[0] = std::cos(ps);
      out.push_back(v);
      continue;
    }
    const int mt = std::max(2, static_cast<int>(std::ceil(pi * r / spacing)));
    for (int a = 0; a <= mt; ++a) {
      const double th = pi * a / mt;
      const double r2 = r * std::sin(th);
      const int mp = std::max(1, static_cast<int>(std::ceil(2 * pi * r2 / spacing)));
      for (int b = 0; b < mp; ++b) {
        const double ph = 2 * pi * b / mp;
        Vec v(4);
        v << std::cos(ps), r * std::cos(th), r2 * std::cos(ph), r2 * std::sin(ph);
        out.push_back(v);
      }
    }
  }
  return out;
}

inline double euclid_net_covering(int d, double spacing) {
  return spacing * std::sqrt(static_cast<double>(std::max(1, d - 1))) / 2.0;
}

struct SectionMax {
  double value = 0.0;
  Vec point;   // ambient coordinates, p-norm 1
  bool exact = false;
};

// Maximize an even convex function over the unit sphere of span(B) in l^p.
// Exact by vertex enumeration for p in {1, inf} (within budget); otherwise
// multistart normalized gradient ascent plus an optional section net.
template <class F>
SectionMax max_convex_over_section(F&& f, const Mat& B, double p, const OptOptions& opt,
                                   bool with_net = true) {
  const int d = static_cast<int>(B.rows());
  const int k = static_cast<int>(B.cols());
  SectionMax best;
  if (k == 0) return best;

  if (p == 1.0 || std::isinf(p)) {
    const std::vector<Vec> verts = section_vertices(B, p, opt.vertex_budget);
    if (!verts.empty()) {
      for (const auto& v : verts) {
        const double val = f(v);
        if (val > best.value || best.point.size() == 0) {
          best.value = val;
          best.point = v;
        }
      }
      best.exact = true;
      return best;
    }
  }

  auto normalize = [&](Vec c) -> Vec {
    Vec u = B * c;
    const double n = pnorm(u, p);
    return n > 0 ? Vec(u / n) : Vec();
  };
  auto consider = [&](const Vec& u) {
    if (u.size() == 0) return;
    const double val = f(u);
    if (val > best.value || best.point.size() == 0) {
      best.value = val;
      best.point = u;
    }
  };

  // Multistart ascent in coefficient space with numeric gradients.
  for (int s = 0; s < opt.starts; ++s) {
    Rng rng(opt.seed, static_cast<std::uint64_t>(s));
    Vec c(k);
    if (s == 0)
      c = Vec::Unit(k, 0);
    else
      for (int i = 0; i < k; ++i) c[i] = rng.normal();
    if (c.norm() == 0) c = Vec::Unit(k, 0);
    Vec u = normalize(c);
    if (u.size() == 0) continue;
    double fu = f(u);
    consider(u);
    double step = 0.5;
    for (int it = 0; it < opt.max_iters && step > 1e-12; ++it) {
      Vec g(k);
      const double h = 1e-6;
      for (int i = 0; i < k; ++i) {
        Vec cp = c + h * Vec::Unit(k, i);
        Vec cm = c - h * Vec::Unit(k, i);
        const Vec up = normalize(cp), um = normalize(cm);
        g[i] = ((up.size() ? f(up) : fu) - (um.size() ? f(um) : fu)) / (2 * h);
      }
      bool improved = false;
      while (step > 1e-12) {
        Vec cn = c + step * g;
        const Vec un = normalize(cn);
        if (un.size() && f(un) > fu + 1e-15) {
          c = cn / cn.norm();
          u = normalize(c);
          fu = f(u);
          consider(u);
          improved = true;
          break;
        }
        step *= 0.5;
      }
      if (!improved) break;
      step = std::min(step * 2.0, 1.0);
    }
  }

  if (with_net && k <= 4) {
    // Section-sphere net sized to the fallback budget.
    double spacing;
    const double pi = 3.14159265358979323846;
    const int n = std::max(16, opt.net_fallback_points);
    if (k == 1)
      spacing = 1.0;
    else if (k == 2)
      spacing = 2 * pi / n;
    else if (k == 3)
      spacing = std::sqrt(4 * pi / n);
    else
      spacing = std::cbrt(2 * pi * pi / n);
    for (const auto& c : euclid_sphere_net(k, spacing)) consider(normalize(c));
  }
  return best;
}

// Directed Grassmann gap: sup over the unit sphere of U of the distance to
// the unit-ball section of W.
inline double directed_grassmann(const Subspace& U, const Subspace& W, const OptOptions& opt) {
  if (U.dim() == 0) return 0.0;
  if (W.dim() == 0) return 1.0;  // dist(u, {0}) = ||u|| = 1
  const double p = U.space.p;
  if (p == 2.0) {
    // The Euclidean projection of a unit vector stays in the ball, so the
    // section constraint is inactive and the gap is a largest singular value.
    const Mat R = U.basis - W.basis * (W.basis.transpose() * U.basis);
    Eigen::JacobiSVD<Mat> svd(R);
    return std::min(1.0, svd.singularValues()[0]);
  }
  auto f = [&](const Vec& u) { return dist_to_ball_section(u, W.basis, p); };
  return max_convex_over_section(f, U.basis, p, opt).value;
}

// Hausdorff distance between unit-ball sections of two subspaces.
inline double grassmann_distance(const Subspace& U, const Subspace& W,
                                 const OptOptions& opt = {}) {
  if (U.space != W.space) throw std::invalid_argument("grassmann_distance: space mismatch");
  if (U.dim() == 0 && W.dim() == 0) return 0.0;
  return std::max(directed_grassmann(U, W, opt), directed_grassmann(W, U, opt));
}

struct RieszPoint {
  Vector point;
  double distance = 0.0;
};

// A unit vector of V maximizing the distance to W. When dim V > dim W the
// maximum is 1 in exact arithmetic (Gohberg-Krein); the achieved value is
// returned alongside the point so callers can check the certificate.
inline RieszPoint riesz_point(const Subspace& V, const Subspace& W, const OptOptions& opt = {}) {
  if (V.space != W.space) throw std::invalid_argument("riesz_point: space mismatch");
  const Subspace inter = intersect(V, W);
  if (V.dim() <= inter.dim())
    throw std::invalid_argument("riesz_point: V must exceed its intersection with W");
  const double p = V.space.p;

  if (p == 2.0) {
    Mat R = V.basis;
    if (W.dim() > 0) R -= W.basis * (W.basis.transpose() * V.basis);
    Eigen::JacobiSVD<Mat> svd(R, Eigen::ComputeFullV);
    const Vec c = svd.matrixV().col(0);
    const Vec z = V.basis * c;
    return {{V.space, z}, svd.singularValues()[0]};
  }

  if (p == 1.0 || std::isinf(p)) {
    auto f = [&](const Vec& u) { return dist_to_subspace(u, W.basis, p); };
    SectionMax m = max_convex_over_section(f, V.basis, p, opt);
    if (m.exact) return {{V.space, m.point}, m.value};
  }

  // Alternating duality ascent: the distance functional of the current point
  // is maximized over the sphere section, which cannot decrease the distance.
  Mat R = V.basis;
  if (W.dim() > 0) R -= W.basis * (W.basis.transpose() * V.basis);
  Eigen::JacobiSVD<Mat> svd(R, Eigen::ComputeFullV);
  Vec z = V.basis * svd.matrixV().col(0);
  z /= pnorm(z, p);
  double dz = dist_to_subspace(z, W.basis, p);
  for (int it = 0; it < 100; ++it) {
    const Functional th = distance_functional({V.space, z}, W);
    auto pairing = [&](const Vec& u) { return std::abs(th.coords.dot(u)); };
    OptOptions inner = opt;
    inner.starts = 8;
    SectionMax m = max_convex_over_section(pairing, V.basis, p, inner, false);
    if (m.point.size() == 0) break;
    const double dn = dist_to_subspace(m.point, W.basis, p);
    if (dn > dz + 1e-13) {
      z = m.point;
      if (th.coords.dot(z) < 0) z = -z;
      dz = dn;
    } else {
      break;
    }
  }
  return {{V.space, z}, dz};
}

struct ExpansionBound {
  double lo = 0.0;        // certified lower bound of the inner infimum
  double estimate = 0.0;  // best point value found (upper bound of the inf)
  Vec argmin;             // ambient unit vector achieving the estimate
};

// inf { ||T u||_p_out : u in span(B), ||u||_p_in = 1 }. Exact (lo == estimate)
// for p_in = p_out = 2 and for p_in, p_out in {1, inf} via facet LPs.
// Otherwise lo is a norm-equivalence floor from the restricted smallest
// singular value.
inline ExpansionBound min_expansion_over_section(const Mat& T, const Mat& B, double p_in,
                                                 double p_out) {
  const int d_in = static_cast<int>(T.cols());
  const int d_out = static_cast<int>(T.rows());
  const int k = static_cast<int>(B.cols());
  ExpansionBound out;
  if (k == 0) throw std::invalid_argument("min_expansion_over_section: empty section");
  const Mat M = T * B;  // d_out x k

  if (p_in == 2.0 && p_out == 2.0) {
    Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullV);
    const double smin = (k <= svd.singularValues().size()) ? svd.singularValues()[k - 1] : 0.0;
    out.lo = out.estimate = smin;
    out.argmin = B * svd.matrixV().col(k - 1);
    return out;
  }

  const bool polytope_in = (p_in == 1.0) || std::isinf(p_in);
  const bool polytope_out = (p_out == 1.0) || std::isinf(p_out);
  if (polytope_in && polytope_out) {
    // Minimize the convex norm over each facet of the sphere section; facets
    // inherit from the ambient ball's facets, and the norm is even, so one
    // orientation per facet suffices.
    double bestval = infinity;
    Vec bestu;
    auto solve_facet = [&](const Vec& eq_row, double eq_rhs, bool l1_budget) {
      // variables: a (k) plus norm-modeling vars.
      const int extra = std::isinf(p_out) ? 1 : d_out;
      const int nv = k + extra + (l1_budget ? d_in : 0);
      lp::Problem prob(nv);
      Vec c = Vec::Zero(nv);
      if (std::isinf(p_out))
        c[k] = 1.0;
      else
        c.segment(k, d_out).setOnes();
      prob.set_objective(c);
      // objective modeling rows
      for (int r = 0; r < d_out; ++r) {
        Vec row = Vec::Zero(nv);
        row.head(k) = M.row(r).transpose();
        if (std::isinf(p_out))
          row[k] = -1.0;
        else
          row[k + r] = -1.0;
        prob.add_le(row, 0.0);
        Vec row2 = Vec::Zero(nv);
        row2.head(k) = -M.row(r).transpose();
        if (std::isinf(p_out))
          row2[k] = -1.0;
        else
          row2[k + r] = -1.0;
        prob.add_le(row2, 0.0);
      }
      // facet equality
      {
        Vec row = Vec::Zero(nv);
        row.head(k) = eq_row;
        prob.add_eq(row, eq_rhs);
      }
      // ball constraints on the domain side
      if (std::isinf(p_in)) {
        for (int i = 0; i < d_in; ++i) {
          Vec row = Vec::Zero(nv);
          row.head(k) = B.row(i).transpose();
          prob.add_le(row, 1.0);
          Vec row2 = Vec::Zero(nv);
          row2.head(k) = -B.row(i).transpose();
          prob.add_le(row2, 1.0);
        }
      } else {
        for (int i = 0; i < d_in; ++i) {
          Vec row = Vec::Zero(nv);
          row.head(k) = B.row(i).transpose();
          row[k + extra + i] = -1.0;
          prob.add_le(row, 0.0);
          Vec row2 = Vec::Zero(nv);
          row2.head(k) = -B.row(i).transpose();
          row2[k + extra + i] = -1.0;
          prob.add_le(row2, 0.0);
        }
        Vec budget = Vec::Zero(nv);
        budget.segment(k + extra, d_in).setOnes();
        prob.add_le(budget, 1.0);
      }
      lp::Solution s = prob.minimize();
      if (s.status != lp::Status::Optimal) return;
      if (s.value < bestval) {
        bestval = s.value;
        bestu = B * s.x.head(k);
      }
    };

    if (std::isinf(p_in)) {
      for (int i = 0; i < d_in; ++i) solve_facet(B.row(i).transpose(), 1.0, false);
    } else {
      const int npat = 1 << (d_in - 1);
      for (int m = 0; m < npat; ++m) {
        Vec s(d_in);
        s[0] = 1.0;
        for (int i = 1; i < d_in; ++i) s[i] = (m >> (i - 1)) & 1 ? -1.0 : 1.0;
        solve_facet(B.transpose() * s, 1.0, true);
      }
    }
    if (bestu.size() == 0) throw std::runtime_error("min_expansion_over_section: no feasible facet");
    const double nr = pnorm(bestu, p_in);
    if (nr > 0) bestu /= nr;
    out.lo = out.estimate = std::max(0.0, bestval);
    out.argmin = bestu;
    return out;
  }

  // General exponents: certified floor via norm equivalence, estimate via a
  // short search over the section sphere for the report.
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullV);
  const double smin =
      (k <= svd.singularValues().size()) ? svd.singularValues()[k - 1] : 0.0;
  out.lo = smin / (l2_over_lp(p_out, d_out) * lp_over_l2(p_in, d_in));
  auto neg = [&](const Vec& u) { return -pnorm(T * u, p_out); };
  OptOptions opt;
  opt.starts = 8;
  SectionMax m = max_convex_over_section(neg, B, p_in, opt, true);
  // -f is concave, so the "max" above is only a heuristic probe; evaluate the
  // best candidates directly instead.
  Vec cand = B * svd.matrixV().col(k - 1);
  const double nc = pnorm(cand, p_in);
  if (nc > 0) cand /= nc;
  double est = pnorm(T * cand, p_out);
  Vec argmin = cand;
  if (m.point.size()) {
    const double v = pnorm(T * m.point, p_out);
    if (v < est) {
      est = v;
      argmin = m.point;
    }
  }
  out.estimate = est;
  out.argmin = argmin;
  return out;
}

}  // namespace oseledets
