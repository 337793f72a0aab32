#pragma once

// Volume growth of linear maps on l^p spaces: successive-distance volumes,
// the supremal quantities D_k (volume growth), E_k (determinant of dual
// pairings), F_k (max-min expansion), and the inequality suite relating them.
//
// Every sup-type quantity is reported as an enclosure [lo, hi]:
//   - euclidean-exact (p = 2 both sides): lo = hi from singular values;
//   - optimize: lo is the value of an explicit witness (hence a true lower
//     bound); hi is the tightest of several provable upper bounds
//     (Horn/Hadamard volume bounds, operator-norm powers, norm-equivalence
//     transport of the Euclidean value);
//   - net: two-sided from an epsilon-net with an explicit Lipschitz
//     correction; refuses dimensions/budgets where the net is not affordable.

#include "geometry.hpp"

#include <array>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>

namespace oseledets {

struct LinearMap {
  NormedSpace domain;
  NormedSpace codomain;
  Mat m;
};

inline void check_map(const LinearMap& T) {
  if (T.m.rows() != T.codomain.dim || T.m.cols() != T.domain.dim)
    throw std::invalid_argument("LinearMap: matrix shape inconsistent with spaces");
  if (!T.m.allFinite()) throw std::invalid_argument("LinearMap: non-finite entries");
}

inline LinearMap dual_map(const LinearMap& T) {
  return {dual_space(T.codomain), dual_space(T.domain), T.m.transpose()};
}

// S after T.
inline LinearMap compose(const LinearMap& S, const LinearMap& T) {
  if (S.domain != T.codomain) throw std::invalid_argument("compose: space mismatch");
  return {T.domain, S.codomain, S.m * T.m};
}

inline Vec singular_values(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues();
}

enum class VolumeMode { EuclideanExact, Optimize, Net };

struct VolumeEnclosure {
  double lo = 0.0;
  double hi = 0.0;
  VolumeMode mode = VolumeMode::Optimize;
};

inline VolumeEnclosure make_enclosure(double lo, double hi, VolumeMode mode) {
  if (lo > hi * (1.0 + 1e-6) + 1e-12)
    throw std::runtime_error("VolumeEnclosure: certified lower bound exceeds upper bound");
  return {std::min(lo, hi), hi, mode};
}

struct Bound {
  double lo = 0.0;
  double hi = 0.0;
};

// Operator norm ||T||_{p_in -> p_out}. Exact (lo == hi) whenever the domain
// exponent is 1 or inf, the codomain exponent is 1 or inf (via the adjoint),
// or both exponents are 2; otherwise a norm-equivalence enclosure.
inline Bound op_norm(const LinearMap& T) {
  const double pin = T.domain.p, pout = T.codomain.p;
  const int din = T.domain.dim, dout = T.codomain.dim;
  if (pin == 1.0) {
    double v = 0.0;
    for (int j = 0; j < din; ++j) v = std::max(v, pnorm(T.m.col(j), pout));
    return {v, v};
  }
  if (std::isinf(pout)) {
    // ||Tx||_inf = max_i |row_i . x|; each row contributes its dual norm.
    const double qin = dual_exponent(pin);
    double v = 0.0;
    for (int i = 0; i < dout; ++i) v = std::max(v, pnorm(T.m.row(i).transpose(), qin));
    return {v, v};
  }
  if (std::isinf(pin) && din <= 20) {
    double v = 0.0;
    const std::uint64_t n = std::uint64_t(1) << (din - 1);
    Vec x(din);
    for (std::uint64_t mask = 0; mask < n; ++mask) {
      x[0] = 1.0;
      for (int i = 1; i < din; ++i) x[i] = (mask >> (i - 1)) & 1 ? -1.0 : 1.0;
      v = std::max(v, pnorm(T.m * x, pout));
    }
    return {v, v};
  }
  if (pout == 1.0 && dout <= 20) {
    // ||T||_{p->1} = ||T*||_{inf->q}, and the adjoint's domain is small
    // enough for exact sign enumeration.
    return op_norm(dual_map(T));
  }
  if (pin == 2.0 && pout == 2.0) {
    const double v = singular_values(T.m)[0];
    return {v, v};
  }
  // Enclosure: evaluate candidates for lo, transport sigma_1 for hi.
  const double s1 = singular_values(T.m)[0];
  double lo = 0.0;
  Eigen::JacobiSVD<Mat> svd(T.m, Eigen::ComputeFullV);
  Vec cand = svd.matrixV().col(0);
  const double nc = pnorm(cand, pin);
  if (nc > 0) lo = std::max(lo, pnorm(T.m * (cand / nc), pout));
  for (int j = 0; j < din; ++j) lo = std::max(lo, pnorm(T.m.col(j), pout));
  const double hi = lp_over_l2(pout, dout) * s1 * l2_over_lp(pin, din);
  return {lo, std::max(lo, hi)};
}

// Ordered product of successive distances; the k-dimensional volume of a
// vector collection. Not permutation invariant for p != 2.
inline double vol_k(const std::vector<Vector>& vs) {
  if (vs.empty()) return 1.0;
  const NormedSpace space = vs[0].space;
  double prod = 1.0;
  Mat basis(space.dim, 0);
  for (const auto& v : vs) {
    if (v.space != space) throw std::invalid_argument("vol_k: mixed spaces");
    prod *= dist_to_subspace(v.coords, basis, space.p);
    if (prod == 0.0) return 0.0;
    basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
    basis.col(basis.cols() - 1) = v.coords;
  }
  return prod;
}

namespace detail {

inline double vol_k_raw(const std::vector<Vec>& vs, const NormedSpace& space, bool certified) {
  double prod = 1.0;
  Mat cols(space.dim, 0);
  for (const auto& v : vs) {
    const Subspace W = make_subspace(space, cols);
    double f;
    const double p = space.p;
    if (!certified || p == 1.0 || p == 2.0 || std::isinf(p))
      f = dist_to_subspace(v, W.basis, p);
    else
      f = certified_dist_lo({space, v}, W);
    prod *= std::max(0.0, f);
    if (prod == 0.0) return 0.0;
    cols.conservativeResize(Eigen::NoChange, cols.cols() + 1);
    cols.col(cols.cols() - 1) = v;
  }
  return prod;
}

// Euclidean volume of the columns (product of singular values).
inline double vol2(const Mat& cols) {
  if (cols.cols() == 0) return 1.0;
  const Vec sv = singular_values(cols);
  double prod = 1.0;
  for (int i = 0; i < cols.cols(); ++i)
    prod *= (i < sv.size()) ? sv[i] : 0.0;
  return prod;
}

// Provable upper bound for sup of the ordered p-volume of images of unit
// vectors drawn from span(B) (B = identity for the unrestricted case):
//   vol_p <= A_out^k vol_2, vol_2 <= prod_i sigma_i(T B) * prod ||c_i||_2
// (Horn's singular value product inequality plus Hadamard), and
// ||c||_2 <= B_in on the unit p-sphere.
inline double dk_upper_bound(const LinearMap& T, const Mat& B, int k) {
  const double A_out = lp_over_l2(T.codomain.p, T.codomain.dim);
  const double B_in = l2_over_lp(T.domain.p, T.domain.dim);
  const Vec sv = singular_values(T.m * B);
  double prod = 1.0;
  for (int i = 0; i < k; ++i) prod *= (i < sv.size()) ? sv[i] : 0.0;
  return std::pow(A_out * B_in, k) * prod;
}

inline std::vector<Vec> p_normalized_columns(const Mat& M, double p) {
  std::vector<Vec> out;
  for (int j = 0; j < M.cols(); ++j) {
    Vec c = M.col(j);
    const double n = pnorm(c, p);
    if (n > 0) out.push_back(c / n);
  }
  return out;
}

// Greedy witness tuple: each vector maximizes the (convex) distance of its
// image to the span of the previous images; exact per step for p in
// {1, 2, inf}.
inline std::vector<Vec> dk_greedy_witness(const LinearMap& T, const Mat& B, int k,
                                          const OptOptions& opt) {
  const double pin = T.domain.p, pout = T.codomain.p;
  std::vector<Vec> vs;
  Mat img(T.codomain.dim, 0);
  for (int i = 0; i < k; ++i) {
    const Subspace W = make_subspace(T.codomain, img);
    Vec v;
    if (pin == 2.0) {
      Mat R = T.m * B;
      if (W.dim() > 0) R -= W.basis * (W.basis.transpose() * R);
      if (pout == 2.0) {
        Eigen::JacobiSVD<Mat> svd(R, Eigen::ComputeFullV);
        v = B * svd.matrixV().col(0);
      } else {
        auto f = [&](const Vec& u) { return dist_to_subspace(T.m * u, W.basis, pout); };
        v = max_convex_over_section(f, B, pin, opt).point;
      }
    } else {
      auto f = [&](const Vec& u) { return dist_to_subspace(T.m * u, W.basis, pout); };
      v = max_convex_over_section(f, B, pin, opt).point;
    }
    if (v.size() == 0) break;
    const double nv = pnorm(v, pin);
    if (nv == 0) break;
    v /= nv;
    vs.push_back(v);
    img.conservativeResize(Eigen::NoChange, img.cols() + 1);
    img.col(img.cols() - 1) = T.m * v;
  }
  return vs;
}

struct NetInfo {
  std::vector<Vec> points;  // on the p-unit sphere
  double delta2 = 0.0;      // Euclidean chord covering radius on that sphere
};

inline NetInfo p_sphere_net(int d, double p, double spacing) {
  if (d > 4)
    throw std::invalid_argument("net mode supports dimension <= 4 only");
  NetInfo info;
  const double A = lp_over_l2(p, d), B = l2_over_lp(p, d);
  const double rg = euclid_net_covering(d, spacing);
  for (const auto& u : euclid_sphere_net(d, spacing)) {
    const double n = pnorm(u, p);
    if (n > 0) info.points.push_back(u / n);
  }
  info.delta2 = rg * (B + A * B * B);
  return info;
}

template <class Fn>
void for_each_tuple(long n, int k, long budget, const Fn& fn) {
  double total = 1;
  for (int i = 0; i < k; ++i) total *= static_cast<double>(n);
  if (total > static_cast<double>(budget))
    throw std::invalid_argument(
        "net mode tuple budget exceeded; coarsen net_spacing or reduce k");
  std::vector<long> idx(k, 0);
  while (true) {
    fn(idx);
    int i = k - 1;
    while (i >= 0 && idx[i] == n - 1) idx[i--] = 0;
    if (i < 0) break;
    ++idx[i];
  }
}

}  // namespace detail

struct DkResult {
  VolumeEnclosure enc;
  std::vector<Vec> witness;  // unit vectors achieving enc.lo
};

// Restricted variant: the sup runs over unit vectors of span(B) with the
// induced norm. B = identity gives D_k itself.
inline DkResult D_k_restricted(const LinearMap& T, const Mat& B, int k, VolumeMode mode,
                               const OptOptions& opt = {}) {
  check_map(T);
  const int kdim = static_cast<int>(B.cols());
  if (k < 1 || k > kdim) throw std::invalid_argument("D_k: k out of range");
  const double pin = T.domain.p, pout = T.codomain.p;

  if (mode == VolumeMode::EuclideanExact) {
    if (pin != 2.0 || pout != 2.0)
      throw std::invalid_argument("euclidean-exact mode requires p = 2");
    const Vec sv = singular_values(T.m * B);
    double prod = 1.0;
    for (int i = 0; i < k; ++i) prod *= (i < sv.size()) ? sv[i] : 0.0;
    DkResult r;
    r.enc = make_enclosure(prod, prod, mode);
    Eigen::JacobiSVD<Mat> svd(T.m * B, Eigen::ComputeFullV);
    for (int i = 0; i < k; ++i) r.witness.push_back(B * svd.matrixV().col(i));
    return r;
  }

  const Bound op = op_norm(T);
  const double hi_horn = detail::dk_upper_bound(T, B, k);
  const double hi = std::min(hi_horn, std::pow(op.hi, k));

  if (mode == VolumeMode::Optimize) {
    // Witnesses: greedy chain and the p-normalized top singular frame.
    std::vector<Vec> greedy = detail::dk_greedy_witness(T, B, k, opt);
    Eigen::JacobiSVD<Mat> svd(T.m * B, Eigen::ComputeFullV);
    std::vector<Vec> sframe;
    for (int i = 0; i < k && i < svd.matrixV().cols(); ++i) {
      Vec v = B * svd.matrixV().col(i);
      const double n = pnorm(v, pin);
      if (n > 0) sframe.push_back(v / n);
    }
    double lo = 0.0;
    std::vector<Vec> bestw;
    if (static_cast<int>(greedy.size()) == k) {
      std::vector<Vec> gimg;
      for (const auto& v : greedy) gimg.push_back(T.m * v);
      lo = detail::vol_k_raw(gimg, T.codomain, true);
      bestw = greedy;
    }
    if (static_cast<int>(sframe.size()) == k) {
      std::vector<Vec> simg;
      for (const auto& v : sframe) simg.push_back(T.m * v);
      const double vs = detail::vol_k_raw(simg, T.codomain, true);
      if (vs > lo || bestw.empty()) {
        lo = vs;
        bestw = sframe;
      }
    }
    DkResult r;
    r.enc = make_enclosure(lo, hi, mode);
    r.witness = bestw;
    return r;
  }

  // Net mode.
  const int d_in = T.domain.dim;
  if (static_cast<int>(B.cols()) != d_in)
    throw std::invalid_argument("net mode supports the unrestricted ball only");
  detail::NetInfo net = detail::p_sphere_net(d_in, pin, opt.net_spacing);
  const long n = static_cast<long>(net.points.size());
  double lo = 0.0, hi2net = 0.0;
  std::vector<Vec> witness;
  detail::for_each_tuple(n, k, opt.net_tuple_budget, [&](const std::vector<long>& idx) {
    std::vector<Vec> img;
    Mat cols(T.codomain.dim, k);
    for (int i = 0; i < k; ++i) {
      img.push_back(T.m * net.points[idx[i]]);
      cols.col(i) = img.back();
    }
    const double vp = detail::vol_k_raw(img, T.codomain, true);
    if (vp > lo) {
      lo = vp;
      witness.clear();
      for (int i = 0; i < k; ++i) witness.push_back(net.points[idx[i]]);
    }
    hi2net = std::max(hi2net, detail::vol2(cols));
  });
  const double s1 = singular_values(T.m)[0];
  const double B_in = l2_over_lp(pin, d_in);
  const double A_out = lp_over_l2(pout, T.codomain.dim);
  const double lipschitz = k * s1 * std::pow(s1 * B_in, k - 1) * net.delta2;
  const double hi_net = std::pow(A_out, k) * (hi2net + lipschitz);
  DkResult r;
  r.enc = make_enclosure(lo, std::min(hi, hi_net), VolumeMode::Net);
  r.witness = witness;
  return r;
}

inline DkResult D_k(const LinearMap& T, int k, VolumeMode mode, const OptOptions& opt = {}) {
  return D_k_restricted(T, Mat::Identity(T.domain.dim, T.domain.dim), k, mode, opt);
}

struct EkResult {
  VolumeEnclosure enc;
  std::vector<Vec> xs;      // unit vectors in the domain
  std::vector<Vec> thetas;  // unit functionals on the codomain
};

namespace detail {

inline Mat cofactor_matrix(const Mat& U) {
  const int k = static_cast<int>(U.rows());
  Mat C(k, k);
  if (k == 1) {
    C(0, 0) = 1.0;
    return C;
  }
  Mat minor(k - 1, k - 1);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      int rr = 0;
      for (int r = 0; r < k; ++r) {
        if (r == i) continue;
        int cc = 0;
        for (int c = 0; c < k; ++c) {
          if (c == j) continue;
          minor(rr, cc++) = U(r, c);
        }
        ++rr;
      }
      C(i, j) = ((i + j) % 2 ? -1.0 : 1.0) * minor.determinant();
    }
  return C;
}

// One alternating-maximization run from the given starting tuple; each block
// update is an exact argmax of the multilinear determinant over the unit
// ball, so |det| is non-decreasing.
inline double ek_alternating(const LinearMap& T, Mat& X, Mat& Th, const OptOptions& opt) {
  const double pin = T.domain.p;
  const double qout = dual_exponent(T.codomain.p);
  const int k = static_cast<int>(X.cols());
  double best = std::abs((Th.transpose() * T.m * X).determinant());
  for (int it = 0; it < opt.max_iters; ++it) {
    for (int j = 0; j < k; ++j) {
      const Mat U = Th.transpose() * T.m * X;
      const Mat C = cofactor_matrix(U);
      const Vec g = T.m.transpose() * (Th * C.col(j));
      if (g.cwiseAbs().maxCoeff() > 0) X.col(j) = sharp(g, pin);
    }
    for (int i = 0; i < k; ++i) {
      const Mat U = Th.transpose() * T.m * X;
      const Mat C = cofactor_matrix(U);
      const Vec h = (T.m * X) * C.row(i).transpose();
      if (h.cwiseAbs().maxCoeff() > 0) Th.col(i) = sharp(h, qout);
    }
    const double det = std::abs((Th.transpose() * T.m * X).determinant());
    if (det <= best * (1.0 + opt.tol)) {
      best = std::max(best, det);
      break;
    }
    best = det;
  }
  return best;
}

}  // namespace detail

inline EkResult E_k(const LinearMap& T, int k, VolumeMode mode, const OptOptions& opt = {}) {
  check_map(T);
  const int din = T.domain.dim, dout = T.codomain.dim;
  if (k < 1 || k > din) throw std::invalid_argument("E_k: k out of range");
  const double pin = T.domain.p, pout = T.codomain.p;
  const double qout = dual_exponent(pout);

  const Vec sv = singular_values(T.m);
  double svprod = 1.0;
  for (int i = 0; i < k; ++i) svprod *= (i < sv.size()) ? sv[i] : 0.0;

  if (mode == VolumeMode::EuclideanExact) {
    if (pin != 2.0 || pout != 2.0)
      throw std::invalid_argument("euclidean-exact mode requires p = 2");
    Eigen::JacobiSVD<Mat> svd(T.m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    EkResult r;
    r.enc = make_enclosure(svprod, svprod, mode);
    for (int i = 0; i < k; ++i) {
      r.xs.push_back(svd.matrixV().col(i));
      r.thetas.push_back(svd.matrixU().col(i));
    }
    return r;
  }

  // det(Th^T T X) <= vol2(Th) vol2(T X) <= (B_qout B_in)^k prod sigma_i by
  // Horn + Hadamard; also bounded by Hadamard row norms.
  const Bound op = op_norm(T);
  const double B_in = l2_over_lp(pin, din);
  const double B_q = l2_over_lp(qout, dout);
  const double hi = std::min(std::pow(B_q * B_in, k) * svprod,
                             std::pow(std::sqrt(static_cast<double>(k)) * op.hi, k));

  if (mode == VolumeMode::Optimize) {
    double lo = 0.0;
    Mat bestX, bestTh;
    Eigen::JacobiSVD<Mat> svd(T.m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    for (int s = 0; s < opt.starts; ++s) {
      Mat X(din, k), Th(dout, k);
      if (s == 0) {
        for (int i = 0; i < k; ++i) {
          Vec x = svd.matrixV().col(i);
          const double n = pnorm(x, pin);
          X.col(i) = n > 0 ? Vec(x / n) : Vec(Vec::Unit(din, i % din));
          const Vec img = T.m * X.col(i);
          if (pnorm(img, pout) > 0)
            Th.col(i) = norming_functional({T.codomain, img}).coords;
          else
            Th.col(i) = Vec::Unit(dout, i % dout);
        }
      } else {
        Rng rng(opt.seed, 1000 + static_cast<std::uint64_t>(s));
        for (int i = 0; i < k; ++i) {
          Vec x(din), th(dout);
          for (int r = 0; r < din; ++r) x[r] = rng.normal();
          for (int r = 0; r < dout; ++r) th[r] = rng.normal();
          const double nx = pnorm(x, pin), nt = pnorm(th, qout);
          X.col(i) = nx > 0 ? Vec(x / nx) : Vec(Vec::Unit(din, i % din));
          Th.col(i) = nt > 0 ? Vec(th / nt) : Vec(Vec::Unit(dout, i % dout));
        }
      }
      const double val = detail::ek_alternating(T, X, Th, opt);
      if (val > lo) {
        lo = val;
        bestX = X;
        bestTh = Th;
      }
    }
    EkResult r;
    r.enc = make_enclosure(lo, hi, mode);
    for (int i = 0; i < k; ++i) {
      if (bestX.cols() == k) r.xs.push_back(bestX.col(i));
      if (bestTh.cols() == k) r.thetas.push_back(bestTh.col(i));
    }
    return r;
  }

  // Net mode: joint net over vector and functional tuples.
  detail::NetInfo netx = detail::p_sphere_net(din, pin, opt.net_spacing);
  detail::NetInfo nett = detail::p_sphere_net(dout, qout, opt.net_spacing);
  const long nx = static_cast<long>(netx.points.size());
  const long nt = static_cast<long>(nett.points.size());
  double total = 1;
  for (int i = 0; i < k; ++i) total *= static_cast<double>(nx) * static_cast<double>(nt);
  if (total > static_cast<double>(opt.net_tuple_budget))
    throw std::invalid_argument(
        "net mode tuple budget exceeded; coarsen net_spacing or reduce k");
  double lo = 0.0;
  std::vector<Vec> bxs, bths;
  std::vector<long> idx(2 * k, 0);
  const std::array<long, 2> lims = {nx, nt};
  while (true) {
    Mat X(din, k), Th(dout, k);
    for (int i = 0; i < k; ++i) {
      X.col(i) = netx.points[idx[i]];
      Th.col(i) = nett.points[idx[k + i]];
    }
    const double det = std::abs((Th.transpose() * T.m * X).determinant());
    if (det > lo) {
      lo = det;
      bxs.clear();
      bths.clear();
      for (int i = 0; i < k; ++i) {
        bxs.push_back(X.col(i));
        bths.push_back(Th.col(i));
      }
    }
    int i = 2 * k - 1;
    while (i >= 0 && idx[i] == lims[i < k ? 0 : 1] - 1) idx[i--] = 0;
    if (i < 0) break;
    ++idx[i];
  }
  // Lipschitz correction: replacing one row or column of the pairing matrix
  // changes the determinant by at most the perturbation norm times the
  // Hadamard bound of the remaining rows.
  const double s1 = sv.size() ? sv[0] : 0.0;
  const double rowbound = std::sqrt(static_cast<double>(k)) *
                          std::max(op.hi, s1 * B_in * B_q);
  const double pert = std::sqrt(static_cast<double>(k)) * s1 *
                      (nett.delta2 * B_in + netx.delta2 * B_q);
  const double corr = k * pert * std::pow(rowbound, k - 1);
  EkResult r;
  r.enc = make_enclosure(lo, std::min(hi, lo + corr), VolumeMode::Net);
  r.xs = bxs;
  r.thetas = bths;
  return r;
}

struct FkResult {
  VolumeEnclosure enc;
  Mat frame;   // orthonormal basis of the best subspace found
  Vec argmin;  // unit vector of that subspace with least expansion
};

inline FkResult F_k(const LinearMap& T, int k, VolumeMode mode, const OptOptions& opt = {}) {
  check_map(T);
  const int din = T.domain.dim, dout = T.codomain.dim;
  if (k < 1 || k > din) throw std::invalid_argument("F_k: k out of range");
  const double pin = T.domain.p, pout = T.codomain.p;
  const Vec sv = singular_values(T.m);
  const double sk = (k <= sv.size()) ? sv[k - 1] : 0.0;

  if (mode == VolumeMode::EuclideanExact) {
    if (pin != 2.0 || pout != 2.0)
      throw std::invalid_argument("euclidean-exact mode requires p = 2");
    Eigen::JacobiSVD<Mat> svd(T.m, Eigen::ComputeFullV);
    FkResult r;
    r.enc = make_enclosure(sk, sk, mode);
    r.frame = svd.matrixV().leftCols(k);
    r.argmin = svd.matrixV().col(k - 1);
    return r;
  }

  // Every k-dimensional V contains a direction expanded by at most sigma_k
  // (Courant-Fischer), transported to l^p by the equivalence constants.
  const Bound op = op_norm(T);
  const double hi = std::min(op.hi, lp_over_l2(pout, dout) * l2_over_lp(pin, din) * sk);

  auto eval_frame = [&](const Mat& frame, double& lo, FkResult& r) {
    if (frame.cols() != k) return;
    const ExpansionBound eb = min_expansion_over_section(T.m, frame, pin, pout);
    if (eb.lo > lo) {
      lo = eb.lo;
      r.frame = frame;
      r.argmin = eb.argmin;
    }
  };

  if (mode == VolumeMode::Optimize) {
    FkResult r;
    double lo = 0.0;
    Eigen::JacobiSVD<Mat> svd(T.m, Eigen::ComputeFullV);
    eval_frame(svd.matrixV().leftCols(k), lo, r);
    // coordinate frames
    if (din <= 8) {
      std::vector<int> idx(k);
      for (int i = 0; i < k; ++i) idx[i] = i;
      while (true) {
        Mat fr = Mat::Zero(din, k);
        for (int i = 0; i < k; ++i) fr(idx[i], i) = 1.0;
        eval_frame(fr, lo, r);
        int i = k - 1;
        while (i >= 0 && idx[i] == din - k + i) --i;
        if (i < 0) break;
        ++idx[i];
        for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
      }
    }
    // greedy chain frame
    {
      std::vector<Vec> g = detail::dk_greedy_witness(
          T, Mat::Identity(din, din), k, opt);
      if (static_cast<int>(g.size()) == k) {
        Mat fr(din, k);
        for (int i = 0; i < k; ++i) fr.col(i) = g[i];
        eval_frame(make_subspace(T.domain, fr).basis, lo, r);
      }
    }
    // seeded random frames
    for (int s = 0; s < opt.starts; ++s) {
      Rng rng(opt.seed, 2000 + static_cast<std::uint64_t>(s));
      Mat fr(din, k);
      for (int j = 0; j < k; ++j)
        for (int i = 0; i < din; ++i) fr(i, j) = rng.normal();
      const Subspace sub = make_subspace(T.domain, fr);
      if (sub.dim() == k) eval_frame(sub.basis, lo, r);
    }
    r.enc = make_enclosure(std::min(lo, hi), hi, mode);
    return r;
  }

  // Net mode: frames from k-tuples of a Euclidean direction net (the
  // Grassmannian is norm-independent); tuples close to orthonormal cover all
  // subspaces within an explicit gap.
  if (din > 4) throw std::invalid_argument("net mode supports dimension <= 4 only");
  const std::vector<Vec> dirs = euclid_sphere_net(din, opt.net_spacing);
  const double rg = euclid_net_covering(din, opt.net_spacing);
  const long n = static_cast<long>(dirs.size());
  FkResult r;
  double lo = 0.0, est_hi = 0.0;
  detail::for_each_tuple(n, k, opt.net_tuple_budget, [&](const std::vector<long>& idx) {
    for (int i = 1; i < k; ++i)
      if (idx[i] <= idx[i - 1]) return;  // unordered tuples are redundant
    Mat fr(din, k);
    for (int i = 0; i < k; ++i) fr.col(i) = dirs[idx[i]];
    Eigen::JacobiSVD<Mat> svd(fr);
    if (svd.singularValues()[k - 1] < 0.5) return;
    const Mat onb = make_subspace(T.domain, fr).basis;
    if (onb.cols() != k) return;
    const ExpansionBound eb = min_expansion_over_section(T.m, onb, pin, pout);
    if (eb.lo > lo) {
      lo = eb.lo;
      r.frame = onb;
      r.argmin = eb.argmin;
    }
    est_hi = std::max(est_hi, eb.estimate);
  });
  // Any V has an orthonormal frame within rg per column of some net tuple
  // with sigma_min >= 1 - sqrt(k) rg >= 0.5, so the Euclidean gap to an
  // enumerated subspace is at most 2 sqrt(k) rg; transport to l^p sections
  // costs 3 A_in B_in.
  const double gap2 = 2.0 * std::sqrt(static_cast<double>(k)) * rg;
  const double corr =
      op.hi * 3.0 * lp_over_l2(pin, din) * l2_over_lp(pin, din) * gap2;
  r.enc = make_enclosure(lo, std::min(hi, est_hi + corr), VolumeMode::Net);
  return r;
}

// d_k T: the ordered volume of the images.
inline double d_kT(const LinearMap& T, const std::vector<Vector>& vs) {
  check_map(T);
  std::vector<Vector> imgs;
  for (const auto& v : vs) {
    if (v.space != T.domain) throw std::invalid_argument("d_kT: vector not in domain");
    imgs.push_back({T.codomain, Vec(T.m * v.coords)});
  }
  return vol_k(imgs);
}

// ---------------------------------------------------------------------------
// Inequality suite
// ---------------------------------------------------------------------------

struct InequalityCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
  std::string note;
};

struct Section2Report {
  std::vector<InequalityCheck> checks;
  bool all_pass = true;
};

namespace detail {

inline void add_check(Section2Report& rep, const std::string& name, double lhs, double rhs,
                      const std::string& note = "") {
  InequalityCheck c;
  c.name = name;
  c.lhs = lhs;
  c.rhs = rhs;
  c.pass = lhs <= rhs + 1e-9 * std::max({1.0, std::abs(lhs), std::abs(rhs)});
  c.note = note;
  rep.checks.push_back(c);
  rep.all_pass = rep.all_pass && c.pass;
}

inline double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

}  // namespace detail

// Evaluates the volume-growth inequality suite in enclosure-consistent form
// (certified lower bound of the left side vs provable upper bound of the
// right side): submultiplicativity, the expansion lower bound, the
// determinant/volume comparisons for the map and its adjoint, the E/F
// recursion with its chained product form, expansion monotonicity, the
// restricted-volume factorization through a finite-codimension subspace, and
// the adjoint operator-norm identity.
inline Section2Report verify_section2(const LinearMap& T, const LinearMap& S, const Subspace& V,
                                      int kmax, const OptOptions& opt = {}) {
  check_map(T);
  check_map(S);
  if (V.space != T.domain) throw std::invalid_argument("verify_section2: V not in domain of T");
  Section2Report rep;
  const VolumeMode mode = VolumeMode::Optimize;
  const LinearMap Tstar = dual_map(T);
  const bool composable = (S.domain == T.codomain);
  const int m = T.domain.dim - V.dim();

  std::vector<VolumeEnclosure> DT(kmax + 1), DS(kmax + 1), DST(kmax + 1), DTs(kmax + 1),
      ET(kmax + 1), ETs(kmax + 1), FT(kmax + 1);
  DT[0] = DS[0] = DST[0] = DTs[0] = ET[0] = ETs[0] = FT[0] = {1.0, 1.0, mode};
  LinearMap ST;
  if (composable) ST = compose(S, T);
  for (int k = 1; k <= kmax; ++k) {
    DT[k] = D_k(T, k, mode, opt).enc;
    DTs[k] = D_k(Tstar, k, mode, opt).enc;
    ET[k] = E_k(T, k, mode, opt).enc;
    ETs[k] = E_k(Tstar, k, mode, opt).enc;
    FT[k] = F_k(T, k, mode, opt).enc;
    if (composable) {
      DS[k] = D_k(S, k, mode, opt).enc;
      DST[k] = D_k(ST, k, mode, opt).enc;
    }
  }

  for (int k = 1; k <= kmax; ++k) {
    const std::string kk = " k=" + std::to_string(k);
    if (composable)
      detail::add_check(rep, "submultiplicativity" + kk, DST[k].lo, DS[k].hi * DT[k].hi);
    detail::add_check(rep, "expansion_lower_bound" + kk, std::pow(FT[k].lo, k), DT[k].hi);
    detail::add_check(rep, "volume_vs_det" + kk, DT[k].lo, ET[k].hi);
    detail::add_check(rep, "det_vs_volume_factorial" + kk, ET[k].lo,
                      detail::factorial(k) * DT[k].hi);
    detail::add_check(rep, "adjoint_volume_vs_det" + kk, DTs[k].lo, ET[k].hi);
    detail::add_check(rep, "det_vs_adjoint_volume_factorial" + kk, ET[k].lo,
                      detail::factorial(k) * DTs[k].hi);
    if (k >= 2) {
      detail::add_check(rep, "det_recursion_lower" + kk, ET[k - 1].lo * FT[k].lo, ET[k].hi);
      detail::add_check(rep, "det_recursion_upper" + kk, ET[k].lo,
                        k * std::pow(2.0, k - 1) * ET[k - 1].hi * FT[k].hi);
      detail::add_check(rep, "expansion_monotone" + kk, FT[k].lo, FT[k - 1].hi);
    }
    double prodFlo = 1.0, prodFhi = 1.0;
    for (int i = 1; i <= k; ++i) {
      prodFlo *= FT[i].lo;
      prodFhi *= FT[i].hi;
    }
    detail::add_check(rep, "expansion_product_lower" + kk, prodFlo, ET[k].hi);
    detail::add_check(rep, "expansion_product_upper" + kk, ET[k].lo,
                      detail::factorial(k) * std::pow(2.0, 0.5 * k * (k - 1)) * prodFhi);
    if (m >= 0 && k > m && (k - m) <= V.dim()) {
      const VolumeEnclosure Drest = D_k_restricted(T, V.basis, k - m, mode, opt).enc;
      const double c = std::pow(2.0 * (std::sqrt(static_cast<double>(m)) + 2.0), k) *
                       detail::factorial(k);
      detail::add_check(rep, "restricted_volume_factor" + kk, DT[k].lo,
                        c * DT[m].hi * Drest.hi,
                        "codim=" + std::to_string(m));
    }
  }
  detail::add_check(rep, "operator_norm_adjoint_lower", DT[1].lo, DTs[1].hi);
  detail::add_check(rep, "operator_norm_adjoint_upper", DTs[1].lo, DT[1].hi);
  return rep;
}

}  // namespace oseledets
