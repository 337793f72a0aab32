#pragma once

// Greedy construction of consistent sequences for a single operator T: unit
// vectors x_k and unit functionals theta_k such that the pairing matrix
// (theta_i(T x_j)) is upper triangular with near-maximal diagonal, giving
// certified determinant and uniform-expansion lower bounds at every order k.
//
// Step k: take the best frame V_k found by the F_k optimizer (so every unit
// v in V_k has ||Tv|| >= F_k.lo, certified); pick x_k in V_k whose image is a
// Gohberg-Krein point of T(V_k) relative to the previous image span; take
// theta_k as the distance functional of T x_k to that span. The classical
// 2^-k and 4^-k constants then hold with large slack.

#include "volume.hpp"

namespace oseledets {

struct ConsistentSeq {
  std::vector<Vector> xs;          // unit vectors in the domain
  std::vector<Functional> thetas;  // unit functionals on the codomain
  std::vector<double> dets;            // |det (theta_i(T x_j))|, per order k
  std::vector<double> expansion_certs; // certified inf ||Tx|| over unit sphere of span(x_1..x_k)
  std::vector<double> f_lo;            // certified F_k lower bounds used at each step
  bool degenerate = false;  // terminated early because F_k collapsed
  int built = 0;            // number of completed orders
};

namespace detail {

inline Mat pairing_matrix(const LinearMap& T, const ConsistentSeq& seq, int k) {
  Mat U(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      U(i, j) = seq.thetas[i].coords.dot(T.m * seq.xs[j].coords);
  return U;
}

}  // namespace detail

inline ConsistentSeq build_consistent(const LinearMap& T, int kmax,
                                      const OptOptions& opt = {}) {
  check_map(T);
  if (kmax < 1 || kmax > T.domain.dim)
    throw std::invalid_argument("build_consistent: kmax out of range");
  ConsistentSeq seq;
  const double scale = op_norm(T).hi;
  Mat img(T.codomain.dim, 0);  // unit directions of the images T x_1 .. T x_{k-1}
  for (int k = 1; k <= kmax; ++k) {
    const FkResult fk = F_k(T, k, VolumeMode::Optimize, opt);
    // The certified expansion bound is the degeneracy gate: relative to the
    // operator scale, anything below ~1e-13 cannot be resolved in doubles.
    if (!(fk.enc.lo > std::max(1e-300, 1e-13 * scale)) || fk.frame.cols() != k) {
      seq.degenerate = true;
      break;
    }
    seq.f_lo.push_back(fk.enc.lo);

    const Subspace prev_img = make_subspace(T.codomain, img);
    // Orthonormalize the image frame without a rank cut: the certified F_k
    // bound already guarantees full rank, while the singular values of the
    // image may legitimately spread past any fixed tolerance.
    Eigen::HouseholderQR<Mat> img_qr(T.m * fk.frame);
    const Mat img_q = img_qr.householderQ() * Mat::Identity(T.codomain.dim, k);
    bool collapsed = false;
    for (int i = 0; i < k; ++i)
      if (img_qr.matrixQR()(i, i) == 0.0) collapsed = true;
    if (collapsed) {
      seq.degenerate = true;
      seq.f_lo.pop_back();
      break;
    }
    const Subspace imgV{T.codomain, img_q};
    const RieszPoint rp = riesz_point(imgV, prev_img, opt);
    // Pull the Gohberg-Krein point back through T restricted to the frame.
    const Vec c = (T.m * fk.frame).colPivHouseholderQr().solve(rp.point.coords);
    Vec x = fk.frame * c;
    const double nx = pnorm(x, T.domain.p);
    if (nx <= 0) {
      seq.degenerate = true;
      seq.f_lo.pop_back();
      break;
    }
    x /= nx;
    const Vec tx = T.m * x;
    const Functional theta = distance_functional({T.codomain, tx}, prev_img);

    seq.xs.push_back({T.domain, x});
    seq.thetas.push_back(theta);
    img.conservativeResize(Eigen::NoChange, img.cols() + 1);
    img.col(img.cols() - 1) = tx / tx.norm();  // direction only: keeps the span rank-stable

    seq.dets.push_back(std::abs(detail::pairing_matrix(T, seq, k).determinant()));
    Mat xcols(T.domain.dim, k);
    for (int j = 0; j < k; ++j) xcols.col(j) = seq.xs[j].coords;
    const Subspace spanx = make_subspace(T.domain, xcols);
    if (spanx.dim() != k) {
      // x_k fell into the span of the previous picks; the sequence cannot be
      // extended consistently.
      seq.xs.pop_back();
      seq.thetas.pop_back();
      seq.dets.pop_back();
      seq.f_lo.pop_back();
      seq.degenerate = true;
      break;
    }
    seq.expansion_certs.push_back(
        min_expansion_over_section(T.m, spanx.basis, T.domain.p, T.codomain.p).lo);
    seq.built = k;
  }
  return seq;
}

struct CertifyReport {
  std::vector<InequalityCheck> checks;
  bool all_pass = true;
};

namespace detail {

inline void cert_check(CertifyReport& rep, const std::string& name, double lhs, double rhs,
                       bool is_le) {
  InequalityCheck c;
  c.name = name;
  c.lhs = lhs;
  c.rhs = rhs;
  const double tol = 1e-9 * std::max({1.0, std::abs(lhs), std::abs(rhs)});
  c.pass = is_le ? (lhs <= rhs + tol) : (lhs >= rhs - tol);
  rep.checks.push_back(c);
  rep.all_pass = rep.all_pass && c.pass;
}

}  // namespace detail

// Recomputes every certificate of a built sequence from scratch: determinant
// values, the triangular structure of the pairing, unit norms, and the
// determinant / expansion lower bounds against the recorded F_k values.
inline CertifyReport certify_consistent(const LinearMap& T, const ConsistentSeq& seq,
                                        const OptOptions& opt = {}) {
  check_map(T);
  CertifyReport rep;
  const Bound op = op_norm(T);
  for (int k = 1; k <= seq.built; ++k) {
    const std::string kk = " k=" + std::to_string(k);
    const Mat U = detail::pairing_matrix(T, seq, k);
    const double det = std::abs(U.determinant());
    detail::cert_check(rep, "det_recompute_lo" + kk, std::abs(det - seq.dets[k - 1]),
                       1e-10 * std::max(1.0, det), true);
    double bound = 1.0;
    for (int i = 0; i < k; ++i) bound *= seq.f_lo[i];
    bound /= std::pow(2.0, k);
    detail::cert_check(rep, "det_lower_bound" + kk, det, bound, false);

    // Independent re-minimization of the expansion over span(x_1..x_k).
    Mat xcols(T.domain.dim, k);
    for (int j = 0; j < k; ++j) xcols.col(j) = seq.xs[j].coords;
    const Subspace spanx = make_subspace(T.domain, xcols);
    if (spanx.dim() != k) {
      detail::cert_check(rep, "independent_span" + kk, 0.0, 1.0, false);
      continue;
    }
    const ExpansionBound eb =
        min_expansion_over_section(T.m, spanx.basis, T.domain.p, T.codomain.p);
    detail::cert_check(rep, "expansion_recompute" + kk, eb.estimate,
                       seq.expansion_certs[k - 1] - 1e-9 * std::max(1.0, eb.estimate), false);
    detail::cert_check(rep, "expansion_lower_bound" + kk, eb.estimate,
                       seq.f_lo[k - 1] / std::pow(4.0, k), false);

    const int i = k - 1;
    detail::cert_check(rep, "x_unit" + kk, std::abs(norm(seq.xs[i]) - 1.0), 1e-10, true);
    detail::cert_check(rep, "theta_unit" + kk, std::abs(dual_norm(seq.thetas[i]) - 1.0), 1e-10,
                       true);
    for (int j = 0; j < i; ++j)
      detail::cert_check(rep,
                         "theta_vanishes k=" + std::to_string(k) + " j=" + std::to_string(j + 1),
                         std::abs(seq.thetas[i].coords.dot(T.m * seq.xs[j].coords)),
                         1e-10 * std::max(1.0, op.hi), true);
  }
  (void)opt;
  return rep;
}

}  // namespace oseledets
