#pragma once

// Finite-dimensional l^p spaces: norms, dual norms, norming functionals,
// subspaces with orthonormalized bases, annihilators and intersections.
// All bases are kept Euclid-orthonormal regardless of p; the exponent only
// enters through norms and distances.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace oseledets {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double infinity = std::numeric_limits<double>::infinity();

// Relative rank cutoff for subspace bases and intersections.
inline constexpr double rank_tolerance = 1e-9;

struct NormedSpace {
  int dim = 0;
  double p = 2.0;

  bool operator==(const NormedSpace& o) const { return dim == o.dim && p == o.p; }
  bool operator!=(const NormedSpace& o) const { return !(*this == o); }
};

inline void check_space(const NormedSpace& s) {
  if (s.dim < 1) throw std::invalid_argument("NormedSpace: dim must be >= 1");
  if (!(s.p >= 1.0)) throw std::invalid_argument("NormedSpace: p must be >= 1");
}

inline double dual_exponent(double p) {
  if (p == 1.0) return infinity;
  if (std::isinf(p)) return 1.0;
  return p / (p - 1.0);
}

inline NormedSpace dual_space(const NormedSpace& s) { return {s.dim, dual_exponent(s.p)}; }

// l^p norm with a scale guard so large/small entries do not overflow the
// intermediate powers.
inline double pnorm(const Vec& x, double p) {
  if (x.size() == 0) return 0.0;
  const double m = x.cwiseAbs().maxCoeff();
  if (m == 0.0 || std::isinf(p)) return m;
  if (p == 1.0) return x.cwiseAbs().sum();
  if (p == 2.0) return x.norm();
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) s += std::pow(std::abs(x[i]) / m, p);
  return m * std::pow(s, 1.0 / p);
}

struct Vector {
  NormedSpace space;
  Vec coords;
};

// Coefficients of a functional in the standard dual basis; its norm is the
// dual exponent's norm.
struct Functional {
  NormedSpace space;  // the primal space it acts on
  Vec coords;
};

inline double norm(const Vector& x) { return pnorm(x.coords, x.space.p); }
inline double dual_norm(const Functional& f) { return pnorm(f.coords, dual_exponent(f.space.p)); }
inline double apply(const Functional& f, const Vector& x) { return f.coords.dot(x.coords); }

inline double sgn(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

// theta with dual norm 1 and theta(x) = ||x||_p. For p = infinity ties break
// to the lowest index so the result is deterministic.
inline Functional norming_functional(const Vector& x) {
  const double p = x.space.p;
  const double nx = norm(x);
  if (nx == 0.0) throw std::invalid_argument("norming_functional: zero vector");
  Vec th = Vec::Zero(x.coords.size());
  if (std::isinf(p)) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < x.coords.size(); ++i)
      if (std::abs(x.coords[i]) > std::abs(x.coords[best])) best = i;
    th[best] = sgn(x.coords[best]);
  } else if (p == 1.0) {
    for (Eigen::Index i = 0; i < x.coords.size(); ++i) th[i] = sgn(x.coords[i]);
  } else {
    for (Eigen::Index i = 0; i < x.coords.size(); ++i)
      th[i] = sgn(x.coords[i]) * std::pow(std::abs(x.coords[i]) / nx, p - 1.0);
  }
  return {x.space, th};
}

// argmax of g.x over the unit sphere of l^p; the maximum value is the dual
// norm of g. Deterministic tie-breaks mirror norming_functional.
inline Vec sharp(const Vec& g, double p) {
  const Eigen::Index d = g.size();
  Vec x = Vec::Zero(d);
  if (g.cwiseAbs().maxCoeff() == 0.0) {
    x[0] = 1.0;  // any unit vector attains the (zero) maximum
    return x;
  }
  if (p == 1.0) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < d; ++i)
      if (std::abs(g[i]) > std::abs(g[best])) best = i;
    x[best] = g[best] >= 0 ? 1.0 : -1.0;
    return x;
  }
  if (std::isinf(p)) {
    for (Eigen::Index i = 0; i < d; ++i) x[i] = g[i] >= 0 ? 1.0 : -1.0;
    return x;
  }
  const double q = dual_exponent(p);
  const double m = g.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < d; ++i) x[i] = sgn(g[i]) * std::pow(std::abs(g[i]) / m, q - 1.0);
  x /= pnorm(x, p);
  return x;
}

// A subspace stored as a Euclid-orthonormal basis (d x k). k = 0 is the zero
// subspace.
struct Subspace {
  NormedSpace space;
  Mat basis;

  int dim() const { return static_cast<int>(basis.cols()); }
  int ambient_dim() const { return space.dim; }
};

struct GrassmannPoint {
  Subspace subspace;
  int codim = 0;
};

inline GrassmannPoint make_grassmann_point(const Subspace& s) {
  return {s, s.ambient_dim() - s.dim()};
}

// Orthonormalize a spanning set, dropping directions below the relative rank
// tolerance.
inline Subspace make_subspace(const NormedSpace& space, const Mat& spanning) {
  check_space(space);
  if (spanning.cols() == 0) return {space, Mat::Zero(space.dim, 0)};
  if (spanning.rows() != space.dim)
    throw std::invalid_argument("make_subspace: spanning set rows != space dim");
  Eigen::JacobiSVD<Mat> svd(spanning, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  const double cut = sv.size() ? sv[0] * rank_tolerance : 0.0;
  int rank = 0;
  while (rank < sv.size() && sv[rank] > cut && sv[rank] > 0.0) ++rank;
  return {space, svd.matrixU().leftCols(rank)};
}

inline Subspace full_subspace(const NormedSpace& space) {
  return {space, Mat::Identity(space.dim, space.dim)};
}

inline Subspace zero_subspace(const NormedSpace& space) {
  return {space, Mat::Zero(space.dim, 0)};
}

// Functionals vanishing on W, i.e. the Euclidean orthocomplement of the basis,
// living in the dual space. An involution: annihilator(annihilator(W)) = W.
inline Subspace annihilator(const Subspace& W) {
  const int d = W.ambient_dim();
  const int k = W.dim();
  const NormedSpace dual = dual_space(W.space);
  if (k == 0) return full_subspace(dual);
  if (k == d) return zero_subspace(dual);
  Eigen::JacobiSVD<Mat> svd(W.basis, Eigen::ComputeFullU);
  return {dual, svd.matrixU().rightCols(d - k)};
}

// U ∩ W via the null space of [B_U, -B_W]; rank decisions use the relative
// tolerance of the stacked matrix.
inline Subspace intersect(const Subspace& U, const Subspace& W) {
  if (U.space != W.space) throw std::invalid_argument("intersect: ambient space mismatch");
  const int ku = U.dim(), kw = W.dim();
  if (ku == 0 || kw == 0) return zero_subspace(U.space);
  Mat M(U.ambient_dim(), ku + kw);
  M.leftCols(ku) = U.basis;
  M.rightCols(kw) = -W.basis;
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double cut = sv[0] * rank_tolerance;
  std::vector<int> null_idx;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] <= cut) null_idx.push_back(i);
  // When cols > rows the trailing columns of V are exact null directions.
  for (int i = static_cast<int>(sv.size()); i < ku + kw; ++i) null_idx.push_back(i);
  if (null_idx.empty()) return zero_subspace(U.space);
  Mat gens(U.ambient_dim(), null_idx.size());
  for (size_t j = 0; j < null_idx.size(); ++j)
    gens.col(j) = U.basis * svd.matrixV().col(null_idx[j]).head(ku);
  return make_subspace(U.space, gens);
}

// Euclidean orthogonal projector onto the subspace.
inline Mat projector(const Subspace& W) {
  if (W.dim() == 0) return Mat::Zero(W.ambient_dim(), W.ambient_dim());
  return W.basis * W.basis.transpose();
}

// Norm-equivalence constants between l^p and l^2 in dimension d:
//   ||x||_p <= lp_over_l2(p,d) * ||x||_2   and   ||x||_2 <= l2_over_lp(p,d) * ||x||_p.
inline double lp_over_l2(double p, int d) {
  if (std::isinf(p) || p >= 2.0) return 1.0;
  return std::pow(static_cast<double>(d), 1.0 / p - 0.5);
}
inline double l2_over_lp(double p, int d) {
  if (p <= 2.0) return 1.0;
  if (std::isinf(p)) return std::sqrt(static_cast<double>(d));
  return std::pow(static_cast<double>(d), 0.5 - 1.0 / p);
}

}  // namespace oseledets
