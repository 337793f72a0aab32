#pragma once

// Oseledets data recovered constructively from finite windows: grouped
// exponents, approximate slow spaces cut out by consistent-sequence
// functionals, Cauchy-rate filtration estimates, the splitting obtained by
// intersecting with the dual (reversed-time) filtration, and an independent
// verification of the reduced cocycle on an invariant subspace.

#include "cocycle.hpp"
#include "consistent.hpp"

namespace oseledets {

struct SpectrumGroups {
  std::vector<double> lambda;  // distinct exponents, nonincreasing
  std::vector<int> mult;       // multiplicities
  std::vector<int> dcum;       // cumulative dimensions d_1 <= d_2 <= ...
};

// Clusters the increments mu_1 >= mu_2 >= ... into groups of equal exponents:
// a new group opens where consecutive values differ by more than the gap
// threshold. Divergent (-inf) increments always form their own final group.
inline SpectrumGroups group_exponents(const std::vector<double>& mu,
                                      double gap_threshold = 0.05) {
  if (mu.empty()) throw std::invalid_argument("group_exponents: no increments given");
  if (gap_threshold < 0) throw std::invalid_argument("group_exponents: negative gap threshold");
  SpectrumGroups g;
  size_t i = 0;
  while (i < mu.size()) {
    size_t j = i + 1;
    if (mu[i] > -infinity) {
      while (j < mu.size() && mu[j] > -infinity && mu[i] - mu[j] <= gap_threshold) ++j;
    } else {
      while (j < mu.size() && !(mu[j] > -infinity)) ++j;
    }
    double sum = 0.0;
    for (size_t t = i; t < j; ++t) sum += mu[t];
    g.lambda.push_back(mu[i] > -infinity ? sum / static_cast<double>(j - i) : -infinity);
    g.mult.push_back(static_cast<int>(j - i));
    g.dcum.push_back((g.dcum.empty() ? 0 : g.dcum.back()) + static_cast<int>(j - i));
    i = j;
  }
  return g;
}

// Approximate slow space of a window product: the kernel of the first `codim`
// consistent-sequence functionals composed with the product. Rows are scale
// normalized before the kernel extraction since their magnitudes spread by
// factors e^{n (lambda_1 - lambda_codim)}.
inline Subspace slow_space(const LinearMap& T, const ConsistentSeq& seq, int codim) {
  check_map(T);
  if (codim < 1 || codim > T.domain.dim)
    throw std::invalid_argument("slow_space: codimension out of range");
  if (codim > seq.built)
    throw std::runtime_error(
        "slow_space: consistent sequence degenerated (rank collapse) before the requested level");
  Mat W(codim, T.domain.dim);
  for (int i = 0; i < codim; ++i) {
    Vec row = T.m.transpose() * seq.thetas[i].coords;
    const double r = row.norm();
    if (r > 0) row /= r;
    W.row(i) = row.transpose();
  }
  Eigen::JacobiSVD<Mat> svd(W, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double cut = sv.size() ? sv[0] * rank_tolerance : 0.0;
  std::vector<int> null_idx;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] <= cut) null_idx.push_back(i);
  for (int i = static_cast<int>(sv.size()); i < T.domain.dim; ++i) null_idx.push_back(i);
  Mat basis(T.domain.dim, null_idx.size());
  for (size_t j = 0; j < null_idx.size(); ++j) basis.col(j) = svd.matrixV().col(null_idx[j]);
  return make_subspace(T.domain, basis);
}

inline Subspace approximate_slow_space(const LinearMap& T, int codim,
                                       const OptOptions& opt = {}) {
  const ConsistentSeq seq = build_consistent(T, codim, opt);
  return slow_space(T, seq, codim);
}

// Defect of one-step equivariance: the farthest point of the unit sphere of
// A(V) from the candidate space at the shifted anchor.
inline double equivariance_residual(const NormedSpace& space, const Mat& A, const Subspace& V,
                                    const Subspace& V_next, const OptOptions& opt = {}) {
  check_space(space);
  if (V.space != space || V_next.space != space)
    throw std::invalid_argument("equivariance_residual: mismatched spaces");
  const Subspace image = make_subspace(space, A * V.basis);
  if (image.dim() == 0) return 0.0;
  if (space.p == 2.0) {
    const Mat res = (Mat::Identity(space.dim, space.dim) - projector(V_next)) * image.basis;
    return singular_values(res)[0];
  }
  const auto f = [&](const Vec& y) { return dist_to_subspace(y, V_next.basis, space.p); };
  return max_convex_over_section(f, image.basis, space.p, opt).value;
}

struct FiltrationLevel {
  int level = 0;  // 2-based: level l approximates the slow space below group l-1
  int codim = 0;
  std::vector<int> ns;                 // horizons where this level was resolvable
  std::vector<Subspace> spaces;        // one per resolved horizon
  std::vector<double> cauchy;          // consecutive grassmann distances
  std::vector<double> equiv_residual;  // one-step equivariance defect per horizon
  double cauchy_slope = 0.0;           // regression slope of log distance against n
  Subspace space;                      // declared level: the largest resolved horizon
};

struct Filtration {
  SpectrumGroups groups;
  std::vector<int> n_grid;
  std::vector<FiltrationLevel> levels;  // empty when only one exponent group exists
};

struct FiltrationParams {
  std::vector<int> n_grid;
  OptOptions opt;
};

// Builds every filtration level from one consistent sequence per horizon, so
// the nesting V_{l+1} subset V_l is inherited from the shared functional
// prefix. Equivariance is measured against the same construction anchored one
// step later. Deeper levels converge faster but also hit the floating-point
// rank floor sooner; each level keeps the horizons where its codimension was
// still resolvable and declares the space at the largest of them.
inline Filtration filtration(const Generator& gen, const Trajectory& traj,
                             const SpectrumGroups& groups, const FiltrationParams& par) {
  check_generator(gen, static_cast<int>(gen.mats.size()));
  if (par.n_grid.empty()) throw std::invalid_argument("filtration: empty n-grid");
  const int r = static_cast<int>(groups.lambda.size());
  Filtration fil;
  fil.groups = groups;
  fil.n_grid = par.n_grid;
  if (r <= 1) return fil;  // single group: the filtration is trivial, V_1 = X
  const int G = static_cast<int>(par.n_grid.size());
  const int kneed = groups.dcum[r - 2];  // largest codimension used
  if (kneed >= gen.space.dim)
    throw std::invalid_argument("filtration: exponent groups exhaust the space dimension");

  // Consistent sequences at the anchor and one step later, per horizon.
  std::vector<std::vector<Subspace>> V(r - 1, std::vector<Subspace>(G));
  std::vector<std::vector<Subspace>> Vnext(r - 1, std::vector<Subspace>(G));
  std::vector<int> depth(G, 0);  // orders resolved at both anchors per horizon
  std::vector<int> depth_next(G, 0);
  parallel_for(2 * G, [&](int idx) {
    const int gi = idx % G;
    const long start = idx / G;  // 0: anchor, 1: shifted anchor
    const ScaledProduct P = cocycle_product(gen, traj, start, par.n_grid[gi]);
    const LinearMap T{gen.space, gen.space, P.m};
    const ConsistentSeq seq = build_consistent(T, kneed, par.opt);
    (start == 0 ? depth : depth_next)[gi] = seq.built;
    for (int l = 2; l <= r; ++l) {
      const int codim = groups.dcum[l - 2];
      if (codim > seq.built) continue;
      Subspace s = slow_space(T, seq, codim);
      (start == 0 ? V : Vnext)[l - 2][gi] = std::move(s);
    }
  });

  for (int l = 2; l <= r; ++l) {
    FiltrationLevel lev;
    lev.level = l;
    lev.codim = groups.dcum[l - 2];
    for (int gi = 0; gi < G; ++gi) {
      if (lev.codim > std::min(depth[gi], depth_next[gi])) continue;
      lev.ns.push_back(par.n_grid[gi]);
      lev.spaces.push_back(V[l - 2][gi]);
      lev.equiv_residual.push_back(equivariance_residual(
          gen.space, gen.mats[traj.symbol(0)], V[l - 2][gi], Vnext[l - 2][gi], par.opt));
    }
    if (lev.spaces.empty())
      throw std::runtime_error("filtration: rank collapse at every horizon for level " +
                               std::to_string(l));
    for (size_t i = 0; i + 1 < lev.spaces.size(); ++i)
      lev.cauchy.push_back(grassmann_distance(lev.spaces[i], lev.spaces[i + 1], par.opt));
    std::vector<double> xs, ys;
    for (size_t i = 0; i + 1 < lev.spaces.size(); ++i)
      if (lev.cauchy[i] > 1e-14) {
        xs.push_back(lev.ns[i]);
        ys.push_back(std::log(lev.cauchy[i]));
      }
    lev.cauchy_slope = xs.size() >= 2 ? detail::ols_fit(xs, ys).slope : -infinity;
    lev.space = lev.spaces.back();
    fil.levels.push_back(std::move(lev));
  }
  return fil;
}

struct SplittingBlock {
  double lambda = 0.0;
  int mult = 0;
  Subspace space;
  double forward_rate = 0.0;  // growth rate of a basis direction along the trajectory
};

struct Splitting {
  std::vector<SplittingBlock> blocks;
  Subspace tail;  // slow directions below the last resolved group
  std::vector<double> level_residuals;  // grassmann distance of Z_l + V_{l+1} to V_l
  double direct_sum_residual = 0.0;
  double stack_min_sv = 0.0;  // smallest singular value of all block bases stacked
};

struct SplittingParams {
  std::vector<int> n_grid;
  OptOptions opt;
};

// Oseledets blocks at the anchor of a two-sided trajectory: the fast spaces
// Y_l are preannihilators of the dual (reversed-time) filtration, and each
// block is Z_l = Y_{l+1} intersect V_l. Every block and residual is computed
// at the largest horizon.
inline Splitting splitting(const Generator& gen, const Trajectory& traj,
                           const SpectrumGroups& groups, const SplittingParams& par) {
  check_generator(gen, static_cast<int>(gen.mats.size()));
  if (par.n_grid.empty()) throw std::invalid_argument("splitting: empty n-grid");
  if (!traj.two_sided)
    throw std::invalid_argument("splitting: the dual filtration needs a two-sided trajectory");
  const int r = static_cast<int>(groups.lambda.size());
  const int d = gen.space.dim;
  const int n = par.n_grid.back();

  const auto [dgen, dtraj] = dual_system(gen, traj);

  // Primal slow spaces V_2..V_{r+1} (V_1 is the whole space) and dual slow
  // spaces at matching codimensions, all at the largest horizon.
  const ScaledProduct P = cocycle_product(gen, traj, 0, n);
  const LinearMap T{gen.space, gen.space, P.m};
  const ScaledProduct DP = cocycle_product(dgen, dtraj, 0, n);
  const LinearMap DT{dgen.space, dgen.space, DP.m};

  if (groups.dcum.back() > d)
    throw std::invalid_argument("splitting: group dimensions exceed the space dimension");
  int need = 0;  // largest slow-space codimension used on either side
  for (int l = 2; l <= r + 1; ++l) {
    const int c = groups.dcum[l - 2];
    if (c < d) need = std::max(need, c);
  }
  const ConsistentSeq seq = need >= 1 ? build_consistent(T, need, par.opt) : ConsistentSeq{};
  const ConsistentSeq dseq = need >= 1 ? build_consistent(DT, need, par.opt) : ConsistentSeq{};

  std::vector<Subspace> V(r + 2);  // V[l], l = 1..r+1
  V[1] = full_subspace(gen.space);
  for (int l = 2; l <= r; ++l) V[l] = slow_space(T, seq, groups.dcum[l - 2]);
  V[r + 1] = groups.dcum[r - 1] < d ? slow_space(T, seq, groups.dcum[r - 1])
                                    : zero_subspace(gen.space);

  std::vector<Subspace> Y(r + 2);  // fast spaces: Y[l] has dimension dcum[l-2]
  Y[1] = zero_subspace(gen.space);
  for (int l = 2; l <= r + 1; ++l) {
    const int codim = groups.dcum[l - 2];
    if (codim >= d) {
      Y[l] = full_subspace(gen.space);
    } else {
      Y[l] = annihilator(slow_space(DT, dseq, codim));
    }
  }

  Splitting sp;
  sp.tail = V[r + 1];
  Mat stacked(d, 0);
  for (int l = 1; l <= r; ++l) {
    SplittingBlock blk;
    blk.lambda = groups.lambda[l - 1];
    blk.mult = groups.mult[l - 1];
    blk.space = intersect(Y[l + 1], V[l]);
    if (blk.space.dim() > 0)
      blk.forward_rate =
          growth_rate(gen, traj, blk.space.basis.col(0), par.n_grid).rate;
    const Mat joint_gens = [&] {
      Mat g(d, blk.space.dim() + V[l + 1].dim());
      g.leftCols(blk.space.dim()) = blk.space.basis;
      g.rightCols(V[l + 1].dim()) = V[l + 1].basis;
      return g;
    }();
    const Subspace joint = make_subspace(gen.space, joint_gens);
    sp.level_residuals.push_back(grassmann_distance(joint, V[l], par.opt));
    stacked.conservativeResize(Eigen::NoChange, stacked.cols() + blk.space.dim());
    stacked.rightCols(blk.space.dim()) = blk.space.basis;
    sp.blocks.push_back(std::move(blk));
  }
  if (sp.tail.dim() > 0) {
    stacked.conservativeResize(Eigen::NoChange, stacked.cols() + sp.tail.dim());
    stacked.rightCols(sp.tail.dim()) = sp.tail.basis;
  }
  sp.direct_sum_residual =
      sp.level_residuals.empty()
          ? 0.0
          : *std::max_element(sp.level_residuals.begin(), sp.level_residuals.end());
  if (stacked.cols() == d) {
    const Vec sv = singular_values(stacked);
    sp.stack_min_sv = sv[sv.size() - 1];
  } else {
    sp.stack_min_sv = 0.0;  // dimension mismatch: the blocks cannot span
  }
  return sp;
}

struct ReducedCocycleReport {
  std::vector<int> n_grid;
  std::vector<double> delta, mu;       // exponent estimates of the restricted cocycle
  std::vector<double> equiv_residual;  // running validity bound at each grid point
  double quotient_rate = 0.0;          // growth in X / V of the worst canonical direction
  bool quotient_minus_inf = false;
};

// Verifies an (approximately) invariant series of subspaces by running the
// cocycle in a moving orthonormal frame: each image frame is projected onto
// the next space of the series before re-orthonormalization, and the
// triangular factors form the reduced cocycle. The projection is essential,
// not cosmetic: a slow space is exponentially unstable under plain forward
// transport (rounding noise along fast directions doubles per step), while
// the projected transport is self-correcting. The discarded normal component
// is reported as the equivariance residual, the validity bound of the whole
// construction. Exponents are estimated exactly like the full spectrum
// (direct route plus underflow-free diagonal route); the quotient rate tracks
// distances to the series, a witness for the complementary exponents.
inline ReducedCocycleReport verify_reduced_cocycle(const Generator& gen, const Trajectory& traj,
                                                   const std::vector<Subspace>& V_series,
                                                   const std::vector<int>& n_grid,
                                                   const OptOptions& opt = {}) {
  check_generator(gen, static_cast<int>(gen.mats.size()));
  if (n_grid.empty()) throw std::invalid_argument("verify_reduced_cocycle: empty n-grid");
  if (V_series.size() < static_cast<size_t>(n_grid.back()) + 1)
    throw std::invalid_argument(
        "verify_reduced_cocycle: the subspace series must cover every step of the horizon");
  const int k = V_series[0].dim();
  if (k < 1) throw std::invalid_argument("verify_reduced_cocycle: zero-dimensional subspace");
  for (const Subspace& s : V_series)
    if (s.dim() != k || s.space != gen.space)
      throw std::invalid_argument("verify_reduced_cocycle: inconsistent subspace series");
  const int d = gen.space.dim;
  const int G = static_cast<int>(n_grid.size());

  ReducedCocycleReport rep;
  rep.n_grid = n_grid;

  // Quotient test vector: the canonical direction farthest from the initial
  // space, skipped when the subspace fills the whole space.
  Vec w = Vec::Zero(d);
  double dmax = -1.0;
  for (int i = 0; i < d; ++i) {
    Vec e = Vec::Zero(d);
    e[i] = 1.0;
    const double di = dist_to_subspace(e, V_series[0].basis, gen.space.p);
    if (di > dmax) {
      dmax = di;
      w = e;
    }
  }
  const bool has_quotient = k < d && dmax > 1e-9;

  Mat B = V_series[0].basis;
  Vec cumlog = Vec::Zero(k);
  Mat RP = Mat::Identity(k, k);  // renormalized product of triangular factors
  double rp_logscale = 0.0;
  double w_logacc = 0.0;
  double max_residual = 0.0;
  std::vector<std::vector<double>> series(k, std::vector<double>(G, -infinity));
  std::vector<double> quotient_series(G, -infinity);
  int gi = 0;
  for (int t = 0; t < n_grid.back() && gi < G; ++t) {
    const Mat M = gen.mats.at(static_cast<size_t>(traj.symbol(t))) * B;
    const Subspace& next = V_series[static_cast<size_t>(t) + 1];
    // Validity bound: how far the image frame sticks out of the next space,
    // relative to its size.
    const Mat P_next = projector(next);
    const Mat normal = M - P_next * M;
    const double mscale = std::max(M.norm(), 1e-300);
    max_residual = std::max(max_residual, normal.norm() / mscale);
    Eigen::HouseholderQR<Mat> qr(Mat(P_next * M));
    Mat R = Mat(qr.matrixQR().triangularView<Eigen::Upper>()).topRows(k);
    Mat Bn = qr.householderQ() * Mat::Identity(d, k);
    for (int i = 0; i < k; ++i) {
      if (R(i, i) < 0) {
        Bn.col(i) = -Bn.col(i);
        R.row(i) = -R.row(i);
      }
      cumlog[i] += std::log(std::abs(R(i, i)));
    }
    B = Bn;
    RP = R * RP;
    const double nm = singular_values(RP)[0];
    if (nm > 0 && (nm < 0.5 || nm > 2.0)) {
      RP /= nm;
      rp_logscale += std::log(nm);
    }
    if (has_quotient) {
      w = gen.mats[traj.symbol(t)] * w;
      const double wn = pnorm(w, gen.space.p);
      if (wn == 0.0) {
        rep.quotient_minus_inf = true;
      } else if (wn < 0.5 || wn > 2.0) {
        w /= wn;
        w_logacc += std::log(wn);
      }
    }
    if (t + 1 != n_grid[gi]) continue;
    const int n = n_grid[gi];
    std::vector<double> sorted(cumlog.data(), cumlog.data() + k);
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    const Vec sv = singular_values(RP);
    double logd = 0.0, frame_logd = 0.0;
    for (int j = 1; j <= k; ++j) {
      logd += std::log(sv[j - 1]);
      frame_logd += sorted[j - 1];
      series[j - 1][gi] = std::max(j * rp_logscale + logd, frame_logd) / n;
    }
    rep.equiv_residual.push_back(max_residual);
    if (has_quotient && !rep.quotient_minus_inf) {
      const double qd = dist_to_subspace(w, B, gen.space.p);
      quotient_series[gi] = qd > 0 ? (w_logacc + std::log(qd)) / n : -infinity;
    }
    ++gi;
  }

  const int half = G / 2;
  std::vector<double> xs;
  for (int i = half; i < G; ++i) xs.push_back(1.0 / n_grid[i]);
  rep.delta.resize(k);
  rep.mu.resize(k);
  for (int j = 0; j < k; ++j) {
    std::vector<double> ys(series[j].begin() + half, series[j].end());
    rep.delta[j] = detail::ols_fit(xs, ys).intercept;
    const double prev = j > 0 ? rep.delta[j - 1] : 0.0;
    rep.mu[j] = (rep.delta[j] > -infinity && prev > -infinity) ? rep.delta[j] - prev : -infinity;
  }
  if (has_quotient) {
    std::vector<double> ys(quotient_series.begin() + half, quotient_series.end());
    rep.quotient_rate = detail::ols_fit(xs, ys).intercept;
    if (!(rep.quotient_rate > -infinity)) rep.quotient_minus_inf = true;
  } else {
    rep.quotient_rate = -infinity;
    rep.quotient_minus_inf = true;
  }
  (void)opt;
  return rep;
}

// Constant-series convenience: valid when the subspace is invariant at every
// step, as for a fixed base.
inline ReducedCocycleReport verify_reduced_cocycle(const Generator& gen, const Trajectory& traj,
                                                   const Subspace& Vin,
                                                   const std::vector<int>& n_grid,
                                                   const OptOptions& opt = {}) {
  if (n_grid.empty()) throw std::invalid_argument("verify_reduced_cocycle: empty n-grid");
  const std::vector<Subspace> series(static_cast<size_t>(n_grid.back()) + 1, Vin);
  return verify_reduced_cocycle(gen, traj, series, n_grid, opt);
}

}  // namespace oseledets
