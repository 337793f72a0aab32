#pragma once

// Linear cocycles over simple ergodic bases: symbol processes (fixed,
// bernoulli, markov), scaled matrix products with renormalization, the dual
// system on reversed time, and finite-horizon estimators for the volume
// growth exponents Delta_k and their increments mu_k.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>

#include "parallel.hpp"
#include "rng.hpp"
#include "volume.hpp"

namespace oseledets {

enum class BaseKind { Fixed, Bernoulli, Markov };

struct BaseProcess {
  BaseKind kind = BaseKind::Fixed;
  int alphabet = 1;
  Vec probs;        // bernoulli: one probability per symbol
  Mat transition;   // markov: row-stochastic matrix over symbols
  int start = -1;   // markov: initial state, or -1 to draw it from the stationary law
  std::uint64_t seed = 0;
};

inline void check_base(const BaseProcess& b) {
  if (b.alphabet < 1) throw std::invalid_argument("base: alphabet must be at least 1");
  switch (b.kind) {
    case BaseKind::Fixed:
      if (b.alphabet != 1)
        throw std::invalid_argument("base: fixed process uses exactly one symbol");
      break;
    case BaseKind::Bernoulli: {
      if (b.probs.size() != b.alphabet)
        throw std::invalid_argument("base: need one probability per symbol");
      if (b.probs.size() > 0 && b.probs.minCoeff() < 0.0)
        throw std::invalid_argument("base: negative probability");
      if (std::abs(b.probs.sum() - 1.0) > 1e-12)
        throw std::invalid_argument("base: probabilities must sum to 1 within 1e-12");
      break;
    }
    case BaseKind::Markov: {
      if (b.transition.rows() != b.alphabet || b.transition.cols() != b.alphabet)
        throw std::invalid_argument("base: transition matrix must be alphabet x alphabet");
      for (int i = 0; i < b.alphabet; ++i) {
        if (b.transition.row(i).minCoeff() < 0.0)
          throw std::invalid_argument("base: negative transition probability");
        if (std::abs(b.transition.row(i).sum() - 1.0) > 1e-12)
          throw std::invalid_argument("base: transition rows must sum to 1 within 1e-12");
      }
      if (b.start < -1 || b.start >= b.alphabet)
        throw std::invalid_argument("base: start state out of range");
      break;
    }
  }
}

// Least-squares stationary distribution of a row-stochastic matrix.
inline Vec stationary_distribution(const Mat& P) {
  const int n = static_cast<int>(P.rows());
  Mat A(n + 1, n);
  A.topRows(n) = P.transpose() - Mat::Identity(n, n);
  A.bottomRows(1).setOnes();
  Vec rhs = Vec::Zero(n + 1);
  rhs[n] = 1.0;
  Vec pi = A.colPivHouseholderQr().solve(rhs);
  pi = pi.cwiseMax(0.0);
  const double s = pi.sum();
  if (s <= 0) throw std::runtime_error("stationary_distribution: chain has no invariant law");
  return pi / s;
}

struct Trajectory {
  std::vector<int> fwd;  // symbols at times 0, 1, 2, ...
  std::vector<int> bwd;  // symbols at times -1, -2, ...
  bool two_sided = false;

  int symbol(long t) const {
    if (t >= 0) {
      if (t >= static_cast<long>(fwd.size()))
        throw std::out_of_range("trajectory: time beyond the forward horizon");
      return fwd[static_cast<size_t>(t)];
    }
    const long i = -t - 1;
    if (i >= static_cast<long>(bwd.size())) {
      if (!two_sided)
        throw std::invalid_argument("trajectory: negative time on a one-sided trajectory");
      throw std::out_of_range("trajectory: time beyond the backward horizon");
    }
    return bwd[static_cast<size_t>(i)];
  }
  long forward_horizon() const { return static_cast<long>(fwd.size()); }
  long backward_horizon() const { return static_cast<long>(bwd.size()); }
};

namespace detail {

// First index whose cumulative weight exceeds u; falls back to the last
// positive-weight symbol so boundary draws stay inside the support.
inline int sample_discrete(double u, const Vec& w) {
  double acc = 0.0;
  int last_pos = -1;
  for (int i = 0; i < w.size(); ++i) {
    if (w[i] > 0.0) last_pos = i;
    acc += w[i];
    if (u < acc) return w[i] > 0.0 ? i : (last_pos >= 0 ? last_pos : i);
  }
  return last_pos >= 0 ? last_pos : static_cast<int>(w.size()) - 1;
}

}  // namespace detail

// Draws per-index reproducible symbol paths. The backward markov extension
// uses the reversed kernel of the stationary law, so the two-sided path has
// the correct joint distribution; it needs positive stationary mass along the
// backward states.
inline Trajectory sample_trajectory(const BaseProcess& base, int n_max,
                                    std::uint64_t index = 0, bool two_sided = false) {
  check_base(base);
  if (n_max < 1) throw std::invalid_argument("sample_trajectory: horizon must be at least 1");
  Trajectory traj;
  traj.two_sided = two_sided;
  traj.fwd.assign(static_cast<size_t>(n_max), 0);
  if (two_sided) traj.bwd.assign(static_cast<size_t>(n_max), 0);
  Rng rng(base.seed, index);
  switch (base.kind) {
    case BaseKind::Fixed:
      break;
    case BaseKind::Bernoulli: {
      for (int t = 0; t < n_max; ++t) traj.fwd[t] = detail::sample_discrete(rng.uniform(), base.probs);
      if (two_sided)
        for (int t = 0; t < n_max; ++t)
          traj.bwd[t] = detail::sample_discrete(rng.uniform(), base.probs);
      break;
    }
    case BaseKind::Markov: {
      const Vec pi = stationary_distribution(base.transition);
      int state = base.start >= 0 ? base.start : detail::sample_discrete(rng.uniform(), pi);
      traj.fwd[0] = state;
      for (int t = 1; t < n_max; ++t) {
        state = detail::sample_discrete(rng.uniform(), base.transition.row(state).transpose());
        traj.fwd[t] = state;
      }
      if (two_sided) {
        int back = traj.fwd[0];
        for (int t = 0; t < n_max; ++t) {
          if (pi[back] <= 0.0)
            throw std::runtime_error(
                "sample_trajectory: two-sided markov extension needs positive stationary mass");
          Vec rev(base.alphabet);
          for (int j = 0; j < base.alphabet; ++j)
            rev[j] = pi[j] * base.transition(j, back) / pi[back];
          back = detail::sample_discrete(rng.uniform(), rev);
          traj.bwd[t] = back;
        }
      }
      break;
    }
  }
  return traj;
}

// Reanchors a path at time t0: symbols before the new anchor become the
// backward tail, so shifting a one-sided path forward yields a two-sided one.
inline Trajectory shift_trajectory(const Trajectory& traj, long t0) {
  const long lo = traj.two_sided ? -traj.backward_horizon() : 0;
  const long hi = traj.forward_horizon();
  if (t0 < lo || t0 > hi)
    throw std::out_of_range("shift_trajectory: anchor outside the sampled horizon");
  Trajectory out;
  out.fwd.reserve(static_cast<size_t>(hi - t0));
  for (long t = t0; t < hi; ++t) out.fwd.push_back(traj.symbol(t));
  out.bwd.reserve(static_cast<size_t>(t0 - lo));
  for (long t = t0 - 1; t >= lo; --t) out.bwd.push_back(traj.symbol(t));
  out.two_sided = traj.two_sided || t0 > 0;
  return out;
}

struct Generator {
  NormedSpace space;
  std::vector<Mat> mats;  // one square matrix per symbol
};

inline void check_generator(const Generator& g, int alphabet) {
  check_space(g.space);
  if (static_cast<int>(g.mats.size()) != alphabet)
    throw std::invalid_argument("generator: need one matrix per symbol");
  for (const Mat& m : g.mats) {
    if (m.rows() != g.space.dim || m.cols() != g.space.dim)
      throw std::invalid_argument("generator: matrices must be dim x dim on the declared space");
    if (!m.allFinite()) throw std::invalid_argument("generator: matrices must be finite");
  }
}

// A matrix product kept at unit scale: the represented operator is
// exp(logscale) * m, with the operator norm of m held inside [0.5, 2].
struct ScaledProduct {
  Mat m;
  double logscale = 0.0;
  int steps = 0;
};

inline ScaledProduct identity_product(const NormedSpace& space) {
  check_space(space);
  return {Mat::Identity(space.dim, space.dim), 0.0, 0};
}

inline void advance(ScaledProduct& P, const Generator& gen, int symbol) {
  P.m = gen.mats.at(static_cast<size_t>(symbol)) * P.m;
  ++P.steps;
  const double nm = op_norm({gen.space, gen.space, P.m}).hi;
  if (nm > 0.0 && (nm < 0.5 || nm > 2.0)) {
    P.m /= nm;
    P.logscale += std::log(nm);
  }
}

// Product over the window [start, start + n): latest symbol multiplies on the
// left.
inline ScaledProduct cocycle_product(const Generator& gen, const Trajectory& traj,
                                     long start, int n) {
  ScaledProduct P = identity_product(gen.space);
  for (int t = 0; t < n; ++t) advance(P, gen, traj.symbol(start + t));
  return P;
}

// Relative defect of the cocycle law over a split window; zero in exact
// arithmetic.
inline double cocycle_law_defect(const Generator& gen, const Trajectory& traj, long start,
                                 int n1, int n2) {
  const ScaledProduct whole = cocycle_product(gen, traj, start, n1 + n2);
  const ScaledProduct first = cocycle_product(gen, traj, start, n1);
  const ScaledProduct second = cocycle_product(gen, traj, start + n1, n2);
  const Mat comp = second.m * first.m;
  const double ratio = std::exp(second.logscale + first.logscale - whole.logscale);
  const double denom = std::max(whole.m.norm(), ratio * comp.norm());
  if (denom == 0.0) return 0.0;
  return (whole.m - ratio * comp).norm() / denom;
}

// The adjoint system: transposed matrices acting on the dual space, run over
// reversed time. Forward duality steps consume the symbols at times -1, -2,
// ..., so the primal backward tail becomes the dual forward path.
inline std::pair<Generator, Trajectory> dual_system(const Generator& gen,
                                                    const Trajectory& traj) {
  check_generator(gen, static_cast<int>(gen.mats.size()));
  if (!traj.two_sided)
    throw std::invalid_argument("dual_system: the dual cocycle needs a two-sided trajectory");
  Generator dual{dual_space(gen.space), {}};
  dual.mats.reserve(gen.mats.size());
  for (const Mat& m : gen.mats) dual.mats.push_back(m.transpose());
  Trajectory rev;
  rev.fwd = traj.bwd;
  rev.bwd = traj.fwd;
  rev.two_sided = true;
  return {std::move(dual), std::move(rev)};
}

namespace detail {

struct Ols {
  double intercept = 0.0;
  double slope = 0.0;
  double se_intercept = 0.0;
};

inline Ols ols_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t m = x.size();
  Ols fit;
  for (double v : y)
    if (!(v > -infinity)) {
      fit.intercept = -infinity;
      return fit;
    }
  if (m == 0) return fit;
  if (m == 1) {
    fit.intercept = y[0];
    return fit;
  }
  double xm = 0, ym = 0;
  for (size_t i = 0; i < m; ++i) {
    xm += x[i];
    ym += y[i];
  }
  xm /= m;
  ym /= m;
  double sxx = 0, sxy = 0;
  for (size_t i = 0; i < m; ++i) {
    sxx += (x[i] - xm) * (x[i] - xm);
    sxy += (x[i] - xm) * (y[i] - ym);
  }
  fit.slope = sxx > 0 ? sxy / sxx : 0.0;
  fit.intercept = ym - fit.slope * xm;
  if (m > 2 && sxx > 0) {
    double ssr = 0;
    for (size_t i = 0; i < m; ++i) {
      const double r = y[i] - fit.intercept - fit.slope * x[i];
      ssr += r * r;
    }
    const double s2 = ssr / static_cast<double>(m - 2);
    fit.se_intercept = std::sqrt(s2 * (1.0 / m + xm * xm / sxx));
  }
  return fit;
}

// Mean and standard error over samples; collapses to -inf when any sample
// diverged downward.
inline void mean_se(const std::vector<double>& v, double& mean, double& se) {
  for (double x : v)
    if (!(x > -infinity)) {
      mean = -infinity;
      se = 0.0;
      return;
    }
  double m = 0;
  for (double x : v) m += x;
  m /= v.size();
  double s2 = 0;
  for (double x : v) s2 += (x - m) * (x - m);
  se = v.size() > 1 ? std::sqrt(s2 / (v.size() - 1)) / std::sqrt(double(v.size())) : 0.0;
  mean = m;
}

}  // namespace detail

struct SpectrumParams {
  int kmax = 1;
  std::vector<int> n_grid;  // strictly increasing positive horizons
  int samples = 8;
  std::optional<VolumeMode> mode;  // default: exact for p = 2, optimize otherwise
  OptOptions opt;
};

inline void check_spectrum_params(const SpectrumParams& par, int dim) {
  if (par.kmax < 1 || par.kmax > dim)
    throw std::invalid_argument("spectrum: kmax must be between 1 and the space dimension");
  if (par.n_grid.empty()) throw std::invalid_argument("spectrum: empty n-grid");
  int prev = 0;
  for (int n : par.n_grid) {
    if (n <= prev) throw std::invalid_argument("spectrum: n-grid must be strictly increasing and positive");
    prev = n;
  }
  if (par.samples < 1) throw std::invalid_argument("spectrum: need at least one sample");
}

struct SpectrumEstimate {
  std::vector<int> n_grid;
  int kmax = 0;
  int samples = 0;
  // series[k-1][gi][t]: per-sample finite-horizon estimate (1/n) log D_k
  std::vector<std::vector<std::vector<double>>> series;
  std::vector<double> delta, delta_se;  // extrapolated Delta_k with standard errors
  std::vector<double> mu, mu_se;        // increments mu_k = Delta_k - Delta_{k-1}
  std::vector<double> fekete_violation; // max positive subadditivity defect of the mean sequence
  bool mu_monotone_2se = true;          // mu nonincreasing within two standard errors
};

// Finite-horizon volume-growth estimator: per sample, (1/n) log D_k of the
// window product along the n-grid, then a linear-in-1/n extrapolation over
// the top half of the grid. Certified lower values of D_k keep every reported
// number a true witness; the enclosure gap is O(1) so it washes out at rate
// 1/n.
//
// Two lower witnesses are combined per grid point. The direct one evaluates
// D_k on the renormalized window product; its k-th singular value underflows
// once n times the exponent gap passes ~700. The companion transports the
// canonical frame by QR with per-direction cumulative log scales: for the
// accumulated upper-triangular factor, the volume of any k columns is at
// least the product of their diagonal entries, so the top-k sum of the
// cumulative logs is an underflow-free lower bound of log D_k (up to the
// l2-to-lp frame constant, which washes out at rate 1/n).
inline SpectrumEstimate estimate_spectrum(const Generator& gen, const BaseProcess& base,
                                          const SpectrumParams& par) {
  check_base(base);
  check_generator(gen, base.alphabet);
  check_spectrum_params(par, gen.space.dim);
  const VolumeMode mode =
      par.mode ? *par.mode
               : (gen.space.p == 2.0 ? VolumeMode::EuclideanExact : VolumeMode::Optimize);
  if (mode == VolumeMode::EuclideanExact && gen.space.p != 2.0)
    throw std::invalid_argument("spectrum: exact euclidean mode needs p = 2");

  const int G = static_cast<int>(par.n_grid.size());
  const int T = par.samples;
  const int K = par.kmax;
  SpectrumEstimate est;
  est.n_grid = par.n_grid;
  est.kmax = K;
  est.samples = T;
  est.series.assign(K, std::vector<std::vector<double>>(G, std::vector<double>(T, 0.0)));

  const int d = gen.space.dim;
  const double frame_const = std::log(l2_over_lp(gen.space.p, d));
  parallel_for(T, [&](int t) {
    const Trajectory traj = sample_trajectory(base, par.n_grid.back(), t);
    ScaledProduct P = identity_product(gen.space);
    Mat Q = Mat::Identity(d, d);
    Vec cumlog = Vec::Zero(d);
    int gi = 0;
    for (int step = 0; step < par.n_grid.back() && gi < G; ++step) {
      const int sym = traj.symbol(step);
      advance(P, gen, sym);
      Eigen::HouseholderQR<Mat> qr(gen.mats[sym] * Q);
      const Mat R = qr.matrixQR().triangularView<Eigen::Upper>();
      Q = qr.householderQ() * Mat::Identity(d, d);
      for (int i = 0; i < d; ++i) {
        double rii = R(i, i);
        if (rii < 0) {
          Q.col(i) = -Q.col(i);
          rii = -rii;
        }
        cumlog[i] += std::log(rii);
      }
      if (P.steps != par.n_grid[gi]) continue;
      const int n = par.n_grid[gi];
      std::vector<double> sorted(cumlog.data(), cumlog.data() + d);
      std::sort(sorted.begin(), sorted.end(), std::greater<double>());
      double frame_logd = 0.0;
      if (mode == VolumeMode::EuclideanExact) {
        const Vec sv = singular_values(P.m);
        double logd = 0.0;
        for (int k = 1; k <= K; ++k) {
          logd += std::log(sv[k - 1]);
          frame_logd += sorted[k - 1];
          est.series[k - 1][gi][t] =
              std::max(k * P.logscale + logd, frame_logd - k * frame_const) / n;
        }
      } else {
        for (int k = 1; k <= K; ++k) {
          const double lo = D_k({gen.space, gen.space, P.m}, k, mode, par.opt).enc.lo;
          frame_logd += sorted[k - 1];
          est.series[k - 1][gi][t] =
              std::max(k * P.logscale + std::log(lo), frame_logd - k * frame_const) / n;
        }
      }
      ++gi;
    }
  });

  // Per-sample intercepts over the top half of the grid, then sample spread.
  const int half = G / 2;
  std::vector<double> xs;
  for (int gi = half; gi < G; ++gi) xs.push_back(1.0 / par.n_grid[gi]);
  std::vector<std::vector<double>> a(K, std::vector<double>(T));
  for (int k = 0; k < K; ++k)
    for (int t = 0; t < T; ++t) {
      std::vector<double> ys;
      for (int gi = half; gi < G; ++gi) ys.push_back(est.series[k][gi][t]);
      a[k][t] = detail::ols_fit(xs, ys).intercept;
    }
  est.delta.resize(K);
  est.delta_se.resize(K);
  est.mu.resize(K);
  est.mu_se.resize(K);
  for (int k = 0; k < K; ++k) {
    detail::mean_se(a[k], est.delta[k], est.delta_se[k]);
    std::vector<double> inc(T);
    for (int t = 0; t < T; ++t) {
      const double prev = k > 0 ? a[k - 1][t] : 0.0;
      inc[t] = (a[k][t] > -infinity && prev > -infinity) ? a[k][t] - prev : -infinity;
    }
    detail::mean_se(inc, est.mu[k], est.mu_se[k]);
  }
  for (int k = 1; k < K; ++k) {
    if (!(est.mu[k] > -infinity) || !(est.mu[k - 1] > -infinity)) continue;
    const double slack = 2.0 * (est.mu_se[k] + est.mu_se[k - 1]) + 1e-12;
    if (est.mu[k] > est.mu[k - 1] + slack) est.mu_monotone_2se = false;
  }

  // Subadditivity of the mean unnormalized sequence, monitored not enforced.
  est.fekete_violation.assign(K, 0.0);
  for (int k = 0; k < K; ++k) {
    std::vector<double> b(G);
    for (int gi = 0; gi < G; ++gi) {
      std::vector<double> vals(T);
      for (int t = 0; t < T; ++t) vals[t] = est.series[k][gi][t] * par.n_grid[gi];
      double m, se;
      detail::mean_se(vals, m, se);
      b[gi] = m;
    }
    for (int i = 0; i < G; ++i)
      for (int j = i; j < G; ++j) {
        const int nsum = par.n_grid[i] + par.n_grid[j];
        for (int l = 0; l < G; ++l)
          if (par.n_grid[l] == nsum && b[l] > -infinity && b[i] > -infinity &&
              b[j] > -infinity)
            est.fekete_violation[k] = std::max(est.fekete_violation[k], b[l] - b[i] - b[j]);
      }
  }
  return est;
}

// Top exponent of the declared tail block. Every symbol matrix must be
// block-diagonal with respect to the split; the check is exact because the
// split is a structural declaration, not a numerical property.
inline double kappa_upper(const Generator& gen, int head_dim, const BaseProcess& base,
                          const SpectrumParams& par) {
  check_base(base);
  check_generator(gen, base.alphabet);
  const int d = gen.space.dim;
  if (head_dim < 0 || head_dim > d)
    throw std::invalid_argument("kappa_upper: head dimension out of range");
  const int tail = d - head_dim;
  for (size_t s = 0; s < gen.mats.size(); ++s) {
    const Mat& m = gen.mats[s];
    const bool off_zero = (head_dim == 0 || tail == 0) ||
                          (m.topRightCorner(head_dim, tail).cwiseAbs().maxCoeff() == 0.0 &&
                           m.bottomLeftCorner(tail, head_dim).cwiseAbs().maxCoeff() == 0.0);
    if (!off_zero)
      throw std::invalid_argument("kappa_upper: symbol " + std::to_string(s) +
                                  " is not block-diagonal for the declared split");
  }
  if (tail == 0) return -infinity;
  Generator sub{{tail, gen.space.p}, {}};
  sub.mats.reserve(gen.mats.size());
  for (const Mat& m : gen.mats) sub.mats.push_back(m.bottomRightCorner(tail, tail));
  SpectrumParams tail_par = par;
  tail_par.kmax = 1;
  return estimate_spectrum(sub, base, tail_par).delta[0];
}

struct TemperednessReport {
  double max_ratio = 0.0;
  int argmax = 0;
  bool pass = true;
};

// Max of g(n)/n over the tail half of the horizon, against a user threshold.
// Under the standard subadditive-defect hypothesis this ratio tends to zero;
// linear growth of g keeps it bounded away.
inline TemperednessReport temperedness_diagnostic(const std::vector<double>& g,
                                                  double threshold) {
  if (g.size() < 2) throw std::invalid_argument("temperedness: need at least two values");
  TemperednessReport rep;
  rep.max_ratio = -infinity;
  const size_t start = std::max<size_t>(1, g.size() / 2);
  for (size_t n = start; n < g.size(); ++n) {
    const double r = g[n] / static_cast<double>(n);
    if (r > rep.max_ratio) {
      rep.max_ratio = r;
      rep.argmax = static_cast<int>(n);
    }
  }
  rep.pass = rep.max_ratio <= threshold;
  return rep;
}

struct GrowthRate {
  double rate = 0.0;
  double se = 0.0;
  bool minus_inf = false;
  std::vector<double> series;  // per grid point, (1/n) log ||L^n v||
};

// Scale-aware growth rate of a single vector along a trajectory, with a
// linear-in-1/n extrapolated limit over the top half of the grid.
inline GrowthRate growth_rate(const Generator& gen, const Trajectory& traj, const Vec& v,
                              const std::vector<int>& n_grid, long start = 0) {
  check_generator(gen, static_cast<int>(gen.mats.size()));
  if (n_grid.empty()) throw std::invalid_argument("growth_rate: empty n-grid");
  GrowthRate out;
  out.series.assign(n_grid.size(), -infinity);
  Vec w = v;
  double logacc = 0.0;
  double nm = pnorm(w, gen.space.p);
  if (nm == 0.0) {
    out.minus_inf = true;
    out.rate = -infinity;
    return out;
  }
  size_t gi = 0;
  for (int t = 0; t < n_grid.back() && gi < n_grid.size(); ++t) {
    w = gen.mats.at(static_cast<size_t>(traj.symbol(start + t))) * w;
    nm = pnorm(w, gen.space.p);
    if (nm == 0.0) {
      out.minus_inf = true;
      break;
    }
    if (nm < 0.5 || nm > 2.0) {
      w /= nm;
      logacc += std::log(nm);
      nm = 1.0;
    }
    if (t + 1 == n_grid[gi]) {
      out.series[gi] = (logacc + std::log(pnorm(w, gen.space.p))) / n_grid[gi];
      ++gi;
    }
  }
  const size_t half = n_grid.size() / 2;
  std::vector<double> xs, ys;
  for (size_t i = half; i < n_grid.size(); ++i) {
    xs.push_back(1.0 / n_grid[i]);
    ys.push_back(out.series[i]);
  }
  const detail::Ols fit = detail::ols_fit(xs, ys);
  out.rate = fit.intercept;
  out.se = fit.se_intercept;
  if (!(out.rate > -infinity)) out.minus_inf = true;
  return out;
}

}  // namespace oseledets
