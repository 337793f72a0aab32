#include <catch2/catch_amalgamated.hpp>

#include <oseledets/cocycle.hpp>
#include <oseledets/rng.hpp>

using namespace oseledets;

namespace {

Mat m2(double a, double b, double c, double d) {
  Mat m(2, 2);
  m << a, b, c, d;
  return m;
}

BaseProcess fixed_base(std::uint64_t seed = 0) {
  BaseProcess b;
  b.kind = BaseKind::Fixed;
  b.alphabet = 1;
  b.seed = seed;
  return b;
}

BaseProcess bernoulli_half(std::uint64_t seed) {
  BaseProcess b;
  b.kind = BaseKind::Bernoulli;
  b.alphabet = 2;
  b.probs = Vec(2);
  b.probs << 0.5, 0.5;
  b.seed = seed;
  return b;
}

Generator jordan_gen() {
  return {{2, 2.0}, {m2(2, 1, 0, 1)}};
}

}  // namespace

TEST_CASE("trajectory sampling is reproducible and respects the base law") {
  SECTION("fixed base emits symbol zero forever") {
    const Trajectory t = sample_trajectory(fixed_base(), 50, 0, true);
    for (long i = -50; i < 50; ++i) CHECK(t.symbol(i) == 0);
  }

  SECTION("same seed and index give the same path, different index differs") {
    const BaseProcess b = bernoulli_half(42);
    const Trajectory t1 = sample_trajectory(b, 200, 3);
    const Trajectory t2 = sample_trajectory(b, 200, 3);
    const Trajectory t3 = sample_trajectory(b, 200, 4);
    CHECK(t1.fwd == t2.fwd);
    CHECK(t1.fwd != t3.fwd);
  }

  SECTION("bernoulli frequencies approach the law") {
    const Trajectory t = sample_trajectory(bernoulli_half(7), 20000, 0);
    double ones = 0;
    for (int s : t.fwd) ones += s;
    CHECK(ones / 20000.0 == Catch::Approx(0.5).margin(0.02));
  }

  SECTION("deterministic alternating markov chain") {
    BaseProcess b;
    b.kind = BaseKind::Markov;
    b.alphabet = 2;
    b.transition = m2(0, 1, 1, 0);
    b.start = 0;
    const Trajectory t = sample_trajectory(b, 10, 0);
    for (int i = 0; i < 10; ++i) CHECK(t.fwd[i] == i % 2);
  }

  SECTION("one-sided trajectory rejects negative times") {
    const Trajectory t = sample_trajectory(fixed_base(), 10, 0, false);
    CHECK_THROWS(t.symbol(-1));
  }
}

TEST_CASE("stationary distribution of a two-state chain") {
  // pi P = pi for P = [[0.3,0.7],[0.6,0.4]] gives pi = (6/13, 7/13)
  const Vec pi = stationary_distribution(m2(0.3, 0.7, 0.6, 0.4));
  CHECK(pi[0] == Catch::Approx(6.0 / 13.0).epsilon(1e-10));
  CHECK(pi[1] == Catch::Approx(7.0 / 13.0).epsilon(1e-10));
}

TEST_CASE("scaled products represent the plain matrix product") {
  const Generator gen = jordan_gen();
  const Trajectory traj = sample_trajectory(fixed_base(), 40, 0);

  SECTION("n = 0 is the identity") {
    const ScaledProduct P = cocycle_product(gen, traj, 0, 0);
    CHECK((P.m - Mat::Identity(2, 2)).norm() == 0.0);
    CHECK(P.logscale == 0.0);
  }

  SECTION("two steps of the Jordan block") {
    const ScaledProduct P = cocycle_product(gen, traj, 0, 2);
    const Mat expected = m2(4, 3, 0, 1);
    CHECK((std::exp(P.logscale) * P.m - expected).norm() < 1e-12);
  }

  SECTION("renormalization keeps the working norm in the window") {
    const ScaledProduct P = cocycle_product(gen, traj, 0, 40);
    const double nm = op_norm({gen.space, gen.space, P.m}).hi;
    CHECK(nm >= 0.5);
    CHECK(nm <= 2.0);
    // log of the true product norm is recovered through the scale
    CHECK(P.logscale + std::log(nm) == Catch::Approx(40.0 * std::log(2.0)).margin(1.0));
  }

  SECTION("diagonal product accumulates exactly") {
    Generator g{{2, 2.0}, {m2(3, 0, 0, 0.5)}};
    const ScaledProduct P = cocycle_product(g, traj, 0, 8);
    const double top = std::exp(P.logscale) * P.m(0, 0);
    CHECK(top == Catch::Approx(std::pow(3.0, 8)).epsilon(1e-12));
  }
}

TEST_CASE("cocycle law holds over random split windows") {
  Rng rng(61);
  Generator gen{{3, 2.0}, {}};
  for (int s = 0; s < 3; ++s) {
    Mat m(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m(i, j) = rng.normal();
    gen.mats.push_back(m);
  }
  BaseProcess base;
  base.kind = BaseKind::Bernoulli;
  base.alphabet = 3;
  base.probs = Vec(3);
  base.probs << 0.2, 0.5, 0.3;
  base.seed = 99;
  const Trajectory traj = sample_trajectory(base, 120, 0, true);
  double worst = 0.0;
  for (int it = 0; it < 100; ++it) {
    const long start = rng.uniform_int(60) - 30;
    const int n1 = rng.uniform_int(30);
    const int n2 = rng.uniform_int(30);
    worst = std::max(worst, cocycle_law_defect(gen, traj, start, n1, n2));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("dual system transposes window products") {
  Rng rng(62);
  Generator gen{{2, 1.0}, {m2(1, 2, 0.5, 1), m2(0, 1, 1, 1)}};
  const Trajectory traj = sample_trajectory(bernoulli_half(5), 64, 0, true);
  const auto [dual, dtraj] = dual_system(gen, traj);
  CHECK(dual.space.p == infinity);

  double worst = 0.0;
  for (int n : {1, 2, 5, 16, 33}) {
    // dual product over [-n, 0) equals the transpose of the primal over [0, n)
    const ScaledProduct P = cocycle_product(gen, traj, 0, n);
    const ScaledProduct Q = cocycle_product(dual, dtraj, -n, n);
    Vec x(2), th(2);
    for (int it = 0; it < 10; ++it) {
      x << rng.normal(), rng.normal();
      th << rng.normal(), rng.normal();
      const double lhs = th.dot(P.m * x) * std::exp(P.logscale);
      const double rhs = x.dot(Q.m * th) * std::exp(Q.logscale);
      worst = std::max(worst, std::abs(lhs - rhs) / std::max(std::abs(lhs), 1e-300));
    }
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("spectrum of the fixed Jordan block") {
  SpectrumParams par;
  par.kmax = 2;
  par.samples = 2;
  for (int n = 10; n <= 100; n += 10) par.n_grid.push_back(n);
  const SpectrumEstimate est = estimate_spectrum(jordan_gen(), fixed_base(), par);
  REQUIRE(est.mu.size() == 2);
  CHECK(est.mu[0] == Catch::Approx(std::log(2.0)).margin(1e-3));
  CHECK(est.mu[1] == Catch::Approx(0.0).margin(1e-3));
  CHECK(est.delta[0] == Catch::Approx(std::log(2.0)).margin(1e-3));
  CHECK(est.delta[1] == Catch::Approx(std::log(2.0)).margin(1e-3));
  CHECK(est.mu_monotone_2se);
  // subadditivity of the mean sequence holds for every split on this fixture
  for (double v : est.fekete_violation) CHECK(v <= 1e-9);
}

TEST_CASE("identity cocycle has exponent zero to machine precision") {
  Generator gen{{2, 2.0}, {Mat(Mat::Identity(2, 2))}};
  SpectrumParams par;
  par.kmax = 2;
  par.samples = 1;
  par.n_grid = {5, 10, 20};
  const SpectrumEstimate est = estimate_spectrum(gen, fixed_base(), par);
  CHECK(std::abs(est.mu[0]) <= 1e-12);
  CHECK(std::abs(est.mu[1]) <= 1e-12);
  CHECK(est.delta_se[0] <= 1e-12);
}

TEST_CASE("iid diagonal cocycle matches the Birkhoff means") {
  // two symbols diag(2, 1/3) and diag(4, 1/5) with equal probability:
  // mu_1 = (log 2 + log 4) / 2, Delta_2 averages the determinants
  Generator gen{{2, 2.0}, {m2(2, 0, 0, 1.0 / 3.0), m2(4, 0, 0, 1.0 / 5.0)}};
  SpectrumParams par;
  par.kmax = 2;
  par.samples = 24;
  par.n_grid = {200, 400, 600, 800, 1000};
  const SpectrumEstimate est = estimate_spectrum(gen, bernoulli_half(11), par);
  const double mu1 = 0.5 * (std::log(2.0) + std::log(4.0));
  const double mu2 = 0.5 * (std::log(1.0 / 3.0) + std::log(1.0 / 5.0));
  CHECK(est.mu[0] == Catch::Approx(mu1).margin(3 * est.mu_se[0] + 1e-6));
  CHECK(est.mu[1] == Catch::Approx(mu2).margin(3 * (est.mu_se[0] + est.mu_se[1]) + 1e-6));
  CHECK(est.mu_se[0] > 0.0);
}

TEST_CASE("kappa_upper on block structures") {
  SECTION("declared tail with a contraction rate gives its log") {
    // head: scalar 2 or 4; tail: 0.1 times a rotation, so the tail exponent
    // is exactly log 0.1
    auto rot = [](double a) { return m2(std::cos(a), -std::sin(a), std::sin(a), std::cos(a)); };
    Mat a = Mat::Zero(3, 3), b = Mat::Zero(3, 3);
    a(0, 0) = 2.0;
    a.bottomRightCorner(2, 2) = 0.1 * rot(0.7);
    b(0, 0) = 4.0;
    b.bottomRightCorner(2, 2) = 0.1 * rot(1.1);
    Generator gen{{3, 2.0}, {a, b}};
    SpectrumParams par;
    par.kmax = 1;
    par.samples = 4;
    par.n_grid = {50, 100, 150, 200};
    const double kappa = kappa_upper(gen, 1, bernoulli_half(3), par);
    CHECK(kappa == Catch::Approx(std::log(0.1)).margin(1e-12));
  }

  SECTION("empty tail reports minus infinity") {
    Generator gen{{2, 2.0}, {m2(2, 0, 0, 3)}};
    SpectrumParams par;
    par.kmax = 1;
    par.samples = 1;
    par.n_grid = {10};
    CHECK(kappa_upper(gen, 2, fixed_base(), par) == -infinity);
  }

  SECTION("iid scalar tail averages the symbol logs") {
    // Birkhoff mean of the per-symbol logs; statistical tolerance at ~10
    // standard errors of the averaged estimator.
    Generator gen{{1, 2.0}, {Mat(0.1 * Mat::Identity(1, 1)), Mat(0.2 * Mat::Identity(1, 1))}};
    SpectrumParams par;
    par.kmax = 1;
    par.samples = 32;
    par.n_grid = {250, 500, 750, 1000};
    const double kappa = kappa_upper(gen, 0, bernoulli_half(9), par);
    CHECK(kappa == Catch::Approx(0.5 * (std::log(0.1) + std::log(0.2))).margin(0.02));
  }

  SECTION("off-block mass is rejected") {
    Generator gen{{2, 2.0}, {m2(2, 1, 0, 1)}};
    SpectrumParams par;
    par.kmax = 1;
    par.samples = 1;
    par.n_grid = {10};
    CHECK_THROWS(kappa_upper(gen, 1, fixed_base(), par));
  }
}

TEST_CASE("temperedness diagnostic separates sublinear from linear growth") {
  std::vector<double> slow, linear, constant;
  for (int n = 0; n < 400; ++n) {
    slow.push_back(std::log(1.0 + n));
    linear.push_back(0.5 * n);
    constant.push_back(2.0);
  }
  CHECK(temperedness_diagnostic(slow, 0.05).pass);
  CHECK(temperedness_diagnostic(constant, 0.05).pass);
  const TemperednessReport bad = temperedness_diagnostic(linear, 0.05);
  CHECK_FALSE(bad.pass);
  CHECK(bad.max_ratio == Catch::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("growth rate of single vectors under the Jordan block") {
  const Generator gen = jordan_gen();
  const Trajectory traj = sample_trajectory(fixed_base(), 200, 0);
  std::vector<int> grid;
  for (int n = 20; n <= 200; n += 20) grid.push_back(n);

  SECTION("generic vector grows like log 2") {
    Vec v(2);
    v << 1, 1;
    const GrowthRate g = growth_rate(gen, traj, v, grid);
    CHECK_FALSE(g.minus_inf);
    CHECK(g.rate == Catch::Approx(std::log(2.0)).margin(1e-3));
  }

  SECTION("the slow eigenvector stays bounded") {
    Vec v(2);
    v << 1, -1;  // eigenvector for eigenvalue 1
    const GrowthRate g = growth_rate(gen, traj, v, grid);
    CHECK(g.rate == Catch::Approx(0.0).margin(1e-3));
  }

  SECTION("zero vector reports minus infinity") {
    const GrowthRate g = growth_rate(gen, traj, Vec(Vec::Zero(2)), grid);
    CHECK(g.minus_inf);
    CHECK(g.rate == -infinity);
  }
}

TEST_CASE("input validation") {
  CHECK_THROWS(sample_trajectory(fixed_base(), 0));

  BaseProcess bad;
  bad.kind = BaseKind::Bernoulli;
  bad.alphabet = 2;
  bad.probs = Vec(2);
  bad.probs << 0.7, 0.7;
  CHECK_THROWS(check_base(bad));

  Generator g{{2, 2.0}, {Mat(Mat::Identity(3, 3))}};
  CHECK_THROWS(check_generator(g, 1));

  SpectrumParams par;
  par.kmax = 5;
  par.n_grid = {10};
  CHECK_THROWS(check_spectrum_params(par, 2));
  par.kmax = 1;
  par.n_grid = {10, 10};
  CHECK_THROWS(check_spectrum_params(par, 2));
}
