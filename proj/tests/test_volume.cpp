#include <catch2/catch_amalgamated.hpp>

#include <oseledets/rng.hpp>
#include <oseledets/volume.hpp>

using namespace oseledets;

namespace {

LinearMap euclid_map(const Mat& m) {
  return {{static_cast<int>(m.cols()), 2.0}, {static_cast<int>(m.rows()), 2.0}, m};
}

Mat random_mat(Rng& rng, int r, int c) {
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rng.normal();
  return m;
}

double sv_product(const Mat& m, int k) {
  const Vec sv = singular_values(m);
  double prod = 1.0;
  for (int i = 0; i < k; ++i) prod *= (i < sv.size()) ? sv[i] : 0.0;
  return prod;
}

}  // namespace

TEST_CASE("operator norm closed forms") {
  Mat m(2, 2);
  m << 1, -3, 2, 4;

  SECTION("l1 -> l1 is the max column sum") {
    const Bound b = op_norm({{2, 1.0}, {2, 1.0}, m});
    CHECK(b.lo == Catch::Approx(7.0));
    CHECK(b.hi == Catch::Approx(7.0));
  }
  SECTION("linf -> linf is the max row sum") {
    const Bound b = op_norm({{2, infinity}, {2, infinity}, m});
    CHECK(b.lo == Catch::Approx(6.0));
    CHECK(b.hi == Catch::Approx(6.0));
  }
  SECTION("l2 -> l2 is the top singular value") {
    const Bound b = op_norm(euclid_map(m));
    CHECK(b.lo == Catch::Approx(singular_values(m)[0]));
    CHECK(b.hi == Catch::Approx(b.lo));
  }
  SECTION("l1 -> linf is the largest absolute entry") {
    const Bound b = op_norm({{2, 1.0}, {2, infinity}, m});
    CHECK(b.lo == Catch::Approx(4.0));
    CHECK(b.hi == Catch::Approx(4.0));
  }
  SECTION("mixed smooth exponents give a sandwich, not a point") {
    const Bound b = op_norm({{2, 3.0}, {2, 2.0}, m});
    CHECK(b.lo <= b.hi);
    CHECK(b.lo > 0.0);
  }
}

TEST_CASE("vol_k basics") {
  NormedSpace sp{3, 2.0};
  std::vector<Vector> ortho = {{sp, Vec(Vec::Unit(3, 0))}, {sp, Vec(Vec::Unit(3, 1))}};
  CHECK(vol_k(ortho) == Catch::Approx(1.0));

  std::vector<Vector> repeated = {{sp, Vec(Vec::Unit(3, 0))}, {sp, Vec(2.0 * Vec::Unit(3, 0))}};
  CHECK(vol_k(repeated) == Catch::Approx(0.0).margin(1e-15));

  CHECK(vol_k({}) == Catch::Approx(1.0));  // empty product convention

  SECTION("vol2 is the singular value product") {
    Rng rng(31);
    const Mat cols = random_mat(rng, 4, 3);
    CHECK(detail::vol2(cols) == Catch::Approx(sv_product(cols, 3)).epsilon(1e-10));
  }
}

TEST_CASE("Euclidean exact mode matches singular value oracles") {
  Rng rng(32);
  for (int it = 0; it < 40; ++it) {
    const int d = 2 + rng.uniform_int(4);
    const Mat m = random_mat(rng, d, d);
    const LinearMap T = euclid_map(m);
    for (int k = 1; k <= std::min(3, d); ++k) {
      const double expected = sv_product(m, k);
      const DkResult dk = D_k(T, k, VolumeMode::EuclideanExact);
      CHECK(dk.enc.lo == Catch::Approx(expected).epsilon(1e-9));
      CHECK(dk.enc.hi == Catch::Approx(expected).epsilon(1e-9));

      const EkResult ek = E_k(T, k, VolumeMode::EuclideanExact);
      CHECK(ek.enc.lo == Catch::Approx(expected).epsilon(1e-9));

      const FkResult fk = F_k(T, k, VolumeMode::EuclideanExact);
      CHECK(fk.enc.lo == Catch::Approx(singular_values(m)[k - 1]).epsilon(1e-9));
    }
  }
}

TEST_CASE("D_k homogeneity under scaling") {
  Rng rng(33);
  const Mat m = random_mat(rng, 3, 3);
  const double c = 2.5;
  for (double p : {1.0, 2.0, infinity}) {
    const LinearMap T{{3, p}, {3, p}, m};
    const LinearMap cT{{3, p}, {3, p}, Mat(c * m)};
    const VolumeMode mode = p == 2.0 ? VolumeMode::EuclideanExact : VolumeMode::Optimize;
    for (int k = 1; k <= 3; ++k) {
      const double scale = std::pow(c, k);
      const VolumeEnclosure a = D_k(T, k, mode).enc;
      const VolumeEnclosure b = D_k(cT, k, mode).enc;
      CHECK(b.lo == Catch::Approx(scale * a.lo).epsilon(1e-9));
      CHECK(b.hi == Catch::Approx(scale * a.hi).epsilon(1e-9));
    }
  }
}

TEST_CASE("witness consistency: enc.lo is the witness volume") {
  Rng rng(34);
  for (double p : {1.0, infinity}) {
    const Mat m = random_mat(rng, 3, 3);
    const LinearMap T{{3, p}, {3, p}, m};
    const DkResult dk = D_k(T, 2, VolumeMode::Optimize);
    REQUIRE(dk.witness.size() == 2);
    std::vector<Vector> imgs;
    for (const Vec& w : dk.witness) {
      CHECK(pnorm(w, p) == Catch::Approx(1.0).epsilon(1e-9));
      imgs.push_back({T.codomain, Vec(m * w)});
    }
    CHECK(vol_k(imgs) == Catch::Approx(dk.enc.lo).epsilon(1e-8));
  }
}

TEST_CASE("optimize and net enclosures bracket the Euclidean value") {
  // At p = 2 the exact value is known, so other modes must produce enclosures
  // that contain it (lo below, hi above).
  Rng rng(35);
  const Mat m = random_mat(rng, 3, 3);
  const LinearMap T = euclid_map(m);
  for (int k = 1; k <= 2; ++k) {
    const double exact = sv_product(m, k);
    const VolumeEnclosure opt = D_k(T, k, VolumeMode::Optimize).enc;
    CHECK(opt.lo <= exact * (1 + 1e-9));
    CHECK(opt.hi >= exact * (1 - 1e-9));
    // p = 2 optimize route is exact, so the bracket should be tight
    CHECK(opt.lo == Catch::Approx(exact).epsilon(1e-8));
  }

  OptOptions net_opt;
  net_opt.net_spacing = 0.2;
  Mat m2 = random_mat(rng, 2, 2);
  const LinearMap T2{{2, infinity}, {2, infinity}, m2};
  const VolumeEnclosure net = D_k(T2, 1, VolumeMode::Net, net_opt).enc;
  const VolumeEnclosure fine = D_k(T2, 1, VolumeMode::Optimize).enc;
  CHECK(net.lo <= net.hi);
  CHECK(net.lo <= fine.hi * (1 + 1e-9));
  CHECK(net.hi >= fine.lo * (1 - 1e-9));
}

TEST_CASE("enclosure invariant lo <= hi over random maps and exponents") {
  Rng rng(36);
  const double ps[3] = {1.0, 2.0, infinity};
  for (int it = 0; it < 18; ++it) {
    const int d = 2 + rng.uniform_int(3);
    const LinearMap T{{d, ps[it % 3]}, {d, ps[(it + 1) % 3]}, random_mat(rng, d, d)};
    OptOptions opt;
    opt.starts = 8;
    for (int k = 1; k <= std::min(3, d); ++k) {
      const VolumeEnclosure dk = D_k(T, k, VolumeMode::Optimize, opt).enc;
      const VolumeEnclosure ek = E_k(T, k, VolumeMode::Optimize, opt).enc;
      const VolumeEnclosure fk = F_k(T, k, VolumeMode::Optimize, opt).enc;
      CHECK(dk.lo <= dk.hi * (1 + 1e-9));
      CHECK(ek.lo <= ek.hi * (1 + 1e-9));
      CHECK(fk.lo <= fk.hi * (1 + 1e-9));
      CHECK(dk.lo >= 0.0);
      CHECK(fk.lo >= 0.0);
    }
  }
}

TEST_CASE("diagonal map volume quantities on sup-norm spaces") {
  // T = diag(3, 2) on linf: ||T x||_inf on the unit cube peaks at 3 along e1,
  // and the corners give a parallelogram with vol 3 * 2 at k = 2; the
  // optimize route must certify at least the corner witnesses.
  Mat m(2, 2);
  m << 3, 0, 0, 2;
  const LinearMap T{{2, infinity}, {2, infinity}, m};
  const DkResult d1 = D_k(T, 1, VolumeMode::Optimize);
  CHECK(d1.enc.lo == Catch::Approx(3.0).epsilon(1e-9));
  const FkResult f1 = F_k(T, 1, VolumeMode::Optimize);
  CHECK(f1.enc.hi >= 3.0 - 1e-9);  // best line is the e1 axis
  CHECK(f1.enc.lo <= 3.0 + 1e-9);
}

TEST_CASE("dk_upper_bound dominates the exact Euclidean value") {
  Rng rng(37);
  for (int it = 0; it < 20; ++it) {
    const int d = 2 + rng.uniform_int(3);
    const Mat m = random_mat(rng, d, d);
    const double ps[3] = {1.0, 2.0, infinity};
    const LinearMap T{{d, ps[it % 3]}, {d, ps[(it * 2) % 3]}, m};
    const Mat B = Mat::Identity(d, d);
    for (int k = 1; k <= d; ++k) {
      const double hi = detail::dk_upper_bound(T, B, k);
      // any k unit-p vectors have p-volume of images at most hi; probe randomly
      std::vector<Vector> imgs;
      for (int j = 0; j < k; ++j) {
        Vec v(d);
        for (int i = 0; i < d; ++i) v[i] = rng.normal();
        v /= pnorm(v, T.domain.p);
        imgs.push_back({T.codomain, Vec(m * v)});
      }
      CHECK(vol_k(imgs) <= hi * (1 + 1e-9));
    }
  }
}

TEST_CASE("verify_section2 passes on random composable pairs") {
  Rng rng(38);
  OptOptions opt;
  opt.starts = 8;
  opt.max_iters = 80;
  const double ps[3] = {1.0, 2.0, infinity};
  for (int it = 0; it < 6; ++it) {
    const int d = 2 + rng.uniform_int(3);
    const double p = ps[it % 3];
    const NormedSpace sp{d, p};
    const LinearMap T{sp, sp, random_mat(rng, d, d)};
    const LinearMap S{sp, sp, random_mat(rng, d, d)};
    const Subspace V = make_subspace(sp, random_mat(rng, d, d - 1));
    opt.seed = 1000 + it;
    const Section2Report rep = verify_section2(T, S, V, std::min(3, d), opt);
    CHECK(rep.all_pass);
    for (const auto& c : rep.checks) {
      INFO(c.name << ": " << c.lhs << " <= " << c.rhs);
      CHECK(c.pass);
    }
    CHECK(rep.checks.size() >= 8);
  }
}

TEST_CASE("verify_section2 handles rank-deficient maps") {
  Mat m(3, 3);
  m << 1, 2, 3, 2, 4, 6, 1, 0, 1;  // rank 2
  const NormedSpace sp{3, 1.0};
  const LinearMap T{sp, sp, m};
  const LinearMap S{sp, sp, Mat(Mat::Identity(3, 3))};
  const Subspace V = make_subspace(sp, Mat(Mat::Identity(3, 3).leftCols(2)));
  OptOptions opt;
  opt.starts = 8;
  const Section2Report rep = verify_section2(T, S, V, 3, opt);
  CHECK(rep.all_pass);
}

TEST_CASE("composition and duality of linear maps") {
  Mat a(2, 2), b(2, 2);
  a << 1, 2, 3, 4;
  b << 0, 1, 1, 0;
  const LinearMap T{{2, 1.0}, {2, 2.0}, a};
  const LinearMap S{{2, 2.0}, {2, infinity}, b};
  const LinearMap ST = compose(S, T);
  CHECK((ST.m - b * a).norm() == 0.0);
  CHECK(ST.domain.p == 1.0);
  CHECK(ST.codomain.p == infinity);

  const LinearMap Td = dual_map(T);
  CHECK(Td.domain.p == Catch::Approx(2.0));
  CHECK(Td.codomain.p == infinity);
  CHECK((Td.m - a.transpose()).norm() == 0.0);

  // ||T*|| = ||T|| for exact exponent pairs
  const Bound n1 = op_norm(T);
  const Bound n2 = op_norm(Td);
  CHECK(n1.lo == Catch::Approx(n2.lo).epsilon(1e-12));
}

TEST_CASE("make_enclosure rejects inverted bounds") {
  CHECK_THROWS(make_enclosure(2.0, 1.0, VolumeMode::Optimize));
  const VolumeEnclosure e = make_enclosure(1.0, 1.0 + 1e-9, VolumeMode::Optimize);
  CHECK(e.lo <= e.hi);
}
