#include <catch2/catch_amalgamated.hpp>

#include <oseledets/consistent.hpp>
#include <oseledets/rng.hpp>

using namespace oseledets;

namespace {

LinearMap map_on(double p, const Mat& m) {
  return {{static_cast<int>(m.cols()), p}, {static_cast<int>(m.rows()), p}, m};
}

Mat random_mat(Rng& rng, int d) {
  Mat m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = rng.normal();
  return m;
}

}  // namespace

TEST_CASE("consistent sequence for a diagonal map picks the axes") {
  Mat m = Mat::Zero(3, 3);
  m.diagonal() << 3.0, 2.0, 1.0;
  const LinearMap T = map_on(2.0, m);
  const ConsistentSeq seq = build_consistent(T, 3);

  REQUIRE(seq.built == 3);
  CHECK_FALSE(seq.degenerate);

  // x_k aligns with e_k up to sign
  for (int k = 0; k < 3; ++k) {
    CHECK(std::abs(seq.xs[k].coords[k]) == Catch::Approx(1.0).epsilon(1e-9));
    CHECK(norm(seq.xs[k]) == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(dual_norm(seq.thetas[k]) == Catch::Approx(1.0).epsilon(1e-12));
  }

  // determinants of the leading pairing blocks: 3, 3*2, 3*2*1
  REQUIRE(seq.dets.size() == 3);
  CHECK(seq.dets[0] == Catch::Approx(3.0).epsilon(1e-9));
  CHECK(seq.dets[1] == Catch::Approx(6.0).epsilon(1e-9));
  CHECK(seq.dets[2] == Catch::Approx(6.0).epsilon(1e-9));

  // certified F_k values are the singular values themselves here
  CHECK(seq.f_lo[0] == Catch::Approx(3.0).epsilon(1e-9));
  CHECK(seq.f_lo[1] == Catch::Approx(2.0).epsilon(1e-9));
  CHECK(seq.f_lo[2] == Catch::Approx(1.0).epsilon(1e-9));

  CHECK(certify_consistent(T, seq).all_pass);
}

TEST_CASE("consistent sequence on a Jordan block reaches the full determinant") {
  Mat m(2, 2);
  m << 2, 1, 0, 1;
  const LinearMap T = map_on(2.0, m);
  const ConsistentSeq seq = build_consistent(T, 2);
  REQUIRE(seq.built == 2);
  // for k = d at p = 2 the pairing determinant equals |det T|
  CHECK(seq.dets[1] == Catch::Approx(2.0).epsilon(1e-8));
  CHECK(certify_consistent(T, seq).all_pass);
}

TEST_CASE("zero map degenerates immediately") {
  const LinearMap T = map_on(2.0, Mat(Mat::Zero(3, 3)));
  const ConsistentSeq seq = build_consistent(T, 3);
  CHECK(seq.degenerate);
  CHECK(seq.built == 0);
  CHECK(seq.dets.empty());
}

TEST_CASE("rank-deficient map degenerates at the rank") {
  Mat m = Mat::Zero(3, 3);
  m(0, 0) = 1.0;
  const LinearMap T = map_on(2.0, m);
  const ConsistentSeq seq = build_consistent(T, 3);
  CHECK(seq.built == 1);
  CHECK(seq.degenerate);
  CHECK(seq.dets[0] == Catch::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("certify_consistent rejects a corrupted sequence") {
  Mat m = Mat::Zero(3, 3);
  m.diagonal() << 3.0, 2.0, 1.0;
  const LinearMap T = map_on(2.0, m);
  ConsistentSeq seq = build_consistent(T, 3);
  REQUIRE(seq.built == 3);

  SECTION("duplicated vector collapses the determinant") {
    seq.xs[1] = seq.xs[0];
    const CertifyReport rep = certify_consistent(T, seq);
    CHECK_FALSE(rep.all_pass);
    bool det_failed = false;
    for (const auto& c : rep.checks)
      if (!c.pass && c.name.find("det") != std::string::npos) det_failed = true;
    bool span_failed = false;
    for (const auto& c : rep.checks)
      if (!c.pass && c.name.find("span") != std::string::npos) span_failed = true;
    CHECK((det_failed || span_failed));
  }

  SECTION("tampered determinant record is caught by the recompute") {
    seq.dets[2] *= 1.5;
    const CertifyReport rep = certify_consistent(T, seq);
    CHECK_FALSE(rep.all_pass);
  }

  SECTION("non-unit functional is caught") {
    seq.thetas[0].coords *= 2.0;
    CHECK_FALSE(certify_consistent(T, seq).all_pass);
  }
}

TEST_CASE("certification holds on random maps across exponents") {
  Rng rng(52);
  const double ps[3] = {1.0, 2.0, infinity};
  OptOptions opt;
  opt.starts = 12;
  for (int it = 0; it < 12; ++it) {
    const int d = 2 + rng.uniform_int(3);
    const LinearMap T = map_on(ps[it % 3], random_mat(rng, d));
    opt.seed = 400 + it;
    const ConsistentSeq seq = build_consistent(T, std::min(3, d), opt);
    INFO("it=" << it << " d=" << d << " p=" << T.domain.p << " built=" << seq.built);
    REQUIRE(seq.built >= 1);  // gaussian maps are almost surely well conditioned
    const CertifyReport rep = certify_consistent(T, seq, opt);
    for (const auto& c : rep.checks) {
      INFO(c.name << ": lhs=" << c.lhs << " rhs=" << c.rhs);
      CHECK(c.pass);
    }
  }
}

TEST_CASE("pairing matrix is upper triangular with dominant diagonal") {
  Rng rng(53);
  const LinearMap T = map_on(infinity, random_mat(rng, 4));
  OptOptions opt;
  opt.starts = 16;
  const ConsistentSeq seq = build_consistent(T, 3, opt);
  REQUIRE(seq.built == 3);
  const Bound op = op_norm(T);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < i; ++j) {
      const double below = std::abs(seq.thetas[i].coords.dot(T.m * seq.xs[j].coords));
      CHECK(below <= 1e-10 * std::max(1.0, op.hi));
    }
    // diagonal entries carry the distance-to-previous-span certificates
    const double diag = std::abs(seq.thetas[i].coords.dot(T.m * seq.xs[i].coords));
    CHECK(diag > 0.0);
  }

  SECTION("determinant equals the product of diagonal pairings") {
    const Mat U = detail::pairing_matrix(T, seq, 3);
    double prod = 1.0;
    for (int i = 0; i < 3; ++i) prod *= U(i, i);
    CHECK(std::abs(U.determinant()) == Catch::Approx(std::abs(prod)).epsilon(1e-8));
  }
}

TEST_CASE("expansion certificates are honest lower bounds") {
  Rng rng(54);
  for (int it = 0; it < 6; ++it) {
    const int d = 3;
    const double p = it % 2 == 0 ? 1.0 : infinity;
    const LinearMap T = map_on(p, random_mat(rng, d));
    const ConsistentSeq seq = build_consistent(T, 2);
    REQUIRE(seq.built == 2);
    for (int k = 1; k <= 2; ++k) {
      // sample unit vectors of span(x_1..x_k) and verify ||Tv|| >= cert
      Mat cols(d, k);
      for (int j = 0; j < k; ++j) cols.col(j) = seq.xs[j].coords;
      for (int s = 0; s < 200; ++s) {
        Vec a(k);
        for (int i = 0; i < k; ++i) a[i] = rng.normal();
        Vec v = cols * a;
        const double nv = pnorm(v, p);
        if (nv < 1e-12) continue;
        v /= nv;
        CHECK(pnorm(T.m * v, p) >= seq.expansion_certs[k - 1] * (1 - 1e-9));
      }
    }
  }
}
