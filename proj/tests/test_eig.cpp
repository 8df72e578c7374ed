#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "tspec/eig.hpp"

using namespace tspec;

namespace {

CVector random_vector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  CVector v(n);
  for (int i = 0; i < n; ++i) v(i) = cplx(nd(rng), nd(rng));
  return v;
}

}  // namespace

TEST_CASE("dense hermitian eigensolver") {
  CMatrix a(2, 2);
  a << 0, 3, 3, 0;
  const auto e = hermitian_eig_dense(a);
  CHECK(e.values(0) == doctest::Approx(-3.0));
  CHECK(e.values(1) == doctest::Approx(3.0));

  CMatrix d = CMatrix::Zero(4, 4);
  d.diagonal() << 3, -1, 2, 0.5;
  const auto ed = hermitian_eig_dense(d);
  CHECK((ed.values - RVector((RVector(4) << -1, 0.5, 2, 3).finished())).norm() < 1e-15);

  std::mt19937_64 rng(1);
  CMatrix r(50, 50);
  for (int c = 0; c < 50; ++c) r.col(c) = random_vector(50, rng);
  r = (r + r.adjoint()).eval();
  const auto er = hermitian_eig_dense(r);
  CHECK(std::abs(er.values.sum() - r.trace().real()) <= 1e-10 * r.norm());
  CHECK((r * er.vectors - er.vectors * er.values.asDiagonal()).norm() <= 1e-10 * r.norm());
  CHECK((er.vectors.adjoint() * er.vectors - CMatrix::Identity(50, 50)).norm() <= 1e-12);
  CHECK_THROWS_AS(hermitian_eig_dense(CMatrix::Zero(2, 3)), Error);
}

TEST_CASE("inertia counts") {
  const auto w = LatticeWindow::two_sided(512);
  const auto h = assemble_laurent(models::scalar_cos(), w);
  const Interval g = h.gershgorin();
  CHECK(inertia_count(h, g.lo - 0.1).count_below == 0);
  CHECK(inertia_count(h, g.hi + 0.1).count_below == w.dim());
  const int c0 = inertia_count(h, 0.0).count_below;
  CHECK(c0 >= 512 - 2);
  CHECK(c0 <= 512 + 2);

  // exact eigenvalue 0 of an odd path graph: breakdown is retried with a shifted x
  const auto odd = assemble_toeplitz(models::scalar_cos(), LatticeWindow::one_sided(5));
  const InertiaProbe p = inertia_count(odd, 0.0);
  CHECK(p.factorization_ok);
  CHECK(p.shift > 0.0);
  CHECK(p.count_below == 3);
}

TEST_CASE("inertia matches dense counts and is monotone") {
  const auto s = models::periodic_jacobi({1, 0.5, 2}, {0.1, 0.2, 0.3});
  const auto w = LatticeWindow::two_sided(12, 3);
  const auto b = assemble_laurent(s, w) + assemble_perturbation(PerturbationSpec::exponential(0.5, 0.7), w);
  const auto dense = hermitian_eig_dense(b.to_dense()).values;
  const SpectrumSlicer slicer(b);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ux(-4.0, 4.0);
  std::vector<double> xs(200);
  for (auto& x : xs) x = ux(rng);
  std::sort(xs.begin(), xs.end());
  int prev = -1;
  for (double x : xs) {
    const InertiaProbe p = slicer.count(x);
    REQUIRE(p.factorization_ok);
    CHECK(p.count_below == (dense.array() < x).count());
    CHECK(p.count_below >= prev);
    prev = p.count_below;
  }
}

TEST_CASE("inertia resolves the exponentially small edge pair") {
  const auto t = assemble_toeplitz(models::off_diagonal(2, 1), LatticeWindow::one_sided(256, 2));
  const SpectrumSlicer slicer(t);
  for (double m = 1e-2; m > 1e-12; m /= 10) {
    CHECK(slicer.count(-m).count_below == 255);
    CHECK(slicer.count(m).count_below == 257);
  }
}

TEST_CASE("eigs_in_interval") {
  SUBCASE("empty above the cos p band") {
    const auto h = assemble_laurent(models::scalar_cos(), LatticeWindow::two_sided(256));
    CHECK(eigs_in_interval(h, {1.5, 2.0}).empty());
  }
  SUBCASE("count matches inertia and residuals hold") {
    const auto s = models::periodic_jacobi({1, 0.5, 2}, {0.1, 0.2, 0.3});
    const auto h = assemble_laurent(s, LatticeWindow::two_sided(40, 3));
    const Interval range{-0.7, 0.9};
    const auto pairs = eigs_in_interval(h, range);
    CHECK(static_cast<int>(pairs.size()) ==
          inertia_count(h, range.hi).count_below - inertia_count(h, range.lo).count_below);
    const auto dense = hermitian_eig_dense(h.to_dense());
    for (const auto& p : pairs) {
      CHECK((h.apply(p.vector) - p.value * p.vector).norm() <= 1e-8);
      CHECK(std::abs(p.vector.norm() - 1.0) < 1e-12);
      CHECK((dense.values.array() - p.value).abs().minCoeff() < 1e-9);
    }
  }
  SUBCASE("zero mode of the a=2, b=1 Toeplitz section") {
    const auto w = LatticeWindow::one_sided(256, 2);
    const auto t = assemble_toeplitz(models::off_diagonal(2, 1), w);
    const auto pairs = eigs_in_interval(t, {-0.5, 0.5});
    // the section carries the kernel vector plus its mirror image at the far edge
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[0].multiplicity == 2);
    for (const auto& p : pairs) CHECK(std::abs(p.value) <= 1e-8);
    const auto& v = pairs[0];
    CHECK(v.boundary_mass < 1e-6);
    const int comp = std::abs(v.vector(0)) > std::abs(v.vector(1)) ? 0 : 1;
    for (int n = 0; n < 20; ++n) {
      const cplx ratio = v.vector(w.offset(n + 1) + comp) / v.vector(w.offset(n) + comp);
      CHECK(std::abs(ratio + 0.5) <= 1e-6);
    }
  }
  SUBCASE("interval with too many eigenvalues") {
    const auto h = assemble_laurent(models::scalar_cos(), LatticeWindow::two_sided(512));
    EigsOptions o;
    o.max_eigs = 16;
    CHECK_THROWS_AS(eigs_in_interval(h, {-0.5, 0.5}, o), Error);
  }
}

TEST_CASE("gap eigenvalues") {
  SUBCASE("a=2, b=1 has the certified value 0") {
    const auto pairs = gap_eigenvalues(models::off_diagonal(2, 1), nullptr, {-1, 1}, 256);
    REQUIRE(pairs.size() == 1);
    CHECK(std::abs(pairs[0].value) < 1e-8);
    CHECK(pairs[0].multiplicity == 1);
    CHECK(pairs[0].stability <= 1e-8);
    CHECK(pairs[0].boundary_mass <= 1e-6);
  }
  SUBCASE("a=1, b=2 has none") {
    CHECK(gap_eigenvalues(models::off_diagonal(1, 2), nullptr, {-1, 1}, 256).empty());
  }
  SUBCASE("cos p above its band") {
    CHECK(gap_eigenvalues(models::scalar_cos(), nullptr, {1, 2}, 256).empty());
  }
  SUBCASE("gap overlapping a band is rejected") {
    CHECK_THROWS_AS(gap_eigenvalues(models::scalar_cos(), nullptr, {0.5, 2}, 64), Error);
  }
  SUBCASE("stable under doubling the window") {
    LatticeVector psi{0, 1, CVector::Ones(1)};
    const auto spec = PerturbationSpec::rank_one(psi, 1.5);
    const auto a = gap_eigenvalues(models::scalar_cos(), &spec, {1, 3}, 128);
    const auto b = gap_eigenvalues(models::scalar_cos(), &spec, {1, 3}, 256);
    REQUIRE(a.size() == 1);
    REQUIRE(b.size() == 1);
    CHECK(std::abs(a[0].value - b[0].value) <= 2e-8);
  }
}

TEST_CASE("spectral filter") {
  std::mt19937_64 rng(4);
  SUBCASE("identity window") {
    const auto h = assemble_laurent(models::scalar_cos(), LatticeWindow::two_sided(64));
    SpectralFilter f(h, [](double) { return 1.0; }, 8);
    const CVector x = random_vector(h.dim(), rng);
    CHECK((f.apply(x) - x).norm() <= 1e-6 * x.norm());
  }
  SUBCASE("window inside a spectral gap") {
    const auto h = assemble_laurent(models::off_diagonal(2, 1), LatticeWindow::two_sided(128, 2));
    const auto phi = erf_window({0.4, 0.6}, 0.05);
    const int d = required_filter_degree(phi, {-3.01, 3.01}, 1e-6);
    REQUIRE(d > 0);
    SpectralFilter f(h, phi, d + 20);
    CHECK(f.certified_error() <= 1e-6);
    for (int t = 0; t < 3; ++t) {
      const CVector x = random_vector(h.dim(), rng);
      CHECK(f.apply(x).norm() <= 1e-5 * x.norm());
    }
  }
  SUBCASE("insufficient degree reports the requirement") {
    const auto h = assemble_laurent(models::scalar_cos(), LatticeWindow::two_sided(64));
    try {
      SpectralFilter f(h, erf_window({-0.2, 0.2}, 0.01), 10);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("required degree") != std::string::npos);
    }
  }
  SUBCASE("trace against a dense count") {
    const auto phi = erf_window({-0.5, 0.5}, 0.05);
    const auto big = assemble_laurent(models::scalar_cos(), LatticeWindow::two_sided(512));
    const int d = required_filter_degree(phi, big.gershgorin(), 1e-6);
    REQUIRE(d > 0);
    SpectralFilter f(big, phi, d + 10);
    const auto small = assemble_laurent(models::scalar_cos(), LatticeWindow::two_sided(128));
    const auto ev = hermitian_eig_dense(small.to_dense()).values;
    double count = 0.0;
    for (int k = 0; k < ev.size(); ++k) count += phi(ev(k));
    CHECK(std::abs(f.trace() - 4.0 * count) <= 0.03 * 4.0 * count);
  }
}
