#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "tspec/lattice.hpp"

using namespace tspec;

namespace {

CVector random_vector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  CVector v(n);
  for (int i = 0; i < n; ++i) v(i) = cplx(nd(rng), nd(rng));
  return v;
}

CVector unit(const LatticeWindow& w, int site, int component = 0) {
  CVector v = CVector::Zero(w.dim());
  v(w.offset(site) + component) = 1.0;
  return v;
}

}  // namespace

TEST_CASE("laurent truncation of cos p") {
  const auto w = LatticeWindow::two_sided(3);
  const CMatrix d = assemble_laurent(models::scalar_cos(), w).to_dense();
  REQUIRE(d.rows() == 6);
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 6; ++c) CHECK(std::abs(d(r, c) - (std::abs(r - c) == 1 ? 0.5 : 0.0)) < 1e-15);
}

TEST_CASE("laurent blocks of the a=2, b=1 pair") {
  const auto w = LatticeWindow::two_sided(4, 2);
  const auto h = assemble_laurent(models::off_diagonal(2, 1), w);
  CMatrix diag(2, 2), below(2, 2);
  diag << 0, 1, 1, 0;
  below << 0, 0, 2, 0;
  for (int i = -4; i < 4; ++i) {
    CHECK((h.block(i, i) - diag).norm() < 1e-15);
    if (i + 1 < 4) {
      CHECK((h.block(i + 1, i) - below).norm() < 1e-15);
      CHECK((h.block(i, i + 1) - below.adjoint()).norm() < 1e-15);
    }
    if (i + 2 < 4) CHECK(h.block(i + 2, i).norm() == 0.0);
  }
  CHECK(h.hermiticity_defect() == 0.0);
}

TEST_CASE("window size precondition") {
  CHECK_THROWS_AS(assemble_toeplitz(models::scalar_cos(), LatticeWindow::one_sided(2)), Error);
  CHECK_NOTHROW(assemble_toeplitz(models::scalar_cos(), LatticeWindow::one_sided(3)));
  const auto wide = models::periodic_jacobi({1, 1, 1, 1}, {0, 0, 0, 0});
  CHECK_THROWS_AS(assemble_laurent(MatrixSymbol({CMatrix::Zero(1, 1), CMatrix::Zero(1, 1), CMatrix::Ones(1, 1)}),
                                   LatticeWindow::two_sided(2)),
                  Error);
  CHECK(wide.cutoff() == 1);
}

TEST_CASE("truncated cos p spectra stay inside [-1, 1]") {
  const auto lw = LatticeWindow::two_sided(512);
  const auto lau = assemble_laurent(models::scalar_cos(), lw);
  Eigen::SelfAdjointEigenSolver<CMatrix> el(lau.to_dense(), Eigen::EigenvaluesOnly);
  CHECK(el.eigenvalues().minCoeff() >= -1.0 - 1e-12);
  CHECK(el.eigenvalues().maxCoeff() <= 1.0 + 1e-12);
  const auto tw = LatticeWindow::one_sided(256);
  const auto toe = assemble_toeplitz(models::scalar_cos(), tw);
  Eigen::SelfAdjointEigenSolver<CMatrix> et(toe.to_dense(), Eigen::EigenvaluesOnly);
  CHECK(et.eigenvalues().minCoeff() >= -1.0);
  CHECK(et.eigenvalues().maxCoeff() <= 1.0);
}

TEST_CASE("toeplitz blocks of the a=2, b=1 pair at L=3") {
  const auto t = assemble_toeplitz(models::off_diagonal(2, 1), LatticeWindow::one_sided(3, 2));
  CHECK(t.dim() == 6);
  CHECK(t.patch().empty());
  CHECK(std::abs(t.entry(3, 0) - 2.0) < 1e-15);
  CHECK(std::abs(t.entry(0, 3) - 2.0) < 1e-15);
  CHECK(std::abs(t.entry(0, 1) - 1.0) < 1e-15);
}

TEST_CASE("toeplitz is the nonnegative corner of the laurent matrix") {
  for (const auto& s : {models::off_diagonal(2, 1), models::periodic_jacobi({1, 2, 0.5}, {0.3, 0, -1})}) {
    const int n = s.block_size();
    const CMatrix lau = assemble_laurent(s, LatticeWindow::two_sided(16, n)).to_dense();
    const CMatrix toe = assemble_toeplitz(s, LatticeWindow::one_sided(16, n)).to_dense();
    CHECK((lau.bottomRightCorner(16 * n, 16 * n) - toe).norm() == 0.0);
  }
}

TEST_CASE("hankel corner") {
  SUBCASE("cos p has two corner entries") {
    const auto w = LatticeWindow::two_sided(8);
    const CMatrix wd = assemble_hankel_corner(models::scalar_cos(), w).to_dense();
    CHECK((wd.array().abs() > 0).count() == 2);
    CHECK(std::abs(wd(w.offset(0), w.offset(-1)) - 0.5) < 1e-15);
    CHECK(std::abs(wd(w.offset(-1), w.offset(0)) - 0.5) < 1e-15);
  }
  SUBCASE("laurent minus corner decouples the halves") {
    const auto s = models::periodic_jacobi({1, 2}, {0.5, -0.5});
    const auto w = LatticeWindow::two_sided(8, 2);
    const auto h1 = assemble_laurent(s, w) - assemble_hankel_corner(s, w);
    const CMatrix d = h1.to_dense();
    const int half = w.offset(0);
    CHECK(d.topRightCorner(half, d.cols() - half).norm() == 0.0);
    CHECK(d.bottomLeftCorner(d.rows() - half, half).norm() == 0.0);
  }
  SUBCASE("rank of the a=2, b=1 corner") {
    const auto w = LatticeWindow::two_sided(8, 2);
    const CMatrix wd = assemble_hankel_corner(models::off_diagonal(2, 1), w).to_dense();
    Eigen::JacobiSVD<CMatrix> svd(wd);
    CHECK((svd.singularValues().array() > 1e-12).count() == 2);
  }
}

TEST_CASE("perturbation assembly") {
  SUBCASE("rank one on e_0") {
    LatticeVector psi{0, 1, CVector::Ones(1)};
    const auto w = LatticeWindow::two_sided(8);
    const CMatrix v = assemble_perturbation(PerturbationSpec::rank_one(psi), w).to_dense();
    CHECK(std::abs(v(w.offset(0), w.offset(0)) - 1.0) < 1e-15);
    CHECK(v.cwiseAbs().sum() == doctest::Approx(1.0));
  }
  SUBCASE("exponential generator") {
    const auto w = LatticeWindow::two_sided(16);
    const auto v = assemble_perturbation(PerturbationSpec::exponential(1.0, 1.0), w);
    CHECK(std::abs(v.block(3, 2).norm() - std::exp(-5.0)) < 1e-15);
    CHECK(std::abs(v.block(-3, 2).norm() - std::exp(-5.0)) < 1e-15);
    CHECK(v.hermiticity_defect() == 0.0);
  }
  SUBCASE("one-sided box embedded in a two-sided window") {
    std::vector<PerturbationSpec::Entry> e;
    for (int i = -2; i <= 2; ++i)
      for (int j = -2; j <= 2; ++j) e.push_back({i, j, CMatrix::Constant(1, 1, 1.0 / (1 + std::abs(i - j)))});
    const auto w = LatticeWindow::two_sided(8);
    const auto v = assemble_perturbation(PerturbationSpec::box(2, e, true), w);
    for (int i = -8; i < 8; ++i)
      for (int j = -8; j < 8; ++j)
        if (i < 0 || j < 0) CHECK(v.block(i, j).norm() == 0.0);
    CHECK(std::abs(v.block(2, 1)(0, 0) - 0.5) < 1e-15);
  }
  SUBCASE("asymmetric explicit entries are rejected") {
    std::vector<PerturbationSpec::Entry> e{{0, 1, CMatrix::Constant(1, 1, 1.0)},
                                           {1, 0, CMatrix::Constant(1, 1, 2.0)}};
    CHECK_THROWS_AS(assemble_perturbation(PerturbationSpec::explicit_list(e), LatticeWindow::two_sided(4)), Error);
  }
  SUBCASE("single off-diagonal entry is mirrored") {
    std::vector<PerturbationSpec::Entry> e{{0, 2, CMatrix::Constant(1, 1, cplx(0, 1))}};
    const auto v = assemble_perturbation(PerturbationSpec::explicit_list(e), LatticeWindow::two_sided(4));
    CHECK(std::abs(v.block(2, 0)(0, 0) - cplx(0, -1)) < 1e-15);
    CHECK(v.hermiticity_defect() == 0.0);
  }
}

TEST_CASE("apply_operator") {
  const auto w = LatticeWindow::two_sided(8);
  const auto h = assemble_laurent(models::scalar_cos(), w);
  const CVector y = apply_operator(h, unit(w, 0));
  CHECK(std::abs(y(w.offset(-1)) - 0.5) < 1e-15);
  CHECK(std::abs(y(w.offset(1)) - 0.5) < 1e-15);
  CHECK(std::abs(y(w.offset(0))) < 1e-15);
  CHECK_THROWS_AS(apply_operator(h, CVector::Zero(3)), Error);

  std::mt19937_64 rng(5);
  const auto s = models::periodic_jacobi({1, 0.5, 2}, {0.1, 0.2, 0.3});
  const auto w3 = LatticeWindow::two_sided(20, 3);
  const auto b = assemble_laurent(s, w3) + assemble_perturbation(PerturbationSpec::exponential(0.5, 0.7), w3);
  for (int t = 0; t < 5; ++t) {
    const CVector x = random_vector(w3.dim(), rng), z = random_vector(w3.dim(), rng);
    const cplx lhs = b.apply(x).dot(z), rhs = x.dot(b.apply(z));
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(lhs));
  }
}

TEST_CASE("support propagation") {
  const auto w = LatticeWindow::two_sided(20);
  const auto h = assemble_laurent(models::scalar_cos(), w);
  const Interval five = support_after(h, 0, 0, 5);
  CHECK(five.lo == -5);
  CHECK(five.hi == 5);
  const Interval clipped = support_after(h, 0, 0, 30);
  CHECK(clipped.lo == -20);
  CHECK(clipped.hi == 19);

  // exact on a scalar symbol with a long-range coupling of sites -3 and 9,
  // a superset of the observed support on a block symbol
  std::mt19937_64 rng(3);
  for (int n : {1, 3}) {
    const auto w3 = LatticeWindow::two_sided(40, n);
    const auto sym = n == 1 ? models::scalar_cos() : models::periodic_jacobi({1, 0.5, 2}, {0.1, 0.2, 0.3});
    const auto b = assemble_laurent(sym, w3) +
                   assemble_perturbation(PerturbationSpec::explicit_list({{-3, 9, CMatrix::Identity(n, n)}}), w3);
    for (int steps : {1, 3, 7}) {
      CVector x = CVector::Zero(w3.dim());
      for (int site = -6; site <= -4; ++site) x.segment(w3.offset(site), n) = random_vector(n, rng);
      for (int k = 0; k < steps; ++k) x = b.apply(x);
      int lo = 40, hi = -41;
      for (int site = -40; site < 40; ++site)
        if (x.segment(w3.offset(site), n).norm() > 0.0) lo = std::min(lo, site), hi = std::max(hi, site);
      const Interval reach = support_after(b, -6, -4, steps);
      CHECK(reach.lo <= lo);
      CHECK(reach.hi >= hi);
      if (n == 1) {
        CHECK(reach.lo == lo);
        CHECK(reach.hi == hi);
      }
    }
  }
}

TEST_CASE("weights") {
  const auto w = LatticeWindow::two_sided(8, 2);
  std::mt19937_64 rng(9);
  const CVector x = random_vector(w.dim(), rng);
  CHECK((weight_vector(x, 0.0, w) - x).norm() == 0.0);
  const CVector e0 = unit(w, 0, 1);
  CHECK((weight_vector(e0, 3.7, w) - e0).norm() == 0.0);
  const CVector e1 = unit(w, 1);
  CHECK(std::abs(weight_vector(e1, 1.0, w)(w.offset(1)) - 1.0 / std::sqrt(2.0)) < 1e-15);
  CHECK(weight_vector(x, 0.8, w).norm() <= x.norm());
}

TEST_CASE("window functions") {
  CHECK(window_fn::theta(1.5) > 0.0);
  CHECK(window_fn::theta(1.0) == 0.0);
  CHECK(window_fn::theta(2.0) == 0.0);
  CHECK(window_fn::theta_tilde(0.0) == 1.0);
  CHECK(window_fn::theta_tilde(2.0) == 0.0);
  CHECK(window_fn::theta_tilde(-1.99) > 0.0);
  CHECK(window_fn::xi(0.4) == 0.0);
  CHECK(window_fn::xi(1.0) == 1.0);
  for (double x = -3; x <= 3; x += 0.01) {
    CHECK(window_fn::theta(x) >= 0.0);
    CHECK(window_fn::theta(x) <= 1.0);
    CHECK(window_fn::smooth_step(x) >= 0.0);
    CHECK(window_fn::smooth_step(x) <= 1.0);
  }
}

TEST_CASE("besov norm") {
  const auto w = LatticeWindow::two_sided(64);
  CHECK(besov_norm(unit(w, 0), w) == doctest::Approx(1.0).epsilon(1e-15));

  // direct scalar summation oracle for e_3
  double expected = std::exp(-2.25 / (4 - 2.25));
  for (int j = 0; j < 8; ++j) {
    const double x = 3.0 / std::pow(2.0, j);
    if (x > 1 && x < 2) expected += std::pow(2.0, j / 2.0) * std::exp(-1.0 / ((x - 1) * (2 - x)));
  }
  CHECK(besov_norm(unit(w, 3), w) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(besov_norm(unit(w, -3), w) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(besov_norm(CVector::Zero(w.dim()), w) == 0.0);

  std::mt19937_64 rng(13);
  for (int t = 0; t < 10; ++t) {
    const CVector x = random_vector(w.dim(), rng), y = random_vector(w.dim(), rng);
    CHECK(besov_norm(x + y, w) <= besov_norm(x, w) + besov_norm(y, w) + 1e-12);
    CHECK(besov_norm(x, w) > 0.0);
  }
}

TEST_CASE("band LU solves") {
  std::mt19937_64 rng(21);
  const auto s = models::off_diagonal(2, 1);
  const auto w = LatticeWindow::one_sided(40, 2);
  const auto b = assemble_toeplitz(s, w) + assemble_perturbation(PerturbationSpec::exponential(1.0, 0.5, true), w);
  const CMatrix d = b.to_dense();
  for (cplx z : {cplx(0.3, 0.01), cplx(1.5, 1e-3), cplx(-2.0, 0.5)}) {
    BandLU lu(b, z);
    const CMatrix a = d - z * CMatrix::Identity(d.rows(), d.cols());
    const CVector r = random_vector(w.dim(), rng);
    CHECK((a * lu.solve(r) - r).norm() <= 1e-10 * r.norm() * lu.condition_estimate());
    CHECK((a.adjoint() * lu.solve_adjoint(r) - r).norm() <= 1e-10 * r.norm() * lu.condition_estimate());
    Eigen::JacobiSVD<CMatrix> svd(a);
    const double cond = svd.singularValues()(0) / svd.singularValues().tail(1)(0);
    CHECK(lu.condition_estimate() >= 0.1 * cond);
    CHECK(lu.condition_estimate() <= 100.0 * cond);
  }
}
