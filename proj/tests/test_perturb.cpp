#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "tspec/perturb.hpp"

using namespace tspec;

namespace {

const double kPi2 = kPi * kPi;

LatticeVector unit_at(int site) { return {site, 1, CVector::Ones(1)}; }

PerturbationSpec box_spec(int m) {
  std::vector<PerturbationSpec::Entry> e;
  for (int i = -m; i <= m; ++i)
    for (int j = i; j <= m; ++j) e.push_back({i, j, CMatrix::Constant(1, 1, 1.0 / (1 + std::abs(i - j)))});
  return PerturbationSpec::box(m, e);
}

double direct_window_norm(const PerturbationSpec& v, int half_length) {
  const auto w = LatticeWindow::two_sided(half_length);
  return window_masked_norm(assemble_perturbation(v, w), [](int) { return 1.0; });
}

}  // namespace

TEST_CASE("power sums") {
  CHECK(power_sum(1.0, 2.0) == doctest::Approx(kPi2 / 6).epsilon(1e-13));
  CHECK(power_sum(1.0, 4.0) == doctest::Approx(kPi2 * kPi2 / 90).epsilon(1e-13));
  double direct = 0.0;
  for (int b = 0; b < 2000000; ++b) direct += std::pow(7.5 + b, -3.0);
  CHECK(power_sum(7.5, 3.0) == doctest::Approx(direct).epsilon(1e-10));
  CHECK(std::isinf(power_sum(1.0, 1.0)));
  CHECK(power_sum(1.0, INFINITY) == 1.0);
}

TEST_CASE("Schur bounds") {
  // direct summation oracle: partial sum plus integral tail bracket
  double partial = 1.0;
  const int cut = 200000;
  for (int k = 1; k <= cut; ++k) partial += 2.0 * std::pow(1.0 + k, -2.0);
  const double tail_hi = 2.0 / (cut + 1.0), tail_lo = 2.0 / (cut + 2.0);
  const auto conv = schur_bounds(PerturbationSpec::convolution(1.0, 2.0), 1);
  CHECK(conv.row == doctest::Approx(kPi2 / 3 - 1).epsilon(1e-9));
  CHECK(conv.col == doctest::Approx(kPi2 / 3 - 1).epsilon(1e-9));
  CHECK(conv.row >= partial + tail_lo - 1e-12);
  CHECK(conv.row <= partial + tail_hi + 1e-12);

  const auto identity = schur_bounds(PerturbationSpec::convolution(1.0, INFINITY), 1);
  CHECK(identity.row == 1.0);
  CHECK(identity.col == 1.0);
  const auto r1 = schur_bounds(PerturbationSpec::rank_one(unit_at(0)), 1);
  CHECK(r1.row == doctest::Approx(1.0));
  CHECK(r1.col == doctest::Approx(1.0));
  CHECK(std::isinf(schur_bounds(PerturbationSpec::separable(1.0, 0.9), 1).bound));
}

TEST_CASE("Hilbert-Schmidt norms") {
  CHECK(hs_norm(PerturbationSpec::rank_one(unit_at(0)), 1) == doctest::Approx(1.0));
  const auto e = PerturbationSpec::exponential(1.0, 1.0, true);
  CHECK(hs_norm(e, 1) == doctest::Approx(1.0 / (1.0 - std::exp(-2.0))).epsilon(1e-14));
  double direct = 0.0;
  for (int i = 0; i < 60; ++i)
    for (int j = 0; j < 60; ++j) direct += std::exp(-2.0 * (i + j));
  CHECK(hs_norm(e, 1) == doctest::Approx(std::sqrt(direct)).epsilon(1e-14));
  CHECK(std::isinf(hs_norm(PerturbationSpec::separable(1.0, 0.4), 1)));

  // two-sided power generator against direct summation
  const auto p = PerturbationSpec::power(1.0, 1.5);
  double sum = 0.0;
  for (int i = -3000; i <= 3000; ++i)
    for (int j = -3000; j <= 3000; ++j) sum += std::pow(1.0 + std::abs(i) + std::abs(j), -5.0);
  CHECK(hs_norm(p, 1) == doctest::Approx(std::sqrt(sum)).epsilon(1e-7));
}

TEST_CASE("window norm never exceeds the Schur and Hilbert-Schmidt bounds") {
  std::vector<PerturbationSpec> specs = {
      PerturbationSpec::exponential(0.7, 0.4), PerturbationSpec::power(1.2, 1.0),
      PerturbationSpec::separable(0.5, 1.3), PerturbationSpec::convolution(1.0, 2.0),
      PerturbationSpec::rank_one(unit_at(3), -0.8), box_spec(4)};
  for (const auto& v : specs) {
    const double measured = direct_window_norm(v, 48);
    const double bound = std::min(schur_bounds(v, 1).bound, hs_norm(v, 1));
    CHECK(measured <= bound + 1e-8);
  }
}

TEST_CASE("annulus sums n_V and p_V") {
  const auto sep = PerturbationSpec::separable(1.0, 1.0);
  std::vector<double> lr, lp;
  for (int k = 4; k <= 12; ++k) {
    const double r = std::ldexp(1.0, k);
    lr.push_back(std::log(r));
    lp.push_back(std::log(nv_pv(sep, 1, r).p_v));
  }
  const double slope = fit_line(lr, lp).slope;
  MESSAGE("separable sigma=1 p_V slope " << slope);
  CHECK(slope == doctest::Approx(-1.0).epsilon(0.1));

  const auto box = box_spec(5);
  const auto far = nv_pv(box, 1, 6.0);
  CHECK(far.n_v == 0.0);
  CHECK(far.p_v == 0.0);

  // sqrt n_V of the exponential generator is summable on the dyadic grid
  const auto ex = PerturbationSpec::exponential(1.0, 0.5);
  double s10 = 0.0, s20 = 0.0;
  for (int k = 0; k <= 20; ++k) {
    const double term = std::ldexp(1.0, k) * std::sqrt(nv_pv(ex, 1, std::ldexp(1.0, k)).n_v);
    if (k <= 10) s10 += term;
    s20 += term;
  }
  CHECK(s20 - s10 <= 1e-12 * s20);

  // consistency with the annulus-masked window matrix
  const auto w = LatticeWindow::two_sided(64);
  for (const auto& v : {box_spec(20), PerturbationSpec::rank_one({-30, 1, CVector::LinSpaced(61, 1.0, 2.0)})}) {
    const auto m = assemble_perturbation(v, w);
    for (double r : {2.0, 5.0, 9.0}) {
      const auto sums = nv_pv(v, 1, r);
      CMatrix d = m.to_dense();
      for (int i = 0; i < d.rows(); ++i) {
        const int a = std::abs(w.site_of(i));
        if (a < r || a > 2 * r) d.row(i).setZero();
      }
      const double rows = d.cwiseAbs().rowwise().sum().maxCoeff(), cols = d.cwiseAbs().colwise().sum().maxCoeff();
      CHECK(std::sqrt(rows * cols) <= std::sqrt(sums.n_v) * (1 + 1e-8));
      CHECK(d.norm() == doctest::Approx(std::sqrt(sums.p_v)).epsilon(1e-10));
    }
  }
}

TEST_CASE("masked norms against the window oracle") {
  const auto w = LatticeWindow::two_sided(1024);
  std::vector<PerturbationSpec> specs = {PerturbationSpec::separable(1.0, 1.0), PerturbationSpec::power(1.0, 1.0),
                                         PerturbationSpec::exponential(1.0, 0.3),
                                         PerturbationSpec::convolution(1.0, 2.0)};
  for (const auto& v : specs) {
    const auto m = assemble_perturbation(v, w);
    for (double r : {2.0, 8.0, 32.0}) {
      const double oracle = window_masked_norm(m, [r](int i) { return window_fn::theta(bracket(i) / r); });
      const double value = masked_norm(v, 1, r).value;
      CHECK(value == doctest::Approx(oracle).epsilon(1e-2));
    }
  }
  // rank one: ||psi|| ||theta psi||
  LatticeVector psi{0, 1, CVector(40)};
  for (int n = 0; n < 40; ++n) psi.values(n) = 1.0 / (1.0 + n);
  const auto r1 = PerturbationSpec::rank_one(psi);
  for (double r : {3.0, 10.0}) {
    double masked = 0.0;
    for (int n = 0; n < 40; ++n) masked += std::pow(window_fn::theta(bracket(n) / r) / (1.0 + n), 2);
    CHECK(masked_norm(r1, 1, r).value == doctest::Approx(psi.values.norm() * std::sqrt(masked)).epsilon(1e-12));
  }
  const auto box = box_spec(6);
  for (int k = 4; k <= 8; ++k) CHECK(masked_norm(box, 1, std::ldexp(1.0, k)).value == 0.0);
}

TEST_CASE("dyadic profile obeys the triangle inequality") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.2, 1.5);
  const auto w = LatticeWindow::two_sided(128);
  for (int trial = 0; trial < 4; ++trial) {
    const auto a = assemble_perturbation(PerturbationSpec::exponential(u(rng), u(rng)), w);
    const auto b = assemble_perturbation(PerturbationSpec::power(u(rng), u(rng)), w);
    const auto sum = a + b;
    for (int k = 0; k <= 6; ++k) {
      const double r = std::ldexp(1.0, k);
      const auto mask = [r](int i) { return window_fn::theta(bracket(i) / r); };
      CHECK(window_masked_norm(sum, mask) <= window_masked_norm(a, mask) + window_masked_norm(b, mask) + 1e-10);
    }
  }
}

TEST_CASE("compactness test") {
  const auto box = compactness_test(box_spec(5), 1, 1024);
  CHECK(box.verdict == Verdict::pass);
  for (std::size_t i = 0; i < box.radii.size(); ++i)
    if (box.radii[i] > 10) CHECK(box.norms[i] == 0.0);
  const auto identity = compactness_test(PerturbationSpec::convolution(1.0, INFINITY), 1, 1024);
  CHECK(identity.verdict == Verdict::inconclusive);
  for (double n : identity.norms) CHECK(n <= 1.0 + 1e-12);
  CHECK(identity.norms.back() == doctest::Approx(1.0));
  const auto ex = compactness_test(PerturbationSpec::exponential(1.0, 0.5), 1, 1024);
  CHECK(ex.verdict == Verdict::pass);
  CHECK(ex.slope < -1.0);
  // Hilbert-Schmidt although the Schur bound diverges
  CHECK(compactness_test(PerturbationSpec::separable(1.0, 1.0), 1).verdict == Verdict::pass);
  // translation invariant: the masked bounds stall, which cannot prove non-compactness
  CHECK(compactness_test(PerturbationSpec::convolution(1.0, 2.0), 1).verdict == Verdict::inconclusive);
}

TEST_CASE("C11 and Cs fits") {
  const auto ex = c11_test(PerturbationSpec::exponential(1.0, 0.5), 1);
  CHECK(ex.verdict == Verdict::pass);
  const auto p15 = c11_test(PerturbationSpec::power(1.0, 1.5), 1);
  MESSAGE("power s=1.5 slope " << p15.slope);
  CHECK(p15.verdict == Verdict::pass);
  const auto p1 = c11_test(PerturbationSpec::power(1.0, 1.0), 1);
  MESSAGE("power s=1 slope " << p1.slope);
  CHECK(p1.verdict == Verdict::fail);
  const auto sep = c11_test(PerturbationSpec::separable(1.0, 0.6), 1);
  MESSAGE("separable 0.6 slope " << sep.slope);
  CHECK(sep.verdict == Verdict::fail);
  CHECK(c11_test(box_spec(4), 1).verdict == Verdict::pass);

  const auto fit = cs_exponent(dyadic_profile(PerturbationSpec::power(1.0, 1.5), 1));
  MESSAGE("power s=1.5 fit " << fit.s << " +- " << fit.stderr_s);
  CHECK(fit.s >= 1.3);
  CHECK(fit.s <= 1.7);
  CHECK(std::isinf(cs_exponent(dyadic_profile(box_spec(4), 1, 10)).s));
  LatticeVector psi{0, 1, CVector(1 << 18)};
  for (int n = 0; n < (1 << 18); ++n) psi.values(n) = 1.0 / (1.0 + n);
  const auto r1 = cs_exponent(dyadic_profile(PerturbationSpec::rank_one(psi), 1, 14));
  MESSAGE("rank one (1+n)^-1 fit " << r1.s);
  CHECK(r1.s == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("verdicts are stable when k_max grows by one") {
  std::vector<PerturbationSpec> specs = {PerturbationSpec::exponential(1.0, 0.5), PerturbationSpec::power(1.0, 1.5),
                                         PerturbationSpec::separable(1.0, 0.6), box_spec(3)};
  for (const auto& v : specs) CHECK(c11_test(v, 1, 11).verdict == c11_test(v, 1, 12).verdict);
}
