// Acceptance suite: one line per criterion, exit status 1 if any criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tspec/eig.hpp"
#include "tspec/lap.hpp"
#include "tspec/mourre.hpp"
#include "tspec/perturb.hpp"
#include "tspec/scatter.hpp"
#include "tspec/symbol.hpp"

using namespace tspec;

namespace {

/// Accumulates named conditions; a criterion passes when all of them hold.
struct Checks {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << " [failed: " << what << "]";
    }
  }
  template <class T>
  void note(const std::string& name, T value) {
    detail << " " << name << "=" << value;
  }
};

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;  // <= 0: no runtime bound
  std::function<void(Checks&)> body;
};

OperatorModel laurent(MatrixSymbol sym) { return {std::move(sym), std::nullopt, WindowKind::two_sided}; }
OperatorModel toeplitz(MatrixSymbol sym) { return {std::move(sym), std::nullopt, WindowKind::one_sided}; }

CVector random_vector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  CVector v(n);
  for (int i = 0; i < n; ++i) v(i) = cplx(nd(rng), nd(rng));
  return v;
}

MatrixSymbol random_symbol(int n, int m, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  std::vector<CMatrix> c;
  for (int j = 0; j <= m; ++j) {
    CMatrix a(n, n);
    for (int r = 0; r < n; ++r)
      for (int s = 0; s < n; ++s) a(r, s) = cplx(nd(rng), nd(rng));
    if (j == 0) a = 0.5 * (a + a.adjoint()).eval();
    c.push_back(a);
  }
  return MatrixSymbol(c);
}

double relative_hermiticity(const BandedBlockMatrix& b) {
  return b.hermiticity_defect() / std::max(1.0, b.to_dense().cwiseAbs().maxCoeff());
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

void essential_gapped(Checks& c) {
  const auto ess = essential_spectrum(compute_bands(models::off_diagonal(2.0, 1.0), 2048));
  c.require(ess.size() == 2, "two intervals");
  if (ess.size() != 2) return;
  const double err = std::max({std::abs(ess[0].lo + 3), std::abs(ess[0].hi + 1), std::abs(ess[1].lo - 1),
                               std::abs(ess[1].hi - 3)});
  c.note("endpoint_error", err);
  c.require(err <= 1e-6, "endpoints [-3,-1] U [1,3] within 1e-6");
}

void essential_degenerate(Checks& c) {
  const auto ess = essential_spectrum(compute_bands(models::shift_pair(), 2048));
  c.require(ess.size() == 2, "two points");
  if (ess.size() != 2) return;
  const double err = std::max({std::abs(ess[0].lo + 1), std::abs(ess[0].hi + 1), std::abs(ess[1].lo - 1),
                               std::abs(ess[1].hi - 1)});
  c.note("error", err);
  c.require(err <= 1e-8, "{-1} U {1} within 1e-8");
}

void equal_hopping(Checks& c) {
  const auto sym = models::off_diagonal(1.0, 1.0);
  const auto bands = compute_bands(sym, 2048);
  double dev = 0.0;
  for (int k = 0; k < bands.grid_size(); ++k) {
    const double e = 2.0 * std::abs(std::cos(bands.grid[k] / 2.0));
    dev = std::max({dev, std::abs(bands.values(k, 0) + e), std::abs(bands.values(k, 1) - e)});
  }
  c.note("band_deviation", dev);
  c.require(dev <= 1e-8, "bands match -+2cos(p/2)");
  const auto kappa = compute_critical_set(sym, bands);
  const auto has = [&](double v, CriticalKind kind) {
    for (const auto& e : kappa.entries)
      if (near(e.value, v, 1e-6) && e.kind == kind) return true;
    return false;
  };
  c.note("critical_values", kappa.entries.size());
  c.require(kappa.entries.size() == 3, "three critical values");
  c.require(has(-2.0, CriticalKind::stationary) && has(2.0, CriticalKind::stationary), "stationary -2 and 2");
  c.require(has(0.0, CriticalKind::nonsmooth_crossing), "0 tagged nonsmooth crossing");
}

void gap_eigenvalue(Checks& c) {
  const auto pairs = gap_eigenvalues(models::off_diagonal(2.0, 1.0), nullptr, {-1.0, 1.0}, 256);
  c.note("certified", pairs.size());
  c.require(pairs.size() == 1, "exactly one certified eigenvalue for a > b");
  if (pairs.size() == 1) {
    const auto& p = pairs[0];
    c.note("value", p.value);
    c.require(std::abs(p.value) <= 1e-8, "|value| <= 1e-8");
    const int comp = std::abs(p.vector(p.window.offset(0))) > std::abs(p.vector(p.window.offset(0) + 1)) ? 0 : 1;
    double worst = 0.0;
    for (int n = 0; n < 20; ++n) {
      const cplx ratio = p.vector(p.window.offset(n + 1) + comp) / p.vector(p.window.offset(n) + comp);
      worst = std::max(worst, std::abs(ratio + 0.5));
    }
    c.note("ratio_error", worst);
    c.require(worst <= 1e-6, "consecutive ratio -0.5 on the first 20 sites");
  }
  const auto none = gap_eigenvalues(models::off_diagonal(1.0, 2.0), nullptr, {-1.0, 1.0}, 256);
  c.note("certified_a<b", none.size());
  c.require(none.empty(), "no certified eigenvalue for a < b");
}

void commutator_identity(Checks& c) {
  const auto sym = models::scalar_cos();
  const auto bands = compute_bands(sym, 2048);
  const Interval delta{-0.5, 0.5};
  const auto zeta = build_window(delta, compute_critical_set(sym, bands));
  const RVector f = build_F(bands, 0, zeta);
  double grid = 0.0;
  for (int k = 0; k < bands.grid_size(); ++k)
    grid = std::max(grid, std::abs(f(k) * bands.slopes(k, 0) - zeta(bands.values(k, 0))));
  const double matrix = build_conjugate(sym, delta, 2048).commutator_defect(0);
  c.note("grid_defect", grid);
  c.note("matrix_defect", matrix);
  c.require(grid <= 1e-10, "F lambda' - zeta(lambda) <= 1e-10");
  c.require(matrix <= 1e-8, "[lambda, i a] - zeta(lambda) <= 1e-8");
}

void mourre(Checks& c) {
  const auto sym = models::scalar_cos();
  const Interval delta{-0.5, 0.5};
  const auto w = LatticeWindow::two_sided(512), w2 = LatticeWindow::two_sided(1024);
  const auto conj = build_conjugate(sym, delta, 4096), conj2 = build_conjugate(sym, delta, 8192);
  const auto free = mourre_estimate_check(assemble_laurent(sym, w), conj, delta, 200);
  c.note("free_lower_bound", free.lower_bound);
  c.require(free.lower_bound >= 0.9, "unperturbed minimum eigenvalue >= 0.9");
  const auto v = PerturbationSpec::rank_one(LatticeVector{0, 1, CVector::Ones(1)}, 0.3);
  const auto pert = mourre_estimate_check(assemble_laurent(sym, w) + assemble_perturbation(v, w), conj, delta, 200);
  const auto pert2 = mourre_estimate_check(assemble_laurent(sym, w2) + assemble_perturbation(v, w2), conj2, delta, 200);
  c.note("defect_rank", pert.defect_rank);
  c.note("defect_rank_2L", pert2.defect_rank);
  c.require(pert.defect_rank <= 3, "rank-one defect rank <= 3");
  c.require(std::abs(pert.defect_rank - pert2.defect_rank) <= 2, "defect rank stable under L -> 2L");
}

void lap(Checks& c) {
  using clock = std::chrono::steady_clock;
  double slowest = 0.0;
  auto timed = [&](auto&& f) {
    const auto t0 = clock::now();
    auto r = f();
    slowest = std::max(slowest, std::chrono::duration<double>(clock::now() - t0).count());
    return r;
  };
  const auto cos = laurent(models::scalar_cos());
  const auto inside = timed([&] { return lap_sweep(cos, 0.3, 1.0, 1024); });
  c.note("x0.3_ratio", inside.decade_ratio);
  c.note("x0.3_agreement", inside.window_agreement);
  c.require(inside.verdict == LapVerdict::bounded && inside.decade_ratio <= 1.5 && inside.window_agreement <= 0.1,
            "bounded at x=0.3");
  const auto edge = timed([&] { return lap_sweep(cos, 1.0, 1.0, 1024); });
  c.note("x1_ratio", edge.decade_ratio);
  c.require(edge.verdict == LapVerdict::growing && edge.decade_ratio >= 3.0, "growing at x=1");
  const auto gap = timed([&] { return lap_sweep(toeplitz(models::off_diagonal(2.0, 1.0)), 0.0, 1.0, 1024); });
  c.note("x0_verdict", to_string(gap.verdict));
  c.require(gap.verdict == LapVerdict::near_eigenvalue, "near-eigenvalue at x=0 for the gapped Toeplitz model");
  c.note("slowest_energy_s", slowest);
  c.require(slowest < 60.0, "each energy under 60 s");
}

void holder(Checks& c) {
  const auto fit = holder_fit(laurent(models::scalar_cos()), 0.3, 1.0, 16384);
  c.note("exponent", fit.exponent);
  c.require(!fit.inconclusive && fit.exponent >= 0.35, "fitted exponent >= 0.35");
}

void classification(Checks& c) {
  const auto sep = PerturbationSpec::separable(1.0, 1.0);
  std::vector<double> lr, lp;
  for (int k = 4; k <= 12; ++k) {
    const double r = std::ldexp(1.0, k);
    lr.push_back(std::log(r));
    lp.push_back(std::log(nv_pv(sep, 1, r).p_v));
  }
  const double slope = fit_line(lr, lp).slope;
  c.note("p_v_slope", slope);
  c.require(near(slope, -1.0, 0.1), "separable p_V slope -1 +- 0.1");
  const auto c11 = c11_test(PerturbationSpec::exponential(1.0, 0.5), 1);
  c.note("c11_exponential", to_string(c11.verdict));
  c.require(c11.verdict == Verdict::pass, "exponential passes C11");
  const double schur = schur_bounds(PerturbationSpec::convolution(1.0, 2.0), 1).row;
  c.note("schur", schur);
  c.require(near(schur, kPi * kPi / 3 - 1, 1e-6), "Schur constant pi^2/3 - 1");
}

void propagation(Checks& c) {
  const auto model = laurent(models::scalar_cos());
  const auto decay = propagation_decay(model, {0.2, 0.6}, 1.0, default_time_grid(100.0), 4096);
  c.note("slope_sigma1", decay.slope);
  c.require(decay.slope <= -0.75, "sigma=1 slope <= -0.75");
  const auto control = propagation_decay(model, {0.2, 0.6}, 0.0, default_time_grid(100.0), 4096);
  c.note("slope_sigma0", control.slope);
  c.require(std::abs(control.slope) <= 0.05, "sigma=0 slope within 0.05 of 0");
}

void wave_operators_complete(Checks& c) {
  const auto sym = models::scalar_cos();
  const auto bands = compute_bands(sym);
  LatticeVector psi{0, 1, CVector(80)};
  for (int n = 0; n < 80; ++n) psi.values(n) = std::exp(-0.5 * n);
  const auto v = PerturbationSpec::rank_one(psi, 1.0);
  const double t_max = 200.0;
  const auto h = OperatorModel{sym, v, WindowKind::one_sided}.assemble(4096);
  const auto h0 = toeplitz(sym).assemble(4096);
  const auto plan = make_plan(h, h0);
  WaveOptions opts;
  opts.test_band = widest_band(bands);
  const auto pac = p_ac_projector(sym, bands);
  const auto basis = localized_basis(sym, bands, h.window(), t_max);
  // bound states certified on a small window, exponentially localized
  auto bound = gap_eigenvalues(sym, &v, {1.0 + 1e-6, 10.0}, 256);
  const auto below = gap_eigenvalues(sym, &v, {-10.0, -1.0 - 1e-6}, 256);
  bound.insert(bound.end(), below.begin(), below.end());
  c.note("bound_states", bound.size());
  // inner products are preserved within one sign; across signs they form the scattering matrix
  for (int sign : {1, -1}) {
    const auto runs = wave_operators(h, h0, pac, basis, sign, default_wave_grid(t_max), plan, opts);
    double iso = 0.0, inter = 0.0;
    bool decreasing = true;
    for (const auto& r : runs) {
      iso = std::max(iso, r.isometry_defect);
      inter = std::max(inter, r.intertwining_residual);
      for (std::size_t k = 1; k < r.cauchy_defects.size(); ++k)
        decreasing &= r.cauchy_defects[k] <= std::max(r.cauchy_defects[k - 1], 10.0 * plan.epsilon * t_max);
    }
    const auto verdict = completeness_check(runs, bound);
    const std::string tag = sign > 0 ? "+" : "-";
    c.note("isometry" + tag, iso);
    c.note("intertwining" + tag, inter);
    c.note("gram" + tag, verdict.gram_defect);
    c.note("overlap" + tag, verdict.bound_state_overlap);
    c.require(iso <= 1e-2, "isometry defect <= 1e-2 (" + tag + ")");
    c.require(inter <= 1e-2, "intertwining residual <= 1e-2 (" + tag + ")");
    c.require(decreasing, "Cauchy defects decreasing across the T-grid (" + tag + ")");
    c.require(verdict.verdict == Verdict::pass, "completeness verdict pass (" + tag + "): " + verdict.reason);
    c.require(verdict.bound_state_overlap <= 2e-2, "bound-state orthogonality <= 2e-2 (" + tag + ")");
  }
}

void properties(Checks& c) {
  std::mt19937_64 rng(0x5EED);
  double herm = 0.0;
  for (int trial = 0; trial < 12; ++trial) {
    const int n = 1 + trial % 3;
    const auto sym = random_symbol(n, 1 + trial % 3, rng);
    herm = std::max({herm, relative_hermiticity(assemble_laurent(sym, LatticeWindow::two_sided(24, n))),
                     relative_hermiticity(assemble_toeplitz(sym, LatticeWindow::one_sided(24, n))),
                     relative_hermiticity(assemble_hankel_corner(sym, LatticeWindow::two_sided(24, n)))});
  }
  for (const auto& v : {PerturbationSpec::exponential(0.7, 0.4), PerturbationSpec::power(1.2, 1.0),
                        PerturbationSpec::separable(0.5, 1.3), PerturbationSpec::convolution(1.0, 2.0)})
    herm = std::max(herm, relative_hermiticity(assemble_perturbation(v, LatticeWindow::two_sided(24))));
  c.note("hermiticity", herm);
  c.require(herm <= 1e-13, "assemblies Hermitian to 1e-13");

  bool monotone = true, counts = true;
  std::uniform_real_distribution<double> ux(-4.0, 4.0), up(0.2, 1.5);
  for (int trial = 0; trial < 3; ++trial) {
    const auto s = models::periodic_jacobi({up(rng), up(rng), up(rng)}, {ux(rng) / 4, ux(rng) / 4, ux(rng) / 4});
    const auto w = LatticeWindow::two_sided(12, 3);
    const auto b = assemble_laurent(s, w) + assemble_perturbation(PerturbationSpec::exponential(up(rng), up(rng)), w);
    const auto dense = hermitian_eig_dense(b.to_dense()).values;
    std::vector<double> xs(100);
    for (auto& x : xs) x = ux(rng);
    std::sort(xs.begin(), xs.end());
    int prev = -1;
    for (double x : xs) {
      const int below = inertia_count(b, x).count_below;
      monotone &= below >= prev && below == (dense.array() < x).count();
      prev = below;
    }
    const Interval range{std::min(xs[20], xs[60]), std::max(xs[20], xs[60]) + 1e-3};
    const auto pairs = eigs_in_interval(b, range);
    counts &= static_cast<int>(pairs.size()) ==
              inertia_count(b, range.hi).count_below - inertia_count(b, range.lo).count_below;
  }
  c.require(monotone, "inertia monotone and equal to dense counts");
  c.require(counts, "eigenpair count equals inertia difference");

  double unitarity = 0.0, group = 0.0, eps = 0.0;
  for (int trial = 0; trial < 3; ++trial) {
    const auto sym = random_symbol(2, 2, rng);
    const auto h = assemble_laurent(sym, LatticeWindow::two_sided(64, 2));
    const auto plan = make_plan(h);
    eps = plan.epsilon;
    const CVector psi = random_vector(h.dim(), rng).normalized();
    const double t = 10.0 * up(rng), s = 10.0 * up(rng);
    const CVector pt = chebyshev_propagate(h, psi, t, plan);
    unitarity = std::max(unitarity, std::abs(pt.norm() - 1.0) / (1.0 + t));
    group = std::max(group, (chebyshev_propagate(h, psi, t + s, plan) -
                             chebyshev_propagate(h, chebyshev_propagate(h, psi, s, plan), t, plan))
                                .norm());
  }
  c.note("unitarity", unitarity);
  c.note("group_law", group);
  c.require(unitarity <= eps, "propagator unitary");
  c.require(group <= 3.0 * eps, "propagator group law");

  bool triangle = true;
  const auto w = LatticeWindow::two_sided(64);
  for (int t = 0; t < 10; ++t) {
    const CVector x = random_vector(w.dim(), rng), y = random_vector(w.dim(), rng);
    triangle &= besov_norm(x + y, w) <= besov_norm(x, w) + besov_norm(y, w) + 1e-12;
  }
  c.require(triangle, "besov norm triangle inequality");
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "essential spectrum of the gapped pair", 5.0, essential_gapped},
      {2, "essential spectrum of the flat pair", 0.0, essential_degenerate},
      {3, "equal-hopping bands and critical set", 0.0, equal_hopping},
      {4, "gap eigenvalue and its eigenvector", 30.0, gap_eigenvalue},
      {5, "commutator identity", 0.0, commutator_identity},
      {6, "Mourre estimate", 60.0, mourre},
      {7, "LAP sweep verdicts", 0.0, lap},
      {8, "Holder fit", 0.0, holder},
      {9, "perturbation classification", 30.0, classification},
      {10, "propagation decay", 300.0, propagation},
      {11, "wave operators and completeness", 600.0, wave_operators_complete},
      {12, "property suites", 0.0, properties},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Checks c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      cr.body(c);
    } catch (const std::exception& e) {
      c.ok = false;
      c.detail << " [error: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (cr.budget_seconds > 0.0 && secs >= cr.budget_seconds) {
      c.ok = false;
      c.detail << " [failed: runtime over " << cr.budget_seconds << " s]";
    }
    failed += !c.ok;
    std::printf("criterion %2d %s: %s (%.1f s)%s\n", cr.id, c.ok ? "PASS" : "FAIL", cr.name.c_str(), secs,
                c.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
