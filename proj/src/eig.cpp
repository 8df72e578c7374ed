#include "tspec/eig.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <unsupported/Eigen/FFT>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

namespace tspec {

DenseEigen hermitian_eig_dense(const CMatrix& m) {
  if (m.rows() != m.cols()) throw Error(ErrorKind::precondition, "hermitian_eig_dense", "matrix not square");
  if (m.rows() > 4096) throw Error(ErrorKind::precondition, "hermitian_eig_dense", "dimension above 4096");
  if (m.rows() == 0) return {};
  const CMatrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  if (es.info() != Eigen::Success)
    throw Error(ErrorKind::numeric, "hermitian_eig_dense", "QL iteration did not converge");
  return {es.eigenvalues(), es.eigenvectors()};
}

namespace {

double matrix_scale(const BandedBlockMatrix& b) {
  const Interval g = b.gershgorin();
  return std::max({1.0, std::abs(g.lo), std::abs(g.hi)});
}

CMatrix seeded_block(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  CMatrix x(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) x(r, c) = cplx(nd(rng), nd(rng));
  return x;
}

CMatrix orthonormalize(const CMatrix& x) {
  Eigen::HouseholderQR<CMatrix> qr(x);
  return qr.householderQ() * CMatrix::Identity(x.rows(), x.cols());
}

CMatrix apply_block(const BandedBlockMatrix& b, const CMatrix& x) {
  CMatrix y(x.rows(), x.cols());
  for (int c = 0; c < x.cols(); ++c) y.col(c) = b.apply(x.col(c));
  return y;
}

struct Cluster {
  double center;
  int count;
};

struct Bisector {
  const SpectrumSlicer& slicer;
  double tol;
  std::vector<Cluster> leaves;

  void split(double lo, double hi, int clo, int chi) {
    if (chi <= clo) return;
    if (hi - lo <= tol) {
      leaves.push_back({0.5 * (lo + hi), chi - clo});
      return;
    }
    const double mid = 0.5 * (lo + hi);
    const InertiaProbe p = slicer.count(mid);
    const int cm = std::clamp(p.count_below, clo, chi);
    split(lo, p.shift, clo, cm);
    split(p.shift, hi, cm, chi);
  }
};

// Subspace inverse iteration about `shift` for `count` eigenvalues, plus guard vectors.
bool cluster_vectors(const BandedBlockMatrix& b, double shift, int count, const EigsOptions& opts,
                     std::uint64_t seed, RVector& values, CMatrix& vectors) {
  const int n = b.dim();
  const int cols = std::min(n, count + 2);
  BandLU lu(b, shift);
  if (!(lu.min_pivot() > 0.0)) return false;
  CMatrix x = orthonormalize(seeded_block(n, cols, seed));
  for (int it = 0; it < 5; ++it) {
    CMatrix y(n, cols);
    for (int c = 0; c < cols; ++c) y.col(c) = lu.solve(x.col(c));
    if (!y.allFinite()) return false;
    x = orthonormalize(y);
    const CMatrix hx = apply_block(b, x);
    const CMatrix proj = x.adjoint() * hx;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (proj + proj.adjoint()));
    std::vector<int> order(cols);
    for (int k = 0; k < cols; ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](int i, int j) {
      return std::abs(es.eigenvalues()(i) - shift) < std::abs(es.eigenvalues()(j) - shift);
    });
    values.resize(count);
    vectors.resize(n, count);
    double worst = 0.0;
    for (int k = 0; k < count; ++k) {
      values(k) = es.eigenvalues()(order[k]);
      vectors.col(k) = x * es.eigenvectors().col(order[k]);
      worst = std::max(worst, (b.apply(vectors.col(k)) - values(k) * vectors.col(k)).norm());
    }
    if (it >= 1 && worst <= opts.residual_tol) return true;
  }
  return false;
}

}  // namespace

SpectrumSlicer::SpectrumSlicer(const BandedBlockMatrix& b) : scale_(matrix_scale(b)) {
  const lapack_int n = b.dim(), kd = b.scalar_bandwidth();
  std::vector<std::complex<double>> ab(static_cast<std::size_t>(kd + 1) * n);
  for (lapack_int c = 0; c < n; ++c)
    for (lapack_int r = c; r <= std::min<lapack_int>(n - 1, c + kd); ++r)
      ab[static_cast<std::size_t>(c) * (kd + 1) + (r - c)] = b.entry(r, c);
  std::vector<double> d(n), e(std::max<lapack_int>(n - 1, 1));
  std::complex<double> q_unused;
  const lapack_int info =
      LAPACKE_zhbtrd(LAPACK_COL_MAJOR, 'N', 'L', n, kd, ab.data(), kd + 1, d.data(), e.data(), &q_unused, 1);
  if (info != 0) throw Error(ErrorKind::numeric, "inertia_count", "band reduction failed (info " + std::to_string(info) + ")");
  diag_ = Eigen::Map<RVector>(d.data(), n);
  off_sq_.resize(std::max<lapack_int>(n - 1, 0));
  for (lapack_int i = 0; i + 1 < n; ++i) off_sq_(i) = e[i] * e[i];
}

InertiaProbe SpectrumSlicer::sturm(double x) const {
  InertiaProbe p;
  p.shift = x;
  const int n = dim();
  int negatives = 0;
  double q = 1.0;
  for (int i = 0; i < n; ++i) {
    q = diag_(i) - x - (i > 0 ? off_sq_(i - 1) / q : 0.0);
    if (q == 0.0) return p;
    if (q < 0.0) ++negatives;
  }
  p.count_below = negatives;
  p.factorization_ok = true;
  return p;
}

InertiaProbe SpectrumSlicer::count(double x) const {
  double shift = x;
  for (int attempt = 0; attempt < 8; ++attempt) {
    InertiaProbe p = sturm(shift);
    if (p.factorization_ok) return p;
    shift += 1e-10 * scale_ * (attempt + 1);
  }
  InertiaProbe failed;
  failed.shift = x;
  return failed;
}

InertiaProbe inertia_count(const BandedBlockMatrix& b, double x) { return SpectrumSlicer(b).count(x); }

double boundary_mass(const CVector& v, const LatticeWindow& window) {
  double s = 0.0;
  const int nb = window.block_size;
  for (int site = window.first_site(); site <= window.last_site(); ++site)
    if (window.near_edge(site, 0.1)) s += v.segment(window.offset(site), nb).squaredNorm();
  return std::sqrt(s);
}

std::vector<ValidatedEigenpair> eigs_in_interval(const BandedBlockMatrix& b, Interval range,
                                                 const EigsOptions& opts) {
  if (!(range.lo < range.hi)) throw Error(ErrorKind::precondition, "eigs_in_interval", "empty interval");
  const SpectrumSlicer slicer(b);
  const double scale = slicer.scale();
  const InertiaProbe plo = slicer.count(range.lo);
  const InertiaProbe phi = slicer.count(range.hi);
  if (!plo.factorization_ok || !phi.factorization_ok)
    throw Error(ErrorKind::numeric, "eigs_in_interval", "inertia factorization broke down after retries");
  const int total = phi.count_below - plo.count_below;
  if (total > opts.max_eigs)
    throw Error(ErrorKind::numeric, "eigs_in_interval",
                std::to_string(total) + " eigenvalues in interval exceed max_eigs; split the interval");

  Bisector bis{slicer, opts.bisection_tol * scale, {}};
  bis.split(plo.shift, phi.shift, plo.count_below, phi.count_below);

  // merge leaves closer than the cluster spacing
  std::vector<Cluster> clusters;
  for (const auto& leaf : bis.leaves) {
    if (!clusters.empty() && leaf.center - clusters.back().center <= opts.cluster_tol * scale) {
      Cluster& c = clusters.back();
      c.center = (c.center * c.count + leaf.center * leaf.count) / (c.count + leaf.count);
      c.count += leaf.count;
    } else {
      clusters.push_back(leaf);
    }
  }

  std::vector<ValidatedEigenpair> out;
  const LatticeWindow& w = b.window();
  std::uint64_t seed = opts.seed;
  for (const auto& cl : clusters) {
    RVector values;
    CMatrix vectors;
    bool ok = false;
    for (int attempt = 0; attempt < 3 && !ok; ++attempt) {
      const double offset = (0.37 + attempt) * opts.bisection_tol * scale;
      ok = cluster_vectors(b, cl.center + offset, cl.count, opts, seed + attempt, values, vectors);
      if (!ok) {
        // rebisect the cluster more tightly before retrying
        Bisector fine{slicer, 1e-3 * opts.bisection_tol * scale, {}};
        const double lo = cl.center - opts.cluster_tol * scale, hi = cl.center + opts.cluster_tol * scale;
        const InertiaProbe a = slicer.count(lo), z = slicer.count(hi);
        fine.split(a.shift, z.shift, a.count_below, z.count_below);
        if (!fine.leaves.empty())
          ok = cluster_vectors(b, fine.leaves.front().center + 0.37e-3 * opts.bisection_tol * scale, cl.count,
                               opts, seed + 17 + attempt, values, vectors);
      }
    }
    if (!ok)
      throw Error(ErrorKind::numeric, "eigs_in_interval",
                  "inverse iteration stagnated near " + std::to_string(cl.center));
    ++seed;

    if (cl.count > 1) {
      // rotate inside the cluster so the first vectors avoid the artificial edges
      CMatrix edge = CMatrix::Zero(cl.count, cl.count);
      for (int site = w.first_site(); site <= w.last_site(); ++site) {
        if (!w.near_edge(site, 0.1)) continue;
        const CMatrix rows = vectors.middleRows(w.offset(site), w.block_size);
        edge += rows.adjoint() * rows;
      }
      Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (edge + edge.adjoint()));
      vectors = vectors * es.eigenvectors();
    }
    for (int k = 0; k < cl.count; ++k) {
      ValidatedEigenpair p;
      p.vector = vectors.col(k).normalized();
      const CVector hv = b.apply(p.vector);
      p.value = p.vector.dot(hv).real();
      p.residual = (hv - p.value * p.vector).norm();
      p.boundary_mass = boundary_mass(p.vector, w);
      p.window = w;
      p.multiplicity = cl.count;
      if (p.residual > opts.residual_tol)
        throw Error(ErrorKind::numeric, "eigs_in_interval",
                    "residual " + std::to_string(p.residual) + " above tolerance");
      out.push_back(std::move(p));
    }
  }
  return out;
}

std::vector<ValidatedEigenpair> certify_gap_eigenvalues(const BandedBlockMatrix& at_l, const BandedBlockMatrix& at_2l,
                                                        Interval gap, const GapGates& gates,
                                                        const EigsOptions& opts) {
  // stay 10 stability tolerances away from the gap ends
  Interval inner{gap.lo + 10.0 * gates.stability, gap.hi - 10.0 * gates.stability};
  if (!(inner.lo < inner.hi)) return {};
  const auto first = eigs_in_interval(at_l, inner, opts);
  const auto second = eigs_in_interval(at_2l, inner, opts);
  std::vector<ValidatedEigenpair> accepted;
  std::vector<bool> used(second.size(), false);
  for (const auto& p : first) {
    if (p.boundary_mass > gates.boundary_mass) continue;
    int best = -1;
    for (std::size_t k = 0; k < second.size(); ++k) {
      if (used[k] || second[k].boundary_mass > gates.boundary_mass) continue;
      if (best < 0 || std::abs(second[k].value - p.value) < std::abs(second[best].value - p.value))
        best = static_cast<int>(k);
    }
    if (best < 0) continue;
    const double stability = std::abs(second[best].value - p.value);
    if (stability > gates.stability) continue;
    used[best] = true;
    ValidatedEigenpair q = second[best];
    q.stability = stability;
    accepted.push_back(std::move(q));
  }
  std::sort(accepted.begin(), accepted.end(), [](const auto& a, const auto& b) { return a.value < b.value; });
  const double scale = matrix_scale(at_2l);
  for (std::size_t i = 0; i < accepted.size();) {
    std::size_t j = i + 1;
    while (j < accepted.size() && accepted[j].value - accepted[j - 1].value <= opts.cluster_tol * scale) ++j;
    for (std::size_t k = i; k < j; ++k) accepted[k].multiplicity = static_cast<int>(j - i);
    i = j;
  }
  return accepted;
}

std::vector<ValidatedEigenpair> gap_eigenvalues(const MatrixSymbol& sym, const PerturbationSpec* perturbation,
                                                Interval gap, int half_length, WindowKind kind,
                                                const GapGates& gates, const EigsOptions& opts) {
  const BandStructure bands = compute_bands(sym, 1024);
  const double tol = 1e-9 * (bands.spectral_diameter() + 1.0);
  for (const auto& band : essential_spectrum(bands)) {
    if (gap.lo < band.hi - tol && gap.hi > band.lo + tol)
      throw Error(ErrorKind::precondition, "gap_eigenvalues", "gap intersects a band");
  }
  OperatorModel model{sym, std::nullopt, kind};
  if (perturbation) model.perturbation = *perturbation;
  return certify_gap_eigenvalues(model.assemble(half_length), model.assemble(2 * half_length), gap, gates, opts);
}

std::function<double(double)> erf_window(Interval plateau, double shoulder) {
  return [plateau, shoulder](double x) {
    return 0.5 * (std::erf((x - plateau.lo) / shoulder) - std::erf((x - plateau.hi) / shoulder));
  };
}

namespace {

// Chebyshev coefficients of phi on `hull` from M first-kind nodes: phi = c0/2 + sum c_k T_k.
std::vector<double> chebyshev_coefficients(const std::function<double(double)>& phi, Interval hull, int m) {
  std::vector<std::complex<double>> g(2 * m);
  for (int k = 0; k < m; ++k) {
    const double t = std::cos(kPi * (k + 0.5) / m);
    const double f = phi(hull.mid() + 0.5 * hull.width() * t);
    g[k] = f;
    g[2 * m - 1 - k] = f;
  }
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, g);
  std::vector<double> c(m);
  for (int k = 0; k < m; ++k) {
    const cplx rot = std::exp(cplx(0.0, -kPi * k / (2.0 * m)));
    c[k] = (rot * spec[k]).real() / m;
  }
  return c;
}


}  // namespace

Interval filter_hull(const BandedBlockMatrix& b) {
  Interval g = b.gershgorin();
  const double pad = 1e-3 * std::max(g.width(), 1e-12);
  return {g.lo - pad, g.hi + pad};
}

int required_filter_degree(const std::function<double(double)>& phi, Interval hull, double tolerance,
                           int max_degree) {
  const auto c = chebyshev_coefficients(phi, hull, 2 * max_degree);
  std::vector<double> tail(c.size() + 1, 0.0);  // tail[d] = sum_{k >= d} |c_k|
  for (int k = static_cast<int>(c.size()) - 1; k >= 0; --k) tail[k] = tail[k + 1] + std::abs(c[k]);
  for (int d = 0; d <= max_degree; ++d)
    if (tail[d + 1] <= tolerance) return d;
  return -1;
}

SpectralFilter::SpectralFilter(const BandedBlockMatrix& b, std::function<double(double)> phi, int degree,
                               double tolerance)
    : b_(b), hull_(filter_hull(b)), degree_(degree) {
  if (degree < 1) throw Error(ErrorKind::precondition, "spectral_filter", "degree must be positive");
  const int m = std::max(4096, 4 * degree);
  const auto c = chebyshev_coefficients(phi, hull_, m);
  coeffs_.assign(c.begin(), c.begin() + degree + 1);
  tail_ = 0.0;
  for (int k = degree + 1; k < m; ++k) tail_ += std::abs(c[k]);
  if (tail_ > tolerance) {
    const int need = required_filter_degree(phi, hull_, tolerance);
    throw Error(ErrorKind::precondition, "spectral_filter",
                "degree " + std::to_string(degree) + " leaves tail " + std::to_string(tail_) + "; required degree " +
                    (need < 0 ? std::string("> 8192") : std::to_string(need)));
  }
}

CVector SpectralFilter::apply(const CVector& x) const {
  const double alpha = 2.0 / hull_.width(), beta = -hull_.mid() * alpha;
  auto t_of = [&](const CVector& v) -> CVector { return alpha * b_.apply(v) + beta * v; };
  CVector t_prev = x;
  CVector t_cur = t_of(x);
  CVector y = 0.5 * coeffs_[0] * t_prev + coeffs_[1] * t_cur;
  for (int k = 2; k <= degree_; ++k) {
    CVector t_next = 2.0 * t_of(t_cur) - t_prev;
    y += coeffs_[k] * t_next;
    t_prev = std::move(t_cur);
    t_cur = std::move(t_next);
  }
  return y;
}

double SpectralFilter::trace() const {
  const int n = b_.dim();
  const long reach = static_cast<long>(degree_) * b_.scalar_bandwidth();
  const long period = std::min<long>(n, 2 * reach + 1);
  double tr = 0.0;
  for (long color = 0; color < period; ++color) {
    CVector v = CVector::Zero(n);
    for (long k = color; k < n; k += period) v(k) = 1.0;
    const CVector fv = apply(v);
    for (long k = color; k < n; k += period) tr += fv(k).real();
  }
  return tr;
}

}  // namespace tspec
