#include "tspec/symbol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <unsupported/Eigen/FFT>

namespace tspec {

namespace {

double spectral_norm(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues()(0);
}

bool is_power_of_two(int k) { return k > 0 && (k & (k - 1)) == 0; }

}  // namespace

MatrixSymbol::MatrixSymbol(std::vector<CMatrix> nonnegative) : coeffs_(std::move(nonnegative)) {
  if (coeffs_.empty()) throw Error(ErrorKind::precondition, "symbol", "at least A_0 is required");
  n_ = static_cast<int>(coeffs_[0].rows());
  if (n_ < 1) throw Error(ErrorKind::precondition, "symbol", "block size must be positive");
  for (const auto& c : coeffs_) {
    if (c.rows() != n_ || c.cols() != n_)
      throw Error(ErrorKind::precondition, "symbol", "all coefficients must be N x N");
  }
  const double scale = std::max(1.0, coeffs_[0].cwiseAbs().maxCoeff());
  if ((coeffs_[0] - coeffs_[0].adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw Error(ErrorKind::precondition, "symbol", "A_0 is not Hermitian");
  coeffs_[0] = 0.5 * (coeffs_[0] + coeffs_[0].adjoint()).eval();
  // trailing zero coefficients do not count towards the cutoff
  while (coeffs_.size() > 1 && coeffs_.back().cwiseAbs().maxCoeff() == 0.0) coeffs_.pop_back();
}

CMatrix MatrixSymbol::coeff(int j) const {
  const int m = cutoff();
  if (j > m || j < -m) return CMatrix::Zero(n_, n_);
  return j >= 0 ? coeffs_[j] : CMatrix(coeffs_[-j].adjoint());
}

double MatrixSymbol::coefficient_mass() const {
  double s = spectral_norm(coeffs_[0]);
  for (std::size_t j = 1; j < coeffs_.size(); ++j) s += 2.0 * spectral_norm(coeffs_[j]);
  return s;
}

CMatrix MatrixSymbol::eval(double p) const {
  CMatrix h = coeffs_[0];
  for (std::size_t j = 1; j < coeffs_.size(); ++j) {
    const CMatrix t = coeffs_[j] * std::exp(kI * (static_cast<double>(j) * p));
    h += t + t.adjoint();
  }
  return h;
}

CMatrix MatrixSymbol::eval_derivative(double p) const {
  CMatrix d = CMatrix::Zero(n_, n_);
  for (std::size_t j = 1; j < coeffs_.size(); ++j) {
    const double jd = static_cast<double>(j);
    const CMatrix t = coeffs_[j] * (kI * jd * std::exp(kI * (jd * p)));
    d += t + t.adjoint();
  }
  return d;
}

CMatrix eval_symbol(const MatrixSymbol& sym, double p) { return sym.eval(p); }

SmallEigen jacobi_eigen(const CMatrix& input, double off_tol, int max_sweeps) {
  const int n = static_cast<int>(input.rows());
  CMatrix a = 0.5 * (input + input.adjoint());
  CMatrix v = CMatrix::Identity(n, n);
  const double fro = std::max(a.norm(), std::numeric_limits<double>::min());

  auto off_norm = [&] {
    double s = 0.0;
    for (int q = 0; q < n; ++q)
      for (int p = 0; p < q; ++p) s += 2.0 * std::norm(a(p, q));
    return std::sqrt(s);
  };

  int sweep = 0;
  for (; sweep < max_sweeps && off_norm() > off_tol * fro; ++sweep) {
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double mag = std::abs(a(p, q));
        if (mag <= 1e-300) continue;
        const cplx phase = a(p, q) / mag;  // e^{i phi}
        const double theta = (a(q, q).real() - a(p, p).real()) / (2.0 * mag);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        // J = diag(1, e^{-i phi}) * [[c, s], [-s, c]] on the (p, q) plane
        const cplx jpp = c, jpq = s, jqp = -s * std::conj(phase), jqq = c * std::conj(phase);
        for (int r = 0; r < n; ++r) {
          const cplx arp = a(r, p), arq = a(r, q);
          a(r, p) = arp * jpp + arq * jqp;
          a(r, q) = arp * jpq + arq * jqq;
          const cplx vrp = v(r, p), vrq = v(r, q);
          v(r, p) = vrp * jpp + vrq * jqp;
          v(r, q) = vrp * jpq + vrq * jqq;
        }
        for (int r = 0; r < n; ++r) {
          const cplx apr = a(p, r), aqr = a(q, r);
          a(p, r) = std::conj(jpp) * apr + std::conj(jqp) * aqr;
          a(q, r) = std::conj(jpq) * apr + std::conj(jqq) * aqr;
        }
        a(p, q) = a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
      }
    }
  }
  if (off_norm() > off_tol * fro * 10.0)
    throw Error(ErrorKind::numeric, "jacobi_eigen",
                "no convergence after " + std::to_string(sweep) + " sweeps");

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int x, int y) { return a(x, x).real() < a(y, y).real(); });
  SmallEigen out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (int k = 0; k < n; ++k) {
    out.values(k) = a(order[k], order[k]).real();
    out.vectors.col(k) = v.col(order[k]);
  }
  out.sweeps = sweep;
  return out;
}

double BandStructure::spectral_diameter() const {
  if (values.size() == 0) return 0.0;
  return values.maxCoeff() - values.minCoeff();
}

namespace {

struct GapMinimum {
  double p;
  double gap;
  double value;
};

// Golden-section minimum of the gap between sorted eigenvalues j and j+1 on [lo, hi].
GapMinimum minimize_gap(const MatrixSymbol& sym, int j, double lo, double hi) {
  auto gap = [&](double p) {
    const RVector v = jacobi_eigen(sym.eval(p)).values;
    return v(j + 1) - v(j);
  };
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = gap(x1), f2 = gap(x2);
  for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(lo)); ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = gap(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = gap(x2);
    }
  }
  const double p = 0.5 * (lo + hi);
  const RVector v = jacobi_eigen(sym.eval(p)).values;
  return {p, v(j + 1) - v(j), 0.5 * (v(j) + v(j + 1))};
}

double crossing_tolerance(const BandStructure& b) { return 1e-9 * (b.spectral_diameter() + 1.0); }

// Column map from grid point `from` to `to` (to = from + 1 or the wrap 0) by maximal eigenvector
// overlap; an adjacent swap is kept only when the gap really closes in between.
std::vector<int> continuation(const MatrixSymbol& sym, const BandStructure& b, int from, int to) {
  const int n = b.block_size;
  const RMatrix overlap = (b.vectors[from].adjoint() * b.vectors[to]).cwiseAbs2();
  std::vector<int> match(n, -1);
  std::vector<bool> row_used(n, false), col_used(n, false);
  for (int step = 0; step < n; ++step) {
    int br = -1, bc = -1;
    double best = -1.0;
    for (int r = 0; r < n; ++r) {
      if (row_used[r]) continue;
      for (int c = 0; c < n; ++c) {
        if (!col_used[c] && overlap(r, c) > best) {
          best = overlap(r, c);
          br = r;
          bc = c;
        }
      }
    }
    row_used[br] = col_used[bc] = true;
    match[br] = bc;
  }
  double p_from = b.grid[from], p_to = b.grid[to];
  if (p_to <= p_from) p_to += 2.0 * kPi;
  for (int j = 0; j + 1 < n; ++j) {
    if (match[j] == j + 1 && match[j + 1] == j) {
      const GapMinimum m = minimize_gap(sym, j, p_from, p_to);
      if (m.gap > crossing_tolerance(b)) std::swap(match[j], match[j + 1]);
    }
  }
  return match;
}

// Follows analytic branches through crossings, continuing from the last grid point whose
// eigenvalues are separated by more than `degenerate`.
void track_branches(const MatrixSymbol& sym, BandStructure& b, double degenerate) {
  const int kk = b.grid_size(), n = b.block_size;
  auto separated = [&](int k) {
    for (int j = 0; j + 1 < n; ++j)
      if (b.values(k, j + 1) - b.values(k, j) <= degenerate) return false;
    return true;
  };
  b.branch.assign(kk, std::vector<int>(n));
  for (int a = 0; a < n; ++a) b.branch[0][a] = a;
  int ref = 0;
  for (int k = 1; k < kk; ++k) {
    const std::vector<int> match = continuation(sym, b, ref, k);
    for (int a = 0; a < n; ++a) b.branch[k][a] = match[b.branch[ref][a]];
    if (separated(k) || !separated(ref)) ref = k;
  }
  b.wrap = continuation(sym, b, kk - 1, 0);
}

}  // namespace

BandStructure compute_bands(const MatrixSymbol& sym, int grid_size) {
  const int m = sym.cutoff();
  if (!is_power_of_two(grid_size) || grid_size < 4 * m + 4)
    throw Error(ErrorKind::precondition, "compute_bands",
                "grid size must be a power of two and at least 4M+4");
  const int n = sym.block_size();
  BandStructure b;
  b.block_size = n;
  b.grid.resize(grid_size);
  b.values.resize(grid_size, n);
  b.slopes.resize(grid_size, n);
  b.vectors.resize(grid_size);
  const double tol = 1e-10 * std::max(sym.coefficient_mass(), 1e-300);

  for (int k = 0; k < grid_size; ++k) {
    const double p = -kPi + 2.0 * kPi * k / grid_size;
    b.grid[k] = p;
    const CMatrix h = sym.eval(p);
    SmallEigen e;
    try {
      e = jacobi_eigen(h);
    } catch (const Error& err) {
      throw Error(ErrorKind::numeric, "compute_bands",
                  "eigensolver failed at p = " + std::to_string(p) + " (" + err.what() + ")");
    }
    const CMatrix dh = sym.eval_derivative(p);
    for (int j = 0; j < n; ++j) {
      b.values(k, j) = e.values(j);
      const CVector w = e.vectors.col(j);
      b.slopes(k, j) = w.dot(dh * w).real();
      b.max_residual = std::max(b.max_residual, (h * w - e.values(j) * w).norm());
    }
    b.vectors[k] = std::move(e.vectors);
  }
  if (b.max_residual > tol)
    throw Error(ErrorKind::numeric, "compute_bands", "eigenpair residual above tolerance");

  const double diam = b.spectral_diameter();
  track_branches(sym, b, 1e-6 * (diam + 1.0));
  for (int a = 0; a < n; ++a) {
    // the closing value at p = pi continues the last grid point across the wrap
    const double closing = b.values(0, b.wrap[b.branch[grid_size - 1][a]]);
    Interval iv{closing, closing};
    for (int k = 0; k < grid_size; ++k) {
      iv.lo = std::min(iv.lo, b.branch_value(k, a));
      iv.hi = std::max(iv.hi, b.branch_value(k, a));
    }
    b.band_intervals.push_back(iv);
    b.flat.push_back(iv.width() <= 1e-10 * (diam + 1.0));
  }
  return b;
}

std::vector<Interval> essential_spectrum(const BandStructure& bands) {
  std::vector<Interval> ivs = bands.band_intervals;
  std::sort(ivs.begin(), ivs.end(), [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
  const double tol = 1e-9 * (bands.spectral_diameter() + 1.0);
  std::vector<Interval> out;
  for (const auto& iv : ivs) {
    if (!out.empty() && iv.lo <= out.back().hi + tol) {
      out.back().hi = std::max(out.back().hi, iv.hi);
    } else {
      out.push_back(iv);
    }
  }
  return out;
}

std::string to_string(CriticalKind kind) {
  switch (kind) {
    case CriticalKind::stationary: return "stationary";
    case CriticalKind::nonsmooth_crossing: return "nonsmooth-crossing";
    case CriticalKind::flat_band: return "flat-band";
  }
  return "unknown";
}

std::vector<double> CriticalSet::values() const {
  std::vector<double> v;
  for (const auto& e : entries) v.push_back(e.value);
  return v;
}

double CriticalSet::distance(double x) const {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& e : entries) d = std::min(d, std::abs(e.value - x));
  return d;
}

namespace {

double sorted_eigenvalue(const MatrixSymbol& sym, double p, int j) {
  return jacobi_eigen(sym.eval(p)).values(j);
}

double band_slope(const MatrixSymbol& sym, double p, int j) {
  const SmallEigen e = jacobi_eigen(sym.eval(p));
  const CVector w = e.vectors.col(j);
  return w.dot(sym.eval_derivative(p) * w).real();
}

}  // namespace

CriticalSet compute_critical_set(const MatrixSymbol& sym, const BandStructure& b) {
  const int kk = b.grid_size();
  const int n = b.block_size;
  const double h = 2.0 * kPi / kk;
  const double diam = b.spectral_diameter();
  const double merge_tol = 1e-6 * std::max(diam, 1e-12);
  auto wrap = [kk](int k) { return ((k % kk) + kk) % kk; };

  std::vector<CriticalPoint> cands;
  // crossing_near[j][k] marks grid points close to a detected kink of band j
  std::vector<std::vector<bool>> near_kink(n, std::vector<bool>(kk, false));

  for (int a = 0; a < n; ++a) {
    if (b.flat[a]) cands.push_back({b.band_intervals[a].mid(), CriticalKind::flat_band, b.grid[0], a});
  }
  auto sorted_flat = [&](int j) {
    return b.values.col(j).maxCoeff() - b.values.col(j).minCoeff() <= 1e-10 * (diam + 1.0);
  };

  // Crossings of adjacent sorted bands: V-shaped local minima of the gap.
  for (int j = 0; j + 1 < n; ++j) {
    if (sorted_flat(j) && sorted_flat(j + 1)) continue;
    std::vector<double> gap(kk);
    for (int k = 0; k < kk; ++k) gap[k] = b.values(k, j + 1) - b.values(k, j);
    const double zero_tol = 1e-12 * (diam + 1.0);
    for (int k = 0; k < kk; ++k) {
      const double gl = gap[wrap(k - 1)], g0 = gap[k], gr = gap[wrap(k + 1)];
      if (!(g0 <= gl && g0 < gr)) continue;
      if (gl <= zero_tol && gr <= zero_tol) continue;  // coincident bands, not a crossing
      const double slope = std::max(std::abs(g0 - gl), std::abs(gr - g0)) / h;
      if (g0 > h * slope) continue;
      GapMinimum m{b.grid[k], g0, 0.5 * (b.values(k, j) + b.values(k, j + 1))};
      if (g0 > crossing_tolerance(b)) m = minimize_gap(sym, j, b.grid[k] - h, b.grid[k] + h);
      if (m.gap > crossing_tolerance(b)) continue;  // avoided crossing: smooth, handled as stationary
      const double p = m.p >= kPi ? m.p - 2.0 * kPi : (m.p < -kPi ? m.p + 2.0 * kPi : m.p);
      cands.push_back({m.value, CriticalKind::nonsmooth_crossing, p, j});
      cands.push_back({m.value, CriticalKind::nonsmooth_crossing, p, j + 1});
      for (int off = -4; off <= 4; ++off) {
        near_kink[j][wrap(k + off)] = true;
        near_kink[j + 1][wrap(k + off)] = true;
      }
    }
  }

  // Stationary points: sign changes of the branch slope away from kinks, refined by bisection.
  for (int a = 0; a < n; ++a) {
    if (b.flat[a]) continue;
    const double stat_tol = 1e-8 * (b.band_intervals[a].width() + 1.0);
    std::vector<double> roots;
    for (int k = 0; k < kk; ++k) {
      const int k1 = wrap(k + 1);
      const int j = b.branch[k][a];
      if (near_kink[j][k] || near_kink[j][k1]) continue;
      const int cont = k1 == 0 ? b.wrap[j] : b.branch[k1][a];
      if (cont != j) continue;
      const double s0 = b.slopes(k, j), s1 = b.slopes(k1, j);
      double root;
      if (s0 == 0.0) {
        root = b.grid[k];
      } else if ((s0 < 0) != (s1 < 0) && s1 != 0.0) {
        double lo = b.grid[k], hi = lo + h;
        double flo = s0;
        for (int it = 0; it < 100 && hi - lo > 1e-15; ++it) {
          const double mid = 0.5 * (lo + hi);
          const double fm = band_slope(sym, mid, j);
          if (fm == 0.0) {
            lo = hi = mid;
            break;
          }
          if ((fm < 0) == (flo < 0)) {
            lo = mid;
            flo = fm;
          } else {
            hi = mid;
          }
        }
        root = 0.5 * (lo + hi);
      } else {
        continue;
      }
      if (std::abs(band_slope(sym, root, j)) >= stat_tol) continue;
      for (double r : roots) {
        double d = std::abs(r - root);
        d = std::min(d, 2.0 * kPi - d);
        if (d > 1e-9 && d < 2.0 * h)
          throw Error(ErrorKind::numeric, "compute_critical_set",
                      "stationary points closer than two grid cells on branch " + std::to_string(a) +
                          "; refine the grid");
      }
      roots.push_back(root);
      const double p = root >= kPi ? root - 2.0 * kPi : root;
      cands.push_back({sorted_eigenvalue(sym, p, j), CriticalKind::stationary, p, a});
    }
  }

  // Merge by value; flat-band > crossing > stationary when tags collide.
  auto rank = [](CriticalKind k) {
    return k == CriticalKind::flat_band ? 2 : (k == CriticalKind::nonsmooth_crossing ? 1 : 0);
  };
  std::sort(cands.begin(), cands.end(),
            [](const CriticalPoint& x, const CriticalPoint& y) { return x.value < y.value; });
  CriticalSet out;
  for (const auto& c : cands) {
    if (!out.entries.empty() && std::abs(c.value - out.entries.back().value) <= merge_tol) {
      if (rank(c.kind) > rank(out.entries.back().kind)) out.entries.back() = c;
      continue;
    }
    out.entries.push_back(c);
  }
  return out;
}

DecayEstimate coefficient_decay(const MatrixSymbol& sym) {
  DecayEstimate d;
  std::vector<double> x, y;
  for (int j = 0; j <= sym.cutoff(); ++j) {
    const double nrm = spectral_norm(sym.coeff(j));
    if (nrm > 0.0) {
      x.push_back(j);
      y.push_back(std::log(nrm));
    }
  }
  if (x.size() >= 3 && static_cast<int>(x.size()) == sym.cutoff() + 1) d.rate = -fit_line(x, y).slope;
  return d;
}

namespace {

template <typename Vec>
Vec spectral_derivative_impl(const Vec& samples) {
  const int kk = static_cast<int>(samples.size());
  Eigen::FFT<double> fft;
  std::vector<cplx> in(kk), freq;
  for (int k = 0; k < kk; ++k) in[k] = samples(k);
  fft.fwd(freq, in);
  for (int m = 0; m < kk; ++m) {
    int wave = m <= kk / 2 ? m : m - kk;
    if (kk % 2 == 0 && m == kk / 2) wave = 0;
    freq[m] *= kI * static_cast<double>(wave);
  }
  std::vector<cplx> out;
  fft.inv(out, freq);
  Vec d(kk);
  for (int k = 0; k < kk; ++k) {
    if constexpr (std::is_same_v<typename Vec::Scalar, double>) {
      d(k) = out[k].real();
    } else {
      d(k) = out[k];
    }
  }
  return d;
}

}  // namespace

RVector spectral_derivative(const RVector& samples) { return spectral_derivative_impl(samples); }
CVector spectral_derivative(const CVector& samples) { return spectral_derivative_impl(samples); }

namespace models {

MatrixSymbol scalar_cos() {
  CMatrix a0 = CMatrix::Zero(1, 1), a1 = CMatrix::Constant(1, 1, 0.5);
  return MatrixSymbol({a0, a1});
}

MatrixSymbol off_diagonal(double a, double b) {
  CMatrix a0 = CMatrix::Zero(2, 2), a1 = CMatrix::Zero(2, 2);
  a0(0, 1) = a0(1, 0) = b;
  a1(1, 0) = a;  // coefficient of e^{ip}
  return MatrixSymbol({a0, a1});
}

MatrixSymbol shift_pair() { return off_diagonal(1.0, 0.0); }

MatrixSymbol diag_cos_zero() {
  CMatrix a0 = CMatrix::Zero(2, 2), a1 = CMatrix::Zero(2, 2);
  a1(0, 0) = 0.5;
  return MatrixSymbol({a0, a1});
}

MatrixSymbol periodic_jacobi(const std::vector<double>& a, const std::vector<double>& b) {
  const int n = static_cast<int>(a.size());
  if (n < 2 || static_cast<int>(b.size()) != n)
    throw Error(ErrorKind::precondition, "periodic_jacobi", "need N >= 2 hoppings and N on-site values");
  CMatrix a0 = CMatrix::Zero(n, n), a1 = CMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) a0(i, i) = b[i];
  for (int i = 0; i + 1 < n; ++i) {
    a0(i, i + 1) += a[i];
    a0(i + 1, i) += a[i];
  }
  a1(0, n - 1) += a[n - 1];  // a_N e^{ip} in the upper-right corner
  return MatrixSymbol({a0, a1});
}

}  // namespace models

}  // namespace tspec
