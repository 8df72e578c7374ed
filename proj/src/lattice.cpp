#include "tspec/lattice.hpp"

#include <tuple>

#include <algorithm>
#include <cmath>

namespace tspec {

bool LatticeWindow::near_edge(int site, double fraction) const {
  const int margin = std::max(1, static_cast<int>(std::ceil(fraction * half_length)));
  if (kind == WindowKind::one_sided) return site > last_site() - margin;
  return site < first_site() + margin || site > last_site() - margin;
}

BandedBlockMatrix::BandedBlockMatrix(LatticeWindow window, int block_bandwidth)
    : window_(window), block_bw_(std::max(0, block_bandwidth)) {
  kd_ = (block_bw_ + 1) * window_.block_size - 1;
  kd_ = std::min(kd_, std::max(0, window_.dim() - 1));
  band_ = CMatrix::Zero(2 * kd_ + 1, window_.dim());
  row_lo_.assign(window_.dim(), window_.dim());
  row_hi_.assign(window_.dim(), -1);
}

void BandedBlockMatrix::widen(int block_bandwidth) {
  if (block_bandwidth <= block_bw_) return;
  BandedBlockMatrix wider(window_, block_bandwidth);
  const int n = dim();
  for (int c = 0; c < n; ++c) {
    for (int r = std::max(0, c - kd_); r <= std::min(n - 1, c + kd_); ++r) wider.at(r, c) = entry(r, c);
  }
  band_ = std::move(wider.band_);
  kd_ = wider.kd_;
  block_bw_ = wider.block_bw_;
}

cplx BandedBlockMatrix::entry(int r, int c) const {
  if (std::abs(r - c) > kd_) return 0.0;
  return band_(kd_ + r - c, c);
}

CMatrix BandedBlockMatrix::block(int row_site, int col_site) const {
  const int n = window_.block_size;
  CMatrix b(n, n);
  const int r0 = window_.offset(row_site), c0 = window_.offset(col_site);
  for (int a = 0; a < n; ++a)
    for (int c = 0; c < n; ++c) b(a, c) = entry(r0 + a, c0 + c);
  return b;
}

void BandedBlockMatrix::add_block(int row_site, int col_site, const CMatrix& blk, bool record_patch) {
  if (!window_.contains(row_site) || !window_.contains(col_site)) return;
  widen(std::abs(row_site - col_site));
  const int n = window_.block_size;
  const int r0 = window_.offset(row_site), c0 = window_.offset(col_site);
  if (row_site == col_site) {
    const CMatrix h = 0.5 * (blk + blk.adjoint());
    for (int a = 0; a < n; ++a)
      for (int c = 0; c < n; ++c) at(r0 + a, c0 + c) += h(a, c);
  } else {
    for (int a = 0; a < n; ++a) {
      for (int c = 0; c < n; ++c) {
        at(r0 + a, c0 + c) += blk(a, c);
        at(c0 + c, r0 + a) += std::conj(blk(a, c));
      }
    }
  }
  if (record_patch) {
    patch_.push_back({row_site, col_site, blk});
    if (row_site != col_site) patch_.push_back({col_site, row_site, blk.adjoint()});
  }
}

void BandedBlockMatrix::shift_diagonal(cplx s) {
  for (int c = 0; c < dim(); ++c) at(c, c) += s;
}

CVector BandedBlockMatrix::apply(const CVector& x) const {
  const int n = dim();
  if (x.size() != n) throw Error(ErrorKind::precondition, "apply_operator", "dimension mismatch");
  CVector y = CVector::Zero(n);
  for (int c = 0; c < n; ++c) {
    const cplx xc = x(c);
    if (xc == 0.0) continue;
    const int rlo = std::max(row_lo_[c], c - kd_), rhi = std::min(row_hi_[c], c + kd_);
    for (int r = rlo; r <= rhi; ++r) y(r) += band_(kd_ + r - c, c) * xc;
  }
  return y;
}

CMatrix BandedBlockMatrix::to_dense() const {
  const int n = dim();
  CMatrix d = CMatrix::Zero(n, n);
  for (int c = 0; c < n; ++c)
    for (int r = std::max(0, c - kd_); r <= std::min(n - 1, c + kd_); ++r) d(r, c) = band_(kd_ + r - c, c);
  return d;
}

double BandedBlockMatrix::hermiticity_defect() const {
  double d = 0.0;
  const int n = dim();
  for (int c = 0; c < n; ++c)
    for (int r = std::max(0, c - kd_); r <= std::min(n - 1, c + kd_); ++r)
      d = std::max(d, std::abs(entry(r, c) - std::conj(entry(c, r))));
  return d;
}

double BandedBlockMatrix::max_abs_entry() const { return band_.size() ? band_.cwiseAbs().maxCoeff() : 0.0; }

Interval support_after(const BandedBlockMatrix& b, int lo0, int hi0, int steps) {
  const LatticeWindow& w = b.window();
  const int kd = b.scalar_bandwidth(), n = b.dim(), first = w.first_site();
  // per-site range of sites reached along nonzero entries
  std::vector<int> tlo(w.sites()), thi(w.sites());
  for (int s = 0; s < w.sites(); ++s) tlo[s] = thi[s] = first + s;
  for (int c = 0; c < n; ++c)
    for (int d = 0; d <= 2 * kd; ++d) {
      const int r = c + d - kd;
      if (r < 0 || r >= n || b.band()(d, c) == cplx(0.0)) continue;
      const int s = w.site_of(c) - first, t = w.site_of(r);
      tlo[s] = std::min(tlo[s], t);
      thi[s] = std::max(thi[s], t);
    }
  int lo = std::max(lo0, first), hi = std::min(hi0, w.last_site());
  for (int k = 0; k < steps; ++k) {
    int nlo = lo, nhi = hi;
    for (int s = lo; s <= hi; ++s) {
      nlo = std::min(nlo, tlo[s - first]);
      nhi = std::max(nhi, thi[s - first]);
    }
    if (nlo == lo && nhi == hi) break;
    lo = nlo;
    hi = nhi;
  }
  return {double(lo), double(hi)};
}

Interval BandedBlockMatrix::gershgorin() const {
  const int n = dim();
  Interval g{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (int r = 0; r < n; ++r) {
    double radius = 0.0;
    for (int c = std::max(0, r - kd_); c <= std::min(n - 1, r + kd_); ++c)
      if (c != r) radius += std::abs(entry(r, c));
    const double center = entry(r, r).real();
    g.lo = std::min(g.lo, center - radius);
    g.hi = std::max(g.hi, center + radius);
  }
  return g;
}

BandedBlockMatrix& BandedBlockMatrix::operator+=(const BandedBlockMatrix& other) {
  if (!(other.window_ == window_)) throw Error(ErrorKind::precondition, "BandedBlockMatrix", "window mismatch");
  widen(other.block_bw_);
  const int n = dim();
  for (int c = 0; c < n; ++c)
    for (int r = std::max(other.row_lo_[c], c - other.kd_); r <= std::min(other.row_hi_[c], c + other.kd_); ++r)
      at(r, c) += other.entry(r, c);
  patch_.insert(patch_.end(), other.patch_.begin(), other.patch_.end());
  return *this;
}

BandedBlockMatrix& BandedBlockMatrix::operator-=(const BandedBlockMatrix& other) {
  if (!(other.window_ == window_)) throw Error(ErrorKind::precondition, "BandedBlockMatrix", "window mismatch");
  widen(other.block_bw_);
  const int n = dim();
  for (int c = 0; c < n; ++c)
    for (int r = std::max(other.row_lo_[c], c - other.kd_); r <= std::min(other.row_hi_[c], c + other.kd_); ++r)
      at(r, c) -= other.entry(r, c);
  for (const auto& p : other.patch_) patch_.push_back({p.row_site, p.col_site, -p.block});
  return *this;
}

BandedBlockMatrix operator+(BandedBlockMatrix a, const BandedBlockMatrix& b) { return a += b; }
BandedBlockMatrix operator-(BandedBlockMatrix a, const BandedBlockMatrix& b) { return a -= b; }

CVector LatticeVector::at(int site) const {
  const int k = site - first_site;
  if (k < 0 || k >= sites()) return CVector::Zero(block_size);
  return values.segment(k * block_size, block_size);
}

CVector LatticeVector::on(const LatticeWindow& window) const {
  CVector out = CVector::Zero(window.dim());
  for (int k = 0; k < sites(); ++k) {
    const int site = first_site + k;
    if (window.contains(site))
      out.segment(window.offset(site), block_size) = values.segment(k * block_size, block_size);
  }
  return out;
}

PerturbationSpec PerturbationSpec::exponential(double c, double kappa, bool one_sided) {
  PerturbationSpec s;
  s.kind = Kind::exponential;
  s.scale = c;
  s.rate = kappa;
  s.one_sided = one_sided;
  return s;
}

PerturbationSpec PerturbationSpec::power(double c, double s_exp, bool one_sided) {
  PerturbationSpec s;
  s.kind = Kind::power;
  s.scale = c;
  s.rate = s_exp;
  s.one_sided = one_sided;
  return s;
}

PerturbationSpec PerturbationSpec::separable(double c, double sigma, bool one_sided) {
  PerturbationSpec s;
  s.kind = Kind::separable;
  s.scale = c;
  s.rate = sigma;
  s.one_sided = one_sided;
  return s;
}

PerturbationSpec PerturbationSpec::convolution(double c, double q) {
  PerturbationSpec s;
  s.kind = Kind::convolution;
  s.scale = c;
  s.rate = q;
  return s;
}

PerturbationSpec PerturbationSpec::rank_one(LatticeVector psi, double strength) {
  PerturbationSpec s;
  s.kind = Kind::rank_one;
  s.psi = std::move(psi);
  s.strength = strength;
  s.one_sided = s.psi.first_site >= 0;
  return s;
}

PerturbationSpec PerturbationSpec::explicit_list(std::vector<Entry> entries, bool one_sided) {
  PerturbationSpec s;
  s.kind = Kind::explicit_entries;
  s.entries = std::move(entries);
  s.one_sided = one_sided;
  return s;
}

PerturbationSpec PerturbationSpec::box(int extent, std::vector<Entry> entries, bool one_sided) {
  PerturbationSpec s;
  s.kind = Kind::box;
  s.extent = extent;
  s.entries = std::move(entries);
  s.one_sided = one_sided;
  for (const auto& e : s.entries) {
    if (std::abs(e.i) > extent || std::abs(e.j) > extent)
      throw Error(ErrorKind::precondition, "PerturbationSpec::box", "entry outside the declared box");
  }
  return s;
}

bool PerturbationSpec::is_generator() const {
  return kind == Kind::exponential || kind == Kind::power || kind == Kind::separable || kind == Kind::convolution;
}

double PerturbationSpec::profile(int i, int j) const {
  if (one_sided && (i < 0 || j < 0)) return 0.0;
  const double ai = std::abs(i), aj = std::abs(j);
  switch (kind) {
    case Kind::exponential: return scale * std::exp(-rate * (ai + aj));
    case Kind::power: return scale * std::pow(1.0 + ai + aj, -1.0 - rate);
    case Kind::separable: return scale * std::pow(1.0 + ai, -rate) * std::pow(1.0 + aj, -rate);
    case Kind::convolution: return scale * std::pow(1.0 + std::abs(i - j), -rate);
    default: break;
  }
  throw Error(ErrorKind::precondition, "PerturbationSpec::profile", "not a generator family");
}

CMatrix PerturbationSpec::block(int i, int j, int n) const {
  if (one_sided && (i < 0 || j < 0)) return CMatrix::Zero(n, n);
  if (is_generator()) {
    const CMatrix pat = pattern.size() ? pattern : CMatrix(CMatrix::Identity(n, n));
    return profile(i, j) * pat;
  }
  if (kind == Kind::rank_one) {
    if (psi.block_size != n) throw Error(ErrorKind::precondition, "PerturbationSpec", "psi block size mismatch");
    return strength * psi.at(i) * psi.at(j).adjoint();
  }
  CMatrix b = CMatrix::Zero(n, n);
  bool direct = false;
  for (const auto& e : entries) {
    if (e.i == i && e.j == j) {
      b = e.block;
      direct = true;
    }
  }
  if (!direct) {
    for (const auto& e : entries)
      if (e.i == j && e.j == i) b = e.block.adjoint();
  }
  return b;
}

void PerturbationSpec::validate(int n) const {
  if (pattern.size()) {
    if (pattern.rows() != n || (pattern - pattern.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
      throw Error(ErrorKind::precondition, "PerturbationSpec", "pattern must be a Hermitian N x N matrix");
  }
  if (is_generator() && (scale < 0.0 || rate <= 0.0))
    throw Error(ErrorKind::precondition, "PerturbationSpec", "generator parameters must be positive");
  for (const auto& e : entries) {
    if (e.block.rows() != n || e.block.cols() != n)
      throw Error(ErrorKind::precondition, "PerturbationSpec", "entry block size mismatch");
    if (e.i == e.j && (e.block - e.block.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
      throw Error(ErrorKind::precondition, "PerturbationSpec",
                  "diagonal block at site " + std::to_string(e.i) + " is not Hermitian");
    for (const auto& f : entries) {
      if (f.i == e.j && f.j == e.i && (f.block - e.block.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
        throw Error(ErrorKind::precondition, "PerturbationSpec",
                    "entries (" + std::to_string(e.i) + "," + std::to_string(e.j) + ") violate v_ij = v_ji^*");
    }
  }
}

namespace window_fn {

double theta(double x) {
  if (x <= 1.0 || x >= 2.0) return 0.0;
  return std::exp(-1.0 / ((x - 1.0) * (2.0 - x)));
}

double theta_tilde(double x) {
  if (std::abs(x) >= 2.0) return 0.0;
  return std::exp(-x * x / (4.0 - x * x));
}

double smooth_step(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / x), b = std::exp(-1.0 / (1.0 - x));
  return a / (a + b);
}

double xi(double x) { return smooth_step(2.0 * std::abs(x) - 1.0); }

}  // namespace window_fn

namespace {

void require_window(const MatrixSymbol& sym, const LatticeWindow& w, WindowKind kind, const char* op) {
  if (w.kind != kind) throw Error(ErrorKind::precondition, op, "wrong window kind");
  if (w.block_size != sym.block_size()) throw Error(ErrorKind::precondition, op, "block size mismatch");
  // at least one site must see the full stencil
  if (w.sites() < 2 * sym.cutoff() + 1)
    throw Error(ErrorKind::precondition, op, "window too small: need at least 2M+1 sites");
}

BandedBlockMatrix assemble_convolution(const MatrixSymbol& sym, const LatticeWindow& w) {
  const int m = sym.cutoff();
  BandedBlockMatrix b(w, m);
  for (int i = w.first_site(); i <= w.last_site(); ++i) {
    for (int d = 0; d <= m; ++d) {
      const int j = i - d;  // B(i, j) = A_{i-j}
      if (w.contains(j)) b.add_block(i, j, sym.coeff(d));
    }
  }
  return b;
}

}  // namespace

BandedBlockMatrix assemble_laurent(const MatrixSymbol& sym, const LatticeWindow& w) {
  require_window(sym, w, WindowKind::two_sided, "assemble_laurent");
  return assemble_convolution(sym, w);
}

BandedBlockMatrix assemble_toeplitz(const MatrixSymbol& sym, const LatticeWindow& w) {
  require_window(sym, w, WindowKind::one_sided, "assemble_toeplitz");
  return assemble_convolution(sym, w);
}

BandedBlockMatrix assemble_hankel_corner(const MatrixSymbol& sym, const LatticeWindow& w) {
  require_window(sym, w, WindowKind::two_sided, "assemble_hankel_corner");
  const int m = sym.cutoff();
  BandedBlockMatrix b(w, m);
  // blocks with i >= 0 > j and i - j <= M; the mirrored blocks come from add_block
  for (int i = 0; i < m; ++i)
    for (int j = i - m; j <= -1; ++j) b.add_block(i, j, sym.coeff(i - j), true);
  return b;
}

BandedBlockMatrix assemble_perturbation(const PerturbationSpec& spec, const LatticeWindow& w) {
  const int n = w.block_size;
  spec.validate(n);
  BandedBlockMatrix b(w, 0);
  // blocks are staged so the band is widened once
  std::vector<std::tuple<int, int, CMatrix>> staged;
  int bandwidth = 0;
  auto add = [&](int i, int j) {
    if (spec.one_sided && (i < 0 || j < 0)) return;
    if (!w.contains(i) || !w.contains(j)) return;
    CMatrix blk = spec.block(i, j, n);
    if (blk.cwiseAbs().maxCoeff() == 0.0) return;
    bandwidth = std::max(bandwidth, std::abs(i - j));
    staged.emplace_back(i, j, std::move(blk));
  };
  auto guard = [&](int bandwidth_sites) {
    const double storage = (2.0 * (bandwidth_sites + 1) * n) * w.dim();
    if (storage > 6e7)
      throw Error(ErrorKind::precondition, "assemble_perturbation",
                  "perturbation too dense for this window; use the perturb module for classification");
  };
  switch (spec.kind) {
    case PerturbationSpec::Kind::explicit_entries:
    case PerturbationSpec::Kind::box: {
      for (const auto& e : spec.entries) {
        if (e.i >= e.j) add(e.i, e.j);
        else {
          bool mirrored = false;
          for (const auto& f : spec.entries) mirrored |= (f.i == e.j && f.j == e.i);
          if (!mirrored) add(e.j, e.i);
        }
      }
      break;
    }
    case PerturbationSpec::Kind::rank_one: {
      const int lo = std::max(spec.psi.first_site, w.first_site());
      const int hi = std::min(spec.psi.first_site + spec.psi.sites() - 1, w.last_site());
      guard(std::max(0, hi - lo));
      for (int i = lo; i <= hi; ++i)
        for (int j = lo; j <= i; ++j) add(i, j);
      break;
    }
    case PerturbationSpec::Kind::exponential: {
      // entries below 1e-17 C are dropped
      const int radius = static_cast<int>(std::ceil(std::log(1e17) / spec.rate));
      const int lo = std::max(w.first_site(), -radius), hi = std::min(w.last_site(), radius);
      for (int i = lo; i <= hi; ++i)
        for (int j = lo; j <= i; ++j)
          if (std::abs(i) + std::abs(j) <= radius) add(i, j);
      break;
    }
    default: {
      guard(w.sites());
      for (int i = w.first_site(); i <= w.last_site(); ++i)
        for (int j = w.first_site(); j <= i; ++j) add(i, j);
      break;
    }
  }
  b.widen(bandwidth);
  for (const auto& [i, j, blk] : staged) b.add_block(i, j, blk, true);
  return b;
}

LatticeWindow OperatorModel::window(int half_length) const {
  return kind == WindowKind::one_sided ? LatticeWindow::one_sided(half_length, symbol.block_size())
                                       : LatticeWindow::two_sided(half_length, symbol.block_size());
}

BandedBlockMatrix OperatorModel::assemble(int half_length) const {
  const LatticeWindow w = window(half_length);
  BandedBlockMatrix h = kind == WindowKind::one_sided ? assemble_toeplitz(symbol, w) : assemble_laurent(symbol, w);
  if (perturbation) h += assemble_perturbation(*perturbation, w);
  return h;
}

CVector apply_operator(const BandedBlockMatrix& b, const CVector& x) { return b.apply(x); }

CVector weight_vector(const CVector& x, double s, const LatticeWindow& w) {
  if (x.size() != w.dim()) throw Error(ErrorKind::precondition, "weight_vector", "dimension mismatch");
  CVector y = x;
  for (int k = 0; k < w.dim(); ++k) {
    const double site = w.site_of(k);
    y(k) *= std::pow(1.0 + site * site, -0.5 * s);
  }
  return y;
}

double besov_norm(const CVector& x, const LatticeWindow& w) {
  if (x.size() != w.dim()) throw Error(ErrorKind::precondition, "besov_norm", "dimension mismatch");
  const int nb = w.block_size;
  const int max_abs = std::max(std::abs(w.first_site()), std::abs(w.last_site()));
  double low = 0.0;
  for (int k = 0; k < w.dim(); ++k) {
    const double t = window_fn::theta_tilde(std::abs(w.site_of(k)) / 2.0);
    low += std::norm(t * x(k));
  }
  double total = std::sqrt(low);
  for (int j = 0; (1 << j) < max_abs; ++j) {
    const double scale = std::ldexp(1.0, -j);
    double s = 0.0;
    // theta(2^{-j}|n|) vanishes outside 2^j < |n| < 2^{j+1}
    for (int site = w.first_site(); site <= w.last_site(); ++site) {
      const int a = std::abs(site);
      if (a <= (1 << j) || a >= (2 << j)) continue;
      const double t = window_fn::theta(scale * a);
      s += t * t * x.segment(w.offset(site), nb).squaredNorm();
    }
    total += std::ldexp(1.0, 0) * std::sqrt(std::ldexp(1.0, j)) * std::sqrt(s);
  }
  return total;
}

BandLU::BandLU(const BandedBlockMatrix& b, cplx z) : n_(b.dim()), kl_(b.scalar_bandwidth()) {
  const int ku = kl_;
  width_ = 2 * kl_ + ku + 1;
  u_.assign(static_cast<std::size_t>(n_) * width_, 0.0);
  mult_.assign(static_cast<std::size_t>(n_) * std::max(1, kl_), 0.0);
  piv_.resize(n_);
  for (int r = 0; r < n_; ++r)
    for (int c = std::max(0, r - kl_); c <= std::min(n_ - 1, r + ku); ++c) u(r, c) = b.entry(r, c);
  for (int r = 0; r < n_; ++r) u(r, r) -= z;

  double max_piv = 0.0;
  min_pivot_ = std::numeric_limits<double>::infinity();
  for (int k = 0; k < n_; ++k) {
    const int last_row = std::min(n_ - 1, k + kl_);
    int p = k;
    double best = std::abs(u(k, k));
    for (int r = k + 1; r <= last_row; ++r) {
      if (std::abs(u(r, k)) > best) {
        best = std::abs(u(r, k));
        p = r;
      }
    }
    piv_[k] = p;
    const int last_col = std::min(n_ - 1, k + kl_ + ku);
    if (p != k) {
      for (int c = k; c <= last_col; ++c) std::swap(u(k, c), u(p, c));
    }
    const cplx pivot = u(k, k);
    max_piv = std::max(max_piv, std::abs(pivot));
    min_pivot_ = std::min(min_pivot_, std::abs(pivot));
    if (pivot == 0.0) continue;
    for (int r = k + 1; r <= last_row; ++r) {
      const cplx m = u(r, k) / pivot;
      mult_[static_cast<std::size_t>(k) * kl_ + (r - k - 1)] = m;
      u(r, k) = 0.0;
      if (m == 0.0) continue;
      for (int c = k + 1; c <= last_col; ++c) u(r, c) -= m * u(k, c);
    }
  }
  if (min_pivot_ == 0.0) {
    cond_ = std::numeric_limits<double>::infinity();
    return;
  }
  // a few inverse power steps for the smallest singular direction
  const double anorm = std::max(b.max_abs_entry() * (2 * kl_ + 1), std::abs(z)) + std::abs(z);
  CVector v = CVector::Ones(n_) / std::sqrt(static_cast<double>(n_));
  for (int k = 0; k < n_; k += 3) v(k) = -v(k);
  double inv_norm = 0.0;
  for (int it = 0; it < 4; ++it) {
    CVector w = solve_adjoint(solve(v));
    const double nrm = w.norm();
    inv_norm = std::sqrt(nrm);
    if (!std::isfinite(nrm) || nrm == 0.0) break;
    v = w / nrm;
  }
  cond_ = anorm * inv_norm;
}

CVector BandLU::solve(const CVector& rhs) const {
  CVector x = rhs;
  for (int k = 0; k < n_; ++k) {
    if (piv_[k] != k) std::swap(x(k), x(piv_[k]));
    const int last = std::min(n_ - 1, k + kl_);
    for (int r = k + 1; r <= last; ++r) x(r) -= mult_[static_cast<std::size_t>(k) * kl_ + (r - k - 1)] * x(k);
  }
  const int reach = 2 * kl_;
  for (int k = n_ - 1; k >= 0; --k) {
    cplx s = x(k);
    for (int c = k + 1; c <= std::min(n_ - 1, k + reach); ++c) s -= u(k, c) * x(c);
    x(k) = s / u(k, k);
  }
  return x;
}

CVector BandLU::solve_adjoint(const CVector& rhs) const {
  // (M U)^H x = rhs with M the accumulated row operations
  CVector y = rhs;
  const int reach = 2 * kl_;
  for (int k = 0; k < n_; ++k) {
    cplx s = y(k);
    for (int c = std::max(0, k - reach); c < k; ++c) s -= std::conj(u(c, k)) * y(c);
    y(k) = s / std::conj(u(k, k));
  }
  for (int k = n_ - 1; k >= 0; --k) {
    const int last = std::min(n_ - 1, k + kl_);
    cplx s = y(k);
    for (int r = k + 1; r <= last; ++r) s -= std::conj(mult_[static_cast<std::size_t>(k) * kl_ + (r - k - 1)]) * y(r);
    y(k) = s;
    if (piv_[k] != k) std::swap(y(k), y(piv_[k]));
  }
  return y;
}

}  // namespace tspec
