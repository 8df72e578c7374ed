#include "tspec/scatter.hpp"

#include <algorithm>
#include <cmath>

#include <unsupported/Eigen/FFT>

namespace tspec {

std::vector<double> bessel_j_sequence(double x, int n) {
  if (n < 0) throw Error(ErrorKind::precondition, "bessel_j_sequence", "order must be nonnegative");
  std::vector<double> j(n + 1, 0.0);
  const double ax = std::abs(x);
  if (ax == 0.0) {
    j[0] = 1.0;
    return j;
  }
  // start far enough above both n and x that the seed error has decayed below rounding
  int m = std::max(n, static_cast<int>(std::ceil(ax))) + 40 + 10 * static_cast<int>(std::ceil(std::cbrt(ax)));
  m += m % 2;
  std::vector<double> v(m + 2, 0.0);
  v[m] = 1e-300;
  for (int k = m; k >= 1; --k) {
    v[k - 1] = (2.0 * k / ax) * v[k] - v[k + 1];
    if (std::abs(v[k - 1]) > 1e250)
      for (int i = k - 1; i <= m; ++i) v[i] *= 1e-250;
  }
  double norm = v[0];
  for (int k = 2; k <= m; k += 2) norm += 2.0 * v[k];
  for (int k = 0; k <= n; ++k) j[k] = v[k] / norm * ((x < 0 && k % 2 == 1) ? -1.0 : 1.0);
  return j;
}

namespace {

int bessel_degree(double a, double epsilon) {
  const double ax = std::abs(a);
  // J_k(a) is below 1e-25 past this order for every a
  const int n = static_cast<int>(std::ceil(ax + 12.0 * std::cbrt(ax) + 40.0));
  const auto j = bessel_j_sequence(ax, n);
  double tail = 0.0;
  for (int k = n; k >= 1; --k) {
    if (2.0 * (tail + std::abs(j[k])) > epsilon) return k;
    tail += std::abs(j[k]);
  }
  return 1;
}

}  // namespace

int PropagatorPlan::degree(double t) const { return bessel_degree(degree_per_time * t, epsilon); }

PropagatorPlan make_plan(Interval enclosure, double epsilon) {
  if (!(epsilon > 0.0)) throw Error(ErrorKind::precondition, "make_plan", "epsilon must be positive");
  const double w = enclosure.width();
  const double pad = 0.05 * (w > 0.0 ? w : std::max(1.0, std::abs(enclosure.mid())));
  PropagatorPlan plan;
  plan.hull = {enclosure.lo - pad, enclosure.hi + pad};
  plan.epsilon = epsilon;
  plan.degree_per_time = 0.5 * plan.hull.width();
  return plan;
}

PropagatorPlan make_plan(const BandedBlockMatrix& h, double epsilon) { return make_plan(h.gershgorin(), epsilon); }

PropagatorPlan make_plan(const BandedBlockMatrix& h, const BandedBlockMatrix& h0, double epsilon) {
  const Interval a = h.gershgorin(), b = h0.gershgorin();
  return make_plan(Interval{std::min(a.lo, b.lo), std::max(a.hi, b.hi)}, epsilon);
}

CVector chebyshev_propagate(const BandedBlockMatrix& h, const CVector& psi, double t, const PropagatorPlan& plan) {
  if (psi.size() != h.dim()) throw Error(ErrorKind::precondition, "chebyshev_propagate", "dimension mismatch");
  if (t == 0.0) return psi;
  const double alpha = plan.degree_per_time, center = plan.hull.mid();
  const int degree = plan.degree(t);
  const auto j = bessel_j_sequence(alpha * t, degree);
  auto scaled = [&](const CVector& v) -> CVector { return (h.apply(v) - center * v) / alpha; };
  // |T_k| <= 1 on the hull: growth beyond this margin means the spectrum escaped
  const double bound = 2.0 * psi.norm() + 1e-300;
  CVector t_prev = psi, t_cur = scaled(psi);
  CVector y = j[0] * psi + 2.0 * (-kI) * j[1] * t_cur;
  cplx phase = -kI;
  for (int k = 2; k <= degree; ++k) {
    CVector t_next = 2.0 * scaled(t_cur) - t_prev;
    phase *= -kI;
    y += (2.0 * j[k]) * phase * t_next;
    if (k % 8 == 0 && t_next.norm() > bound)
      throw Error(ErrorKind::numeric, "chebyshev_propagate",
                  "recurrence norm grew past " + std::to_string(bound) + ": spectrum lies outside the propagator hull");
    t_prev = std::move(t_cur);
    t_cur = std::move(t_next);
  }
  return std::exp(-kI * center * t) * y;
}

namespace {

/// Columns spanning the eigenvectors of `m` whose eigenvalues are the `count` closest to `value`.
CMatrix closest_eigenvectors(const CMatrix& m, double value, int count) {
  const Eigen::SelfAdjointEigenSolver<CMatrix> es(m);
  std::vector<int> order(m.rows());
  for (int i = 0; i < m.rows(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(es.eigenvalues()(a) - value) < std::abs(es.eigenvalues()(b) - value);
  });
  CMatrix q(m.rows(), count);
  for (int c = 0; c < count; ++c) q.col(c) = es.eigenvectors().col(order[c]);
  return q;
}

}  // namespace

AcProjector::AcProjector(const MatrixSymbol& sym, const BandStructure& bands) : sym_(sym) {
  tolerance_ = 1e-9 * (bands.spectral_diameter() + 1.0);
  for (std::size_t j = 0; j < bands.flat.size(); ++j) {
    if (!bands.flat[j]) continue;
    const double v = bands.band_intervals[j].mid();
    auto it = std::find_if(flat_values_.begin(), flat_values_.end(),
                           [&](double f) { return std::abs(f - v) <= 1e3 * tolerance_; });
    if (it == flat_values_.end()) {
      flat_values_.push_back(v);
      flat_multiplicity_.push_back(1);
    } else {
      ++flat_multiplicity_[it - flat_values_.begin()];
    }
  }
}

CVector AcProjector::apply(const CVector& psi, const LatticeWindow& window) const {
  if (psi.size() != window.dim() || window.block_size != sym_.block_size())
    throw Error(ErrorKind::precondition, "p_ac_projector", "vector does not match the window");
  if (is_identity()) return psi;
  const int s_count = window.sites(), n = window.block_size;

  std::vector<CMatrix> frames(s_count);
  for (int k = 0; k < s_count; ++k) {
    const double p = 2.0 * kPi * k / s_count;
    const CMatrix hp = sym_.eval(p);
    const Eigen::SelfAdjointEigenSolver<CMatrix> es(hp);
    std::vector<CMatrix> parts;
    int total = 0;
    for (std::size_t f = 0; f < flat_values_.size(); ++f) {
      const double value = flat_values_[f];
      const int mult = flat_multiplicity_[f];
      std::vector<int> near;
      for (int i = 0; i < n; ++i)
        if (std::abs(es.eigenvalues()(i) - value) <= 1e3 * tolerance_) near.push_back(i);
      CMatrix q;
      if (static_cast<int>(near.size()) == mult) {
        q.resize(n, mult);
        for (int c = 0; c < mult; ++c) q.col(c) = es.eigenvectors().col(near[c]);
      } else {
        // another band crosses the flat value here: take the limit of the flat projector from both sides
        const double d = 1e-4;
        const CMatrix qa = closest_eigenvectors(sym_.eval(p + d), value, mult);
        const CMatrix qb = closest_eigenvectors(sym_.eval(p - d), value, mult);
        const CMatrix avg = 0.5 * (qa * qa.adjoint() + qb * qb.adjoint());
        CMatrix e(n, near.size());
        for (std::size_t c = 0; c < near.size(); ++c) e.col(c) = es.eigenvectors().col(near[c]);
        const Eigen::SelfAdjointEigenSolver<CMatrix> red(e.adjoint() * avg * e);
        q = e * red.eigenvectors().rightCols(mult);
      }
      parts.push_back(q);
      total += mult;
    }
    CMatrix all(n, total);
    int col = 0;
    for (const auto& q : parts) {
      all.middleCols(col, q.cols()) = q;
      col += static_cast<int>(q.cols());
    }
    frames[k] = all;
  }

  Eigen::FFT<double> fft;
  CMatrix hat(s_count, n);
  for (int c = 0; c < n; ++c) {
    std::vector<cplx> x(s_count), y;
    for (int s = window.first_site(); s <= window.last_site(); ++s)
      x[((s % s_count) + s_count) % s_count] = psi(window.offset(s) + c);
    fft.inv(y, x);
    for (int k = 0; k < s_count; ++k) hat(k, c) = double(s_count) * y[k];
  }
  for (int k = 0; k < s_count; ++k) {
    const CVector row = hat.row(k).transpose();
    hat.row(k) = (row - frames[k] * (frames[k].adjoint() * row)).transpose();
  }
  CVector out(psi.size());
  for (int c = 0; c < n; ++c) {
    std::vector<cplx> x(s_count), y;
    for (int k = 0; k < s_count; ++k) x[k] = hat(k, c);
    fft.fwd(y, x);
    for (int s = window.first_site(); s <= window.last_site(); ++s)
      out(window.offset(s) + c) = y[((s % s_count) + s_count) % s_count] / double(s_count);
  }
  return out;
}

AcProjector p_ac_projector(const MatrixSymbol& sym, const BandStructure& bands) { return AcProjector(sym, bands); }

double max_group_velocity(const BandStructure& bands) { return bands.slopes.cwiseAbs().maxCoeff(); }

void require_ballistic_window(double v_max, int half_length, double t_max, const std::string& where) {
  const double need = 1.2 * v_max * t_max;
  if (half_length < need)
    throw Error(ErrorKind::precondition, where,
                "window too small for the ballistic front: L = " + std::to_string(half_length) + " < 1.2 v_max t_max = " +
                    std::to_string(need));
}

double edge_mass(const CVector& v, const LatticeWindow& window, double fraction) {
  double s = 0.0;
  const int nb = window.block_size;
  for (int site = window.first_site(); site <= window.last_site(); ++site)
    if (window.near_edge(site, fraction)) s += v.segment(window.offset(site), nb).squaredNorm();
  return std::sqrt(s);
}

std::vector<double> default_time_grid(double t_max) {
  std::vector<double> t;
  for (int i = 0; i < 8; ++i) t.push_back(t_max * std::pow(10.0, -1.0 + i / 7.0));
  return t;
}

namespace {

BandStructure bands_for(const MatrixSymbol& sym) {
  int k = 2048;
  while (k < 4 * sym.cutoff() + 4) k *= 2;
  return compute_bands(sym, k);
}

void require_clear_of_critical(const CriticalSet& crit, Interval delta, const std::string& where) {
  for (const auto& e : crit.entries)
    if (delta.contains(e.value))
      throw Error(ErrorKind::precondition, where, "interval touches critical value " + std::to_string(e.value));
}

}  // namespace

DecayFit propagation_decay(const OperatorModel& model, Interval delta, double sigma, std::vector<double> t_grid,
                           int half_length, const DecayOptions& opts) {
  const std::string where = "propagation_decay";
  if (!(delta.hi > delta.lo)) throw Error(ErrorKind::precondition, where, "empty interval");
  if (!(sigma >= 0.0)) throw Error(ErrorKind::precondition, where, "sigma must be nonnegative");
  const BandStructure bands = bands_for(model.symbol);
  require_clear_of_critical(compute_critical_set(model.symbol, bands), delta, where);
  if (t_grid.empty()) throw Error(ErrorKind::precondition, where, "empty time grid");
  std::sort(t_grid.begin(), t_grid.end());
  if (!(t_grid.front() > 0.0)) throw Error(ErrorKind::precondition, where, "times must be positive");
  const double t_max = t_grid.back();
  require_ballistic_window(max_group_velocity(bands), half_length, t_max, where);

  const BandedBlockMatrix h = model.assemble(half_length);
  const LatticeWindow& window = h.window();
  const double w = opts.shoulder_fraction * delta.width();
  const Interval plateau{delta.lo + 2.0 * w, delta.hi - 2.0 * w};
  const auto phi = erf_window(plateau, w);
  const int degree = required_filter_degree(phi, filter_hull(h), opts.filter_tolerance);
  if (degree < 0) throw Error(ErrorKind::numeric, where, "filter needs a degree above 8192");
  const SpectralFilter filter(h, phi, degree, opts.filter_tolerance);
  const PropagatorPlan plan = make_plan(h, opts.epsilon);

  DecayFit fit;
  fit.filter_degree = degree;
  fit.times = t_grid;
  // the filtered state at the origin must not reach the artificial edges by t_max
  const CVector probe = filter.apply(CVector::Unit(h.dim(), window.offset(0)));
  fit.front_mass = edge_mass(chebyshev_propagate(h, probe, t_max, plan), window);
  if (fit.front_mass > opts.front_tolerance)
    throw Error(ErrorKind::precondition, where,
                "ballistic front reaches the window edge by t_max (edge mass " + std::to_string(fit.front_mass) +
                    "); increase L");

  RVector weight(h.dim());
  for (int i = 0; i < h.dim(); ++i) weight(i) = std::pow(bracket(window.site_of(i)), -sigma);
  fit.norms.assign(t_grid.size(), 0.0);
  parallel_for(static_cast<int>(t_grid.size()), [&](int i) {
    const double t = t_grid[i];
    auto gram = [&](const CVector& v) -> CVector {
      const CVector forward = chebyshev_propagate(h, filter.apply(weight.cwiseProduct(v)), t, plan);
      const CVector back = chebyshev_propagate(h, weight.cwiseProduct(weight.cwiseProduct(forward)), -t, plan);
      return weight.cwiseProduct(filter.apply(back));
    };
    fit.norms[i] =
        lanczos_top_singular(gram, h.dim(), opts.norm_iterations, opts.norm_tolerance, opts.seed).value;
  });

  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (t_grid[i] < t_max / 10.0 * (1 - 1e-12)) continue;
    lx.push_back(std::log(t_grid[i]));
    ly.push_back(std::log(std::max(fit.norms[i], 1e-300)));
  }
  if (lx.size() < 2) throw Error(ErrorKind::precondition, where, "need two times in [t_max / 10, t_max]");
  const LineFit line = fit_line(lx, ly);
  fit.slope = line.slope;
  fit.residual = line.residual;
  return fit;
}

std::vector<double> default_wave_grid(double t_max) {
  std::vector<double> t;
  for (int k = 1; k <= 4; ++k) t.push_back(0.25 * k * t_max);
  return t;
}

WaveOperatorResult wave_operator(const BandedBlockMatrix& h, const BandedBlockMatrix& h0, const AcProjector& pac,
                                 const CVector& psi, int sign, std::vector<double> t_grid, const PropagatorPlan& plan,
                                 const WaveOptions& opts) {
  const std::string where = "wave_operator";
  if (h.window() != h0.window()) throw Error(ErrorKind::precondition, where, "H and H0 live on different windows");
  if (psi.size() != h.dim()) throw Error(ErrorKind::precondition, where, "dimension mismatch");
  if (sign != 1 && sign != -1) throw Error(ErrorKind::precondition, where, "sign must be +1 or -1");
  if (t_grid.empty()) throw Error(ErrorKind::precondition, where, "empty time grid");
  std::sort(t_grid.begin(), t_grid.end());
  if (!(t_grid.front() > 0.0)) throw Error(ErrorKind::precondition, where, "times must be positive");
  const double t_max = t_grid.back();
  t_grid.push_back(0.5 * t_max);
  std::sort(t_grid.begin(), t_grid.end());
  t_grid.erase(std::unique(t_grid.begin(), t_grid.end(),
                           [&](double a, double b) { return std::abs(a - b) <= 1e-12 * t_max; }),
               t_grid.end());
  const double norm = psi.norm();
  if (!(norm > 0.0)) throw Error(ErrorKind::precondition, where, "zero input state");
  const LatticeWindow& window = h.window();

  WaveOperatorResult r;
  r.sign = sign;
  r.window = window;
  r.epsilon = plan.epsilon;
  r.psi_in = psi / norm;
  r.projected = pac.apply(r.psi_in, window);
  r.times = t_grid;

  auto check_front = [&](const CVector& v, double t) {
    const double m = edge_mass(v, window);
    r.front_mass = std::max(r.front_mass, m);
    if (m > opts.front_tolerance)
      throw Error(ErrorKind::precondition, where,
                  "ballistic front reaches the window edge at T = " + std::to_string(t) + " (edge mass " +
                      std::to_string(m) + "); increase L");
  };

  CVector free_state = r.projected, previous, omega_half;
  double t_prev = 0.0;
  for (double t : t_grid) {
    free_state = chebyshev_propagate(h0, free_state, sign * (t - t_prev), plan);
    t_prev = t;
    check_front(free_state, t);
    CVector omega = chebyshev_propagate(h, free_state, -sign * t, plan);
    check_front(omega, t);
    r.norms.push_back(omega.norm());
    if (previous.size()) r.cauchy_defects.push_back((omega - previous).norm());
    if (std::abs(t - 0.5 * t_max) <= 1e-12 * t_max) omega_half = omega;
    previous = std::move(omega);
  }
  r.omega = previous;
  r.cauchy_gate = (r.omega - omega_half).norm();
  r.isometry_defect = std::abs(r.omega.norm() - r.projected.norm());

  // intertwining f(H) Omega = Omega f(H0) for a smooth bump on the middle third of the test band
  const Interval band = opts.test_band;
  if (!(band.width() > 0.0)) throw Error(ErrorKind::precondition, where, "test band must have positive width");
  const double third = band.width() / 3.0;
  const auto f = erf_window({band.mid() - 0.5 * third, band.mid() + 0.5 * third}, third / 8.0);
  const int need = std::max(required_filter_degree(f, filter_hull(h), 1e-6), required_filter_degree(f, filter_hull(h0), 1e-6));
  if (need < 0) throw Error(ErrorKind::numeric, where, "intertwining window needs a degree above 8192");
  const int degree = std::max(opts.filter_degree, need);
  const SpectralFilter fh(h, f, degree), fh0(h0, f, degree);
  const CVector lhs = fh.apply(r.omega);
  const CVector rhs =
      chebyshev_propagate(h, chebyshev_propagate(h0, fh0.apply(r.projected), sign * t_max, plan), -sign * t_max, plan);
  r.intertwining_residual = (lhs - rhs).norm();
  return r;
}

std::vector<WaveOperatorResult> wave_operators(const BandedBlockMatrix& h, const BandedBlockMatrix& h0,
                                               const AcProjector& pac, const std::vector<CVector>& inputs, int sign,
                                               const std::vector<double>& t_grid, const PropagatorPlan& plan,
                                               const WaveOptions& opts) {
  std::vector<WaveOperatorResult> out(inputs.size());
  parallel_for(static_cast<int>(inputs.size()),
               [&](int i) { out[i] = wave_operator(h, h0, pac, inputs[i], sign, t_grid, plan, opts); });
  return out;
}

CVector wave_packet(const MatrixSymbol& sym, const LatticeWindow& window, double center, double width,
                    double momentum, int band) {
  if (window.block_size != sym.block_size()) throw Error(ErrorKind::precondition, "wave_packet", "block size mismatch");
  if (band < 0 || band >= sym.block_size()) throw Error(ErrorKind::precondition, "wave_packet", "band out of range");
  if (!(width > 0.0)) throw Error(ErrorKind::precondition, "wave_packet", "width must be positive");
  const Eigen::SelfAdjointEigenSolver<CMatrix> es(sym.eval(momentum));
  const CVector frame = es.eigenvectors().col(band);
  CVector psi = CVector::Zero(window.dim());
  const int lo = std::max(window.first_site(), static_cast<int>(std::floor(center - 6 * width)));
  const int hi = std::min(window.last_site(), static_cast<int>(std::ceil(center + 6 * width)));
  for (int s = lo; s <= hi; ++s) {
    const double d = (s - center) / width;
    psi.segment(window.offset(s), window.block_size) = std::exp(-0.5 * d * d) * std::exp(-kI * momentum * double(s)) * frame;
  }
  const double n = psi.norm();
  if (!(n > 0.0)) throw Error(ErrorKind::precondition, "wave_packet", "packet misses the window");
  return psi / n;
}

namespace {

int widest_column(const BandStructure& bands) {
  int best = -1;
  double widest = 0.0;
  for (int j = 0; j < bands.values.cols(); ++j) {
    const double w = bands.values.col(j).maxCoeff() - bands.values.col(j).minCoeff();
    if (w > widest * (1 + 1e-12) && w > 1e-9 * (bands.spectral_diameter() + 1.0)) {
      widest = w;
      best = j;
    }
  }
  return best;
}

}  // namespace

Interval widest_band(const BandStructure& bands) {
  const int j = widest_column(bands);
  if (j < 0) throw Error(ErrorKind::precondition, "widest_band", "all bands are flat");
  return {bands.values.col(j).minCoeff(), bands.values.col(j).maxCoeff()};
}

std::vector<CVector> localized_basis(const MatrixSymbol& sym, const BandStructure& bands, const LatticeWindow& window,
                                     double t_max, int count) {
  if (count < 2 || count % 2) throw Error(ErrorKind::precondition, "localized_basis", "count must be even and >= 2");
  const int j = widest_column(bands);
  if (j < 0) throw Error(ErrorKind::precondition, "localized_basis", "all bands are flat");
  Eigen::Index fwd, bwd;
  bands.slopes.col(j).maxCoeff(&fwd);
  bands.slopes.col(j).minCoeff(&bwd);
  const double reach = std::min(0.5 * window.half_length, 0.125 * max_group_velocity(bands) * t_max);
  const int half = count / 2;
  const double width = std::max(2.0, reach / (2.0 * half));
  std::vector<CVector> out;
  for (int m = 1; m <= half; ++m) {
    const double center = reach * m / half;
    out.push_back(wave_packet(sym, window, center, width, bands.grid[fwd], j));
    out.push_back(wave_packet(sym, window, center, width, bands.grid[bwd], j));
  }
  return out;
}

CompletenessResult completeness_check(const std::vector<WaveOperatorResult>& results,
                                      const std::vector<ValidatedEigenpair>& bound_states,
                                      const CompletenessThresholds& thresholds) {
  CompletenessResult c;
  if (results.empty()) throw Error(ErrorKind::precondition, "completeness_check", "no wave-operator runs");
  const LatticeWindow window = results.front().window;
  for (const auto& r : results) {
    if (r.window != window) throw Error(ErrorKind::precondition, "completeness_check", "runs on different windows");
    const double noise = 10.0 * r.epsilon * r.times.back();
    for (std::size_t k = 1; k < r.cauchy_defects.size(); ++k)
      if (r.cauchy_defects[k] > r.cauchy_defects[k - 1] && r.cauchy_defects[k] > noise) c.cauchy_decreasing = false;
    c.cauchy_gate = std::max(c.cauchy_gate, r.cauchy_gate);
  }
  const int k = static_cast<int>(results.size());
  for (int i = 0; i < k; ++i)
    for (int j = i; j < k; ++j) {
      const cplx a = results[i].omega.dot(results[j].omega);
      const cplx b = results[i].projected.dot(results[j].projected);
      c.gram_defect = std::max(c.gram_defect, std::abs(a - b));
    }
  for (const auto& b : bound_states) {
    if (b.window.kind != window.kind || b.window.block_size != window.block_size)
      throw Error(ErrorKind::precondition, "completeness_check", "bound state lives on a window of another kind");
    const CVector u = LatticeVector{b.window.first_site(), b.window.block_size, b.vector}.on(window).normalized();
    for (const auto& r : results) c.bound_state_overlap = std::max(c.bound_state_overlap, std::abs(u.dot(r.omega)));
  }
  if (!c.cauchy_decreasing || c.cauchy_gate > thresholds.cauchy_gate) {
    c.verdict = Verdict::inconclusive;
    c.reason = !c.cauchy_decreasing ? "Cauchy defects do not decrease across the time grid"
                                    : "Cauchy defect between T_max / 2 and T_max above the gate";
    return c;
  }
  if (c.gram_defect <= thresholds.isometry && c.bound_state_overlap <= thresholds.orthogonality) {
    c.verdict = Verdict::pass;
  } else {
    c.verdict = Verdict::fail;
    c.reason = c.gram_defect > thresholds.isometry ? "inner products of projected inputs not preserved"
                                                   : "a bound state overlaps the wave-operator range";
  }
  return c;
}

}  // namespace tspec
