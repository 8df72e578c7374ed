#include "tspec/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "tspec/eig.hpp"
#include "tspec/io.hpp"
#include "tspec/lap.hpp"
#include "tspec/mourre.hpp"
#include "tspec/perturb.hpp"
#include "tspec/scatter.hpp"
#include "tspec/symbol.hpp"

namespace tspec {

namespace {

using nlohmann::json;

constexpr int kMaxGrid = 8192;
constexpr int kMaxHalfLength = 8192;
constexpr int kMourreDegree = 200;
constexpr int kMourreProbeRadius = 16;
constexpr double kFilterTolerance = 1e-6;
constexpr int kBoundStateHalfLength = 256;

[[noreturn]] void bad_config(const std::string& what) { throw Error(ErrorKind::config, "cli", what); }

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x == 0.0 ? 0.0 : x);
  return buf;
}

std::string sci(double x) {
  if (!std::isfinite(x)) return num(x);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

std::string interval_text(Interval iv) { return "[" + num(iv.lo) + ", " + num(iv.hi) + "]"; }

std::string union_text(const std::vector<Interval>& ivs) {
  std::string out;
  for (std::size_t i = 0; i < ivs.size(); ++i) out += (i ? " U " : "") + interval_text(ivs[i]);
  return out.empty() ? "(empty)" : out;
}

json interval_json(Interval iv) { return json::array({iv.lo, iv.hi}); }

std::string kind_name(WindowKind k) { return k == WindowKind::one_sided ? "toeplitz" : "laurent"; }

int next_pow2(long long n) {
  int p = 1;
  while (p < n) p *= 2;
  return p;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }

  std::string text() const {
    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
      width[c] = header[c].size();
      for (const auto& r : rows) width[c] = std::max(width[c], r[c].size());
    }
    std::ostringstream out;
    auto line = [&](const std::vector<std::string>& cells) {
      out << ' ';
      for (std::size_t c = 0; c < cells.size(); ++c)
        out << ' ' << std::string(width[c] - cells[c].size(), ' ') << cells[c];
      out << '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out.str();
  }

  std::string csv() const {
    std::ostringstream out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t c = 0; c < cells.size(); ++c) out << (c ? "," : "") << cells[c];
      out << '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out.str();
  }
};

enum class Status { ok, inconclusive, failed };

Status worse(Status a, Status b) { return static_cast<int>(a) >= static_cast<int>(b) ? a : b; }

struct Context {
  RunConfig cfg;
  MatrixSymbol sym{std::vector<CMatrix>{CMatrix::Zero(1, 1)}};  // replaced once the symbol is read
  std::optional<PerturbationSpec> pert;
  int grid = 2048;
  BandStructure bands;
  CriticalSet kappa;
  std::vector<Interval> ess;

  std::ostringstream text;
  json record = json::object();
  std::map<std::string, std::string> files;

  void heading(const std::string& title) { text << '\n' << title << '\n' << std::string(title.size(), '-') << '\n'; }
  void line(const std::string& key, const std::string& value) {
    text << "  " << key << std::string(key.size() < 22 ? 22 - key.size() : 1, ' ') << value << '\n';
  }

  WindowKind kind_or(WindowKind fallback) const { return cfg.kind.value_or(fallback); }
  int half_length_or(int fallback) const { return cfg.half_length.value_or(fallback); }

  OperatorModel model(WindowKind kind, bool with_perturbation = true) const {
    OperatorModel m{sym, std::nullopt, kind};
    if (with_perturbation) m.perturbation = pert;
    return m;
  }

  /// Sorted-column ranges; flat columns are dropped.
  std::vector<Interval> dispersive_bands() const {
    std::vector<Interval> out;
    const double tol = 1e-9 * (bands.spectral_diameter() + 1.0);
    for (int j = 0; j < bands.block_size; ++j) {
      const Interval iv{bands.values.col(j).minCoeff(), bands.values.col(j).maxCoeff()};
      if (iv.width() > tol) out.push_back(iv);
    }
    return out;
  }

  /// Complement of the essential spectrum inside `hull`, as open gaps.
  std::vector<Interval> gaps(Interval hull) const {
    const double tol = 1e-9 * (bands.spectral_diameter() + 1.0);
    std::vector<Interval> out;
    double lo = hull.lo;
    for (const auto& iv : ess) {
      if (iv.lo - lo > tol) out.push_back({lo, iv.lo});
      lo = std::max(lo, iv.hi);
    }
    if (hull.hi - lo > tol) out.push_back({lo, hull.hi});
    return out;
  }
};

Interval middle_third(Interval iv) { return {iv.lo + iv.width() / 3.0, iv.hi - iv.width() / 3.0}; }

// ---------------------------------------------------------------------------- tasks

Status task_bands(Context& c) {
  c.heading("bands");
  c.line("grid points K", std::to_string(c.grid));
  c.line("eigensolver residual", sci(c.bands.max_residual));
  Table t{{"branch", "lo", "hi", "flat"}, {}};
  json rows = json::array();
  for (int a = 0; a < c.bands.block_size; ++a) {
    const Interval iv = c.bands.band_intervals[a];
    t.add({std::to_string(a), num(iv.lo), num(iv.hi), c.bands.flat[a] ? "yes" : "no"});
    rows.push_back({{"branch", a}, {"interval", interval_json(iv)}, {"flat", static_cast<bool>(c.bands.flat[a])}});
    if (c.bands.flat[a]) c.line("flat band", "value " + num(iv.mid()) + " (branch " + std::to_string(a) + ")");
  }
  c.text << t.text();
  c.record["bands"] = rows;
  c.record["band_residual"] = c.bands.max_residual;

  Table samples{{"p"}, {}};
  for (int j = 0; j < c.bands.block_size; ++j) samples.header.push_back("lambda_" + std::to_string(j));
  char buf[32];
  for (int k = 0; k < c.bands.grid_size(); ++k) {
    std::vector<std::string> row;
    std::snprintf(buf, sizeof buf, "%.17g", c.bands.grid[k]);
    row.push_back(buf);
    for (int j = 0; j < c.bands.block_size; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", c.bands.values(k, j));
      row.push_back(buf);
    }
    samples.add(std::move(row));
  }
  c.files["bands.csv"] = samples.csv();
  return Status::ok;
}

Status task_critical(Context& c) {
  c.heading("critical set");
  Table t{{"value", "kind", "witness p", "band"}, {}};
  json rows = json::array();
  for (const auto& e : c.kappa.entries) {
    t.add({num(e.value), to_string(e.kind), num(e.witness), std::to_string(e.band)});
    rows.push_back({{"value", e.value}, {"kind", to_string(e.kind)}, {"witness", e.witness}, {"band", e.band}});
  }
  if (c.kappa.entries.empty()) c.text << "  (empty)\n";
  else c.text << t.text();
  c.record["critical_set"] = rows;
  return Status::ok;
}

Status task_essential(Context& c) {
  c.heading("essential spectrum");
  c.line("union of bands", union_text(c.ess));
  json ivs = json::array();
  for (const auto& iv : c.ess) ivs.push_back(interval_json(iv));
  c.record["essential_spectrum"] = ivs;
  return Status::ok;
}

Status task_spectrum(Context& c) {
  task_bands(c);
  task_essential(c);
  return task_critical(c);
}

struct EigsOutcome {
  Status status = Status::ok;
  std::vector<ValidatedEigenpair> pairs;
};

EigsOutcome task_gap_eigs(Context& c, std::optional<int> forced_half_length = std::nullopt) {
  const WindowKind kind = c.kind_or(WindowKind::one_sided);
  const int l = forced_half_length.value_or(c.half_length_or(512));
  const OperatorModel model = c.model(kind);
  std::vector<Interval> gaps;
  if (c.cfg.gap) gaps.push_back(*c.cfg.gap);
  else gaps = c.gaps(filter_hull(model.assemble(l)));

  c.heading("gap eigenvalues");
  c.line("operator", kind_name(kind) + (c.pert ? " + perturbation" : ""));
  c.line("windows L / 2L", std::to_string(l) + " / " + std::to_string(2 * l));
  const GapGates gates;
  c.line("gates", "boundary mass <= " + sci(gates.boundary_mass) + ", |value(L) - value(2L)| <= " +
                      sci(gates.stability));
  EigsOptions opts;
  opts.seed = c.cfg.seed;

  Table t{{"gap", "value", "residual", "boundary_mass", "stability", "multiplicity"}, {}};
  json rows = json::array(), gap_list = json::array();
  EigsOutcome out;
  for (const auto& gap : gaps) {
    gap_list.push_back(interval_json(gap));
    const auto pairs = gap_eigenvalues(c.sym, c.pert ? &*c.pert : nullptr, gap, l, kind, gates, opts);
    for (const auto& e : pairs) {
      t.add({interval_text(gap), num(e.value), sci(e.residual), sci(e.boundary_mass), sci(e.stability),
             std::to_string(e.multiplicity)});
      rows.push_back({{"gap", interval_json(gap)},
                      {"value", e.value},
                      {"residual", e.residual},
                      {"boundary_mass", e.boundary_mass},
                      {"stability", e.stability},
                      {"multiplicity", e.multiplicity}});
      out.pairs.push_back(e);
    }
  }
  c.line("gaps searched", gaps.empty() ? "(none)" : std::to_string(gaps.size()));
  for (const auto& g : gaps) c.line("", interval_text(g));
  if (out.pairs.empty()) c.text << "  no certified eigenvalues\n";
  else c.text << t.text();
  c.record["gap_eigs"] = {{"kind", kind_name(kind)}, {"half_length", l}, {"gaps", gap_list}, {"eigenvalues", rows}};
  c.files["eigs.csv"] = t.csv();
  if (c.cfg.dump_states)
    for (std::size_t i = 0; i < out.pairs.size(); ++i)
      c.files["eigenvector_" + std::to_string(i) + ".txt"] =
          format_vector_records(out.pairs[i].vector, out.pairs[i].window);
  return out;
}

Status task_mourre(Context& c, std::optional<int> cap = std::nullopt) {
  const WindowKind kind = c.kind_or(WindowKind::two_sided);
  if (kind != WindowKind::two_sided) bad_config("mourre-check needs the laurent operator");
  std::vector<Interval> deltas;
  if (c.cfg.delta) deltas.push_back(*c.cfg.delta);
  else
    for (const auto& b : c.dispersive_bands()) deltas.push_back(middle_third(b));

  c.heading("mourre estimate");
  MourreOptions opts;
  opts.probe_radius = kMourreProbeRadius;
  c.line("probes", "unit vectors on sites |n| <= " + std::to_string(kMourreProbeRadius));
  c.line("defect threshold", num(opts.defect_threshold));
  c.line("filter shoulder", num(opts.shoulder_fraction) + " of |delta|; tail tolerance " + sci(kFilterTolerance));
  c.line("stability rule", "defect ranks at L and 2L differ by at most 2");

  const OperatorModel model = c.model(kind);
  Table t{{"delta", "L", "lower_bound", "lower_bound_regular", "defect_rank", "defect_rank_2L", "stable", "degree",
           "subspace"},
          {}};
  json rows = json::array();
  Status status = Status::ok;
  for (const auto& delta : deltas) {
    int l = c.half_length_or(512);
    if (cap) l = std::min(l, *cap);
    BandedBlockMatrix probe = model.assemble(l);
    const double w = opts.shoulder_fraction * delta.width();
    const Interval plateau{delta.lo + 2.0 * w, delta.hi - 2.0 * w};
    const int needed = required_filter_degree(erf_window(plateau, w), filter_hull(probe), kFilterTolerance);
    if (needed < 0) throw Error(ErrorKind::numeric, "mourre-check", "no filter degree reaches the tolerance");
    const int degree = std::max(kMourreDegree, needed);
    // grow the window until the filtered probes stay clear of its edges
    auto clear = [&](const BandedBlockMatrix& b) {
      const Interval s = support_after(b, -kMourreProbeRadius, kMourreProbeRadius, degree + 1);
      return s.lo > b.window().first_site() && s.hi < b.window().last_site();
    };
    while (!clear(probe) && 2 * l <= kMaxHalfLength) probe = model.assemble(l *= 2);

    MourreResult r[2];
    int sizes[2] = {l, 2 * l};
    parallel_for(2, [&](int i) {
      const LatticeWindow w_i = model.window(sizes[i]);
      const int k = std::max(c.grid, next_pow2(4LL * w_i.sites()));
      r[i] = mourre_estimate_check(model.assemble(sizes[i]), build_conjugate(c.sym, delta, k), delta, degree, opts);
    });
    const bool stable = std::abs(r[0].defect_rank - r[1].defect_rank) <= 2;
    if (!stable) status = Status::inconclusive;
    t.add({interval_text(delta), std::to_string(l), num(r[0].lower_bound), num(r[0].lower_bound_regular),
           std::to_string(r[0].defect_rank), std::to_string(r[1].defect_rank), stable ? "yes" : "no",
           std::to_string(degree), std::to_string(r[0].subspace_dim)});
    rows.push_back({{"delta", interval_json(delta)},
                    {"half_length", l},
                    {"lower_bound", r[0].lower_bound},
                    {"lower_bound_regular", r[0].lower_bound_regular},
                    {"lower_bound_2L", r[1].lower_bound},
                    {"defect_rank", r[0].defect_rank},
                    {"defect_rank_2L", r[1].defect_rank},
                    {"stable", stable},
                    {"filter_degree", degree},
                    {"filter_error", r[0].filter_error},
                    {"subspace_dim", r[0].subspace_dim}});
  }
  c.text << t.text();
  c.record["mourre"] = rows;
  return status;
}

Status task_lap(Context& c, std::optional<int> cap = std::nullopt) {
  const WindowKind kind = c.kind_or(WindowKind::one_sided);
  int l = c.half_length_or(1024);
  if (cap) l = std::min(l, *cap);
  std::vector<double> energies = c.cfg.energies;
  if (energies.empty())
    for (const auto& b : c.dispersive_bands())
      for (double q : {0.25, 0.5, 0.75}) energies.push_back(b.lo + q * b.width());

  const LapThresholds th;
  c.heading("limiting absorption");
  c.line("operator", kind_name(kind) + (c.pert ? " + perturbation" : ""));
  c.line("weight s", num(c.cfg.s));
  c.line("windows L / 2L", std::to_string(l) + " / " + std::to_string(2 * l));
  const LatticeWindow window = c.model(kind).window(l);
  c.line("mu floor", num(mu_floor(window.sites())) + " = max(1e-4, 20 / sites)");
  c.line("bounded rule", "decade ratio <= " + num(th.decade_ratio) + ", window agreement <= " +
                             num(th.window_agreement));

  const OperatorModel model = c.model(kind);
  Table summary{{"x", "verdict", "decade_ratio", "window_agreement", "mu_min", "eigenvalue"}, {}};
  Table probes{{"x", "mu", "s", "L", "norm", "norm_2L", "condition"}, {}};
  json rows = json::array();
  for (double x : energies) {
    const ResolventProbe p = lap_sweep(model, x, c.cfg.s, l, default_mu_grid(), th);
    summary.add({num(x), to_string(p.verdict), num(p.decade_ratio), num(p.window_agreement), num(p.mu_min),
                 p.eigenvalue ? num(*p.eigenvalue) : "-"});
    for (std::size_t i = 0; i < p.mu_grid.size(); ++i)
      probes.add({num(x), num(p.mu_grid[i]), num(c.cfg.s), std::to_string(l), num(p.norms[i]), num(p.norms_2l[i]),
                  sci(p.conditions[i])});
    json row = {{"x", x},
                {"verdict", to_string(p.verdict)},
                {"decade_ratio", p.decade_ratio},
                {"window_agreement", p.window_agreement},
                {"mu_min", p.mu_min},
                {"mu", p.mu_grid},
                {"norms", p.norms},
                {"norms_2L", p.norms_2l},
                {"conditions", p.conditions}};
    if (p.eigenvalue) row["eigenvalue"] = *p.eigenvalue;
    rows.push_back(row);
  }
  c.text << summary.text();
  c.record["lap"] = {{"kind", kind_name(kind)}, {"half_length", l}, {"s", c.cfg.s}, {"probes", rows}};
  c.files["lap.csv"] = probes.csv();
  return Status::ok;
}

Status task_classify(Context& c) {
  if (!c.pert) bad_config("classify needs --perturbation");
  const int n = c.sym.block_size();
  const Classification cl = classify(*c.pert, n);

  c.heading("perturbation classification");
  c.line("schur bound", num(cl.schur.bound) + " (row " + num(cl.schur.row) + ", column " + num(cl.schur.col) + ")");
  c.line("hilbert-schmidt norm", num(cl.hs));
  c.line("compactness", to_string(cl.compactness.verdict) + ", tail slope " + num(cl.compactness.slope));
  c.line("C11 dyadic tail", to_string(cl.c11.verdict) + ", slope " + num(cl.c11.slope) + " over k = " +
                                std::to_string(cl.c11.k_from) + ".." + std::to_string(cl.c11.k_to) + ", residual " +
                                sci(cl.c11.residual) + ", pass rule slope <= -0.1");
  c.line("Cs exponent", to_string(cl.cs.verdict) + ", s = " + num(cl.cs.s) + " +- " + num(cl.cs.stderr_s) +
                            ", residual " + sci(cl.cs.residual));
  std::string classes;
  for (const auto& k : cl.classes) classes += (classes.empty() ? "" : ", ") + k;
  c.line("classes", classes.empty() ? "(none)" : classes);

  Table t{{"r", "dyadic_norm", "tail_bound", "n_V", "p_V"}, {}};
  json rows = json::array();
  for (std::size_t i = 0; i < cl.profile.radii.size(); ++i) {
    const double r = cl.profile.radii[i];
    const AnnulusSums a = nv_pv(*c.pert, n, r);
    t.add({num(r), sci(cl.profile.norms[i]), sci(cl.profile.tail_bounds[i]), sci(a.n_v), sci(a.p_v)});
    rows.push_back({{"r", r},
                    {"dyadic_norm", cl.profile.norms[i]},
                    {"tail_bound", cl.profile.tail_bounds[i]},
                    {"n_V", a.n_v},
                    {"p_V", a.p_v}});
  }
  c.text << t.text();
  c.record["classification"] = {{"schur", cl.schur.bound},
                                {"hs", cl.hs},
                                {"compactness", to_string(cl.compactness.verdict)},
                                {"c11", to_string(cl.c11.verdict)},
                                {"c11_slope", cl.c11.slope},
                                {"cs", cl.cs.s},
                                {"classes", cl.classes},
                                {"profile", rows}};
  c.files["classify.csv"] = t.csv();
  const bool undecided =
      cl.compactness.verdict == Verdict::inconclusive || cl.c11.verdict == Verdict::inconclusive;
  return undecided ? Status::inconclusive : Status::ok;
}

Status task_propagate(Context& c) {
  const WindowKind kind = c.kind_or(WindowKind::two_sided);
  const double v = max_group_velocity(c.bands);
  const int l = c.half_length_or(std::min(kMaxHalfLength, std::max(1024, next_pow2(std::ceil(1.2 * v * c.cfg.t_max)))));
  const Interval delta = c.cfg.delta.value_or(middle_third(widest_band(c.bands)));
  DecayOptions opts;
  opts.seed = c.cfg.seed;
  const DecayFit fit =
      propagation_decay(c.model(kind), delta, c.cfg.sigma, default_time_grid(c.cfg.t_max), l, opts);
  const double target = -(c.cfg.sigma - 0.25);
  const bool met = fit.slope <= target;

  c.heading("propagation estimate");
  c.line("operator", kind_name(kind) + (c.pert ? " + perturbation" : ""));
  c.line("delta", interval_text(delta));
  c.line("sigma", num(c.cfg.sigma));
  c.line("window L", std::to_string(l) + " (ballistic rule L >= 1.2 v_max t_max, v_max = " + num(v) + ")");
  c.line("filter degree", std::to_string(fit.filter_degree) + ", tail tolerance " + sci(opts.filter_tolerance));
  c.line("propagator accuracy", sci(opts.epsilon));
  c.line("front mass at t_max", sci(fit.front_mass) + " (limit " + sci(opts.front_tolerance) + ")");
  c.line("log-log slope", num(fit.slope) + " over [t_max / 10, t_max], residual " + sci(fit.residual));
  c.line("contract", "slope <= " + num(target) + ": " + (met ? "met" : "not met"));
  Table t{{"t", "norm"}, {}};
  for (std::size_t i = 0; i < fit.times.size(); ++i) t.add({num(fit.times[i]), sci(fit.norms[i])});
  c.text << t.text();
  c.record["propagate"] = {{"kind", kind_name(kind)},   {"delta", interval_json(delta)}, {"sigma", c.cfg.sigma},
                           {"half_length", l},          {"times", fit.times},            {"norms", fit.norms},
                           {"slope", fit.slope},        {"residual", fit.residual},      {"contract", target},
                           {"contract_met", met},       {"front_mass", fit.front_mass},
                           {"filter_degree", fit.filter_degree}};
  c.files["propagate.csv"] = t.csv();
  return met ? Status::ok : Status::inconclusive;
}

Status task_wave(Context& c) {
  const WindowKind kind = c.kind_or(WindowKind::one_sided);
  const double v = max_group_velocity(c.bands);
  const double tmax = c.cfg.wave_t_max;
  const int l = c.half_length_or(std::min(kMaxHalfLength, std::max(1024, next_pow2(std::ceil(1.2 * v * tmax)))));
  const OperatorModel model = c.model(kind), free = c.model(kind, false);
  const LatticeWindow window = model.window(l);
  const BandedBlockMatrix h = model.assemble(l), h0 = free.assemble(l);
  const AcProjector pac = p_ac_projector(c.sym, c.bands);
  const PropagatorPlan plan = make_plan(h, h0);
  WaveOptions opts;
  opts.test_band = widest_band(c.bands);
  const std::vector<double> grid = default_wave_grid(tmax);
  const std::vector<CVector> basis = localized_basis(c.sym, c.bands, window, tmax);

  // bound states of the perturbed operator, certified on a small window
  const int lb = std::min(l, kBoundStateHalfLength);
  std::vector<ValidatedEigenpair> bound;
  EigsOptions eo;
  eo.seed = c.cfg.seed;
  for (const auto& gap : c.gaps(filter_hull(model.assemble(lb)))) {
    auto found = gap_eigenvalues(c.sym, c.pert ? &*c.pert : nullptr, gap, lb, kind, {}, eo);
    bound.insert(bound.end(), found.begin(), found.end());
  }

  c.heading("wave operators");
  c.line("operator", kind_name(kind) + (c.pert ? " + perturbation" : " (no perturbation)"));
  c.line("window L", std::to_string(l) + " (ballistic rule, v_max = " + num(v) + ")");
  c.line("T grid", "T_max {1/4, 1/2, 3/4, 1}, T_max = " + num(tmax));
  c.line("propagator accuracy", sci(plan.epsilon) + ", hull " + interval_text(plan.hull));
  c.line("inputs", std::to_string(basis.size()) + " packets on band " + interval_text(opts.test_band));
  c.line("bound states", std::to_string(bound.size()) + " certified at L = " + std::to_string(lb));
  const CompletenessThresholds th;
  c.line("thresholds", "cauchy gate " + num(th.cauchy_gate) + ", isometry " + num(th.isometry) +
                           ", orthogonality " + num(th.orthogonality));

  Table t{{"sign", "T", "cauchy_defect", "isometry_defect"}, {}};
  json signs = json::array();
  Status status = Status::ok;
  for (int sign : {+1, -1}) {
    const auto results = wave_operators(h, h0, pac, basis, sign, grid, plan, opts);
    const CompletenessResult verdict = completeness_check(results, bound, th);
    const std::size_t steps = results.front().times.size();
    std::vector<double> cauchy(steps, 0.0), iso(steps, 0.0);
    double intertwining = 0.0, front = 0.0;
    for (const auto& r : results) {
      for (std::size_t k = 0; k < steps; ++k) {
        if (k > 0) cauchy[k] = std::max(cauchy[k], r.cauchy_defects[k - 1]);
        iso[k] = std::max(iso[k], std::abs(r.norms[k] - r.projected.norm()));
      }
      intertwining = std::max(intertwining, r.intertwining_residual);
      front = std::max(front, r.front_mass);
    }
    for (std::size_t k = 0; k < steps; ++k)
      t.add({sign > 0 ? "+" : "-", num(results.front().times[k]), k ? sci(cauchy[k]) : "-", sci(iso[k])});
    const std::string tag = sign > 0 ? "sign +" : "sign -";
    c.line(tag + " verdict", to_string(verdict.verdict) + (verdict.reason.empty() ? "" : " (" + verdict.reason + ")"));
    c.line(tag + " gram defect", sci(verdict.gram_defect));
    c.line(tag + " bound overlap", sci(verdict.bound_state_overlap));
    c.line(tag + " intertwining", sci(intertwining));
    c.line(tag + " front mass", sci(front));
    if (verdict.verdict != Verdict::pass) status = Status::inconclusive;
    signs.push_back({{"sign", sign},
                     {"times", results.front().times},
                     {"cauchy_defects", cauchy},
                     {"isometry_defects", iso},
                     {"gram_defect", verdict.gram_defect},
                     {"bound_state_overlap", verdict.bound_state_overlap},
                     {"cauchy_gate", verdict.cauchy_gate},
                     {"cauchy_decreasing", verdict.cauchy_decreasing},
                     {"intertwining_residual", intertwining},
                     {"front_mass", front},
                     {"verdict", to_string(verdict.verdict)},
                     {"reason", verdict.reason}});
    if (c.cfg.dump_states)
      for (std::size_t i = 0; i < results.size(); ++i)
        c.files["omega" + std::string(sign > 0 ? "_plus_" : "_minus_") + std::to_string(i) + ".txt"] =
            format_vector_records(results[i].omega, window);
  }
  c.text << t.text();
  json bound_values = json::array();
  for (const auto& b : bound) bound_values.push_back(b.value);
  c.record["wave_op"] = {{"kind", kind_name(kind)}, {"half_length", l},           {"T_max", tmax},
                         {"signs", signs},          {"bound_states", bound_values}};
  c.files["wave.csv"] = t.csv();
  return status;
}

Status task_full_report(Context& c) {
  struct Section {
    std::string name;
    std::function<Status()> body;
  };
  std::vector<double> point_spectrum;
  std::vector<Section> sections = {
      {"bands", [&] { return task_bands(c); }},
      {"critical set", [&] { return task_critical(c); }},
      {"essential spectrum", [&] { return task_essential(c); }},
      {"gap eigenvalues",
       [&] {
         const auto r = task_gap_eigs(c, std::min(c.half_length_or(1024), 512));
         for (const auto& e : r.pairs) point_spectrum.push_back(e.value);
         return r.status;
       }},
  };
  if (c.pert) sections.push_back({"classification", [&] { return task_classify(c); }});
  sections.push_back({"mourre estimate", [&] { return task_mourre(c, 256); }});
  sections.push_back({"limiting absorption", [&] { return task_lap(c, 512); }});

  Status status = Status::ok;
  int failures = 0;
  json section_status = json::object();
  for (auto& s : sections) {
    try {
      const Status st = s.body();
      status = worse(status, st);
      section_status[s.name] = st == Status::ok ? "ok" : "inconclusive";
    } catch (const Error& e) {
      ++failures;
      c.heading(s.name);
      c.text << "  failed: " << e.what() << '\n';
      section_status[s.name] = std::string("failed: ") + e.what();
    }
  }

  c.heading("tau = critical set U certified point spectrum");
  std::vector<double> tau = c.kappa.values();
  tau.insert(tau.end(), point_spectrum.begin(), point_spectrum.end());
  std::sort(tau.begin(), tau.end());
  const double tol = 1e-8 * (c.bands.spectral_diameter() + 1.0);
  tau.erase(std::unique(tau.begin(), tau.end(), [&](double a, double b) { return b - a <= tol; }), tau.end());
  std::string listed;
  for (double x : tau) listed += (listed.empty() ? "" : ", ") + num(x);
  c.line("tau", "{" + listed + "}");
  c.record["tau"] = tau;
  c.record["sections"] = section_status;
  if (failures == static_cast<int>(sections.size()))
    throw Error(ErrorKind::numeric, "full-report", "every section failed");
  return status;
}

// ---------------------------------------------------------------------------- config

void validate(const RunConfig& cfg) {
  const auto& names = task_names();
  if (std::find(names.begin(), names.end(), cfg.task) == names.end()) bad_config("unknown task '" + cfg.task + "'");
  if (cfg.grid) {
    const int k = *cfg.grid;
    if (k < 8 || k > kMaxGrid || (k & (k - 1))) bad_config("K must be a power of two in 8..8192");
  }
  if (cfg.half_length && (*cfg.half_length < 8 || *cfg.half_length > kMaxHalfLength))
    bad_config("L must lie in 8..8192");
  if (!(cfg.s > 0.5 && cfg.s <= 1.5)) bad_config("s must lie in (1/2, 3/2]");
  if (!(cfg.sigma >= 0.0 && cfg.sigma <= 2.0)) bad_config("sigma must lie in [0, 2]");
  if (!(cfg.t_max > 0.0 && cfg.t_max <= 2000.0)) bad_config("tmax must lie in (0, 2000]");
  if (!(cfg.wave_t_max > 0.0 && cfg.wave_t_max <= 2000.0)) bad_config("Tmax must lie in (0, 2000]");
  if (cfg.symbol.empty()) bad_config("--symbol is required");
}

void write_header(Context& c) {
  const RunConfig& cfg = c.cfg;
  c.text << "toeplitz_spectra report\n=======================\n";
  c.heading("configuration");
  c.line("task", cfg.task);
  c.line("symbol", cfg.symbol.string() + " (block size " + std::to_string(c.sym.block_size()) + ", cutoff " +
                       std::to_string(c.sym.cutoff()) + ")");
  c.line("perturbation", cfg.perturbation ? cfg.perturbation->string() : "none");
  c.line("K", std::to_string(c.grid));
  c.line("L", cfg.half_length ? std::to_string(*cfg.half_length) : "task default");
  c.line("operator kind", cfg.kind ? kind_name(*cfg.kind) : "task default");
  c.line("s", num(cfg.s));
  c.line("sigma", num(cfg.sigma));
  c.line("delta", cfg.delta ? interval_text(*cfg.delta) : "task default");
  c.line("gap", cfg.gap ? interval_text(*cfg.gap) : "all gaps");
  c.line("tmax", num(cfg.t_max));
  c.line("Tmax", num(cfg.wave_t_max));
  char seed[24];
  std::snprintf(seed, sizeof seed, "0x%llx", static_cast<unsigned long long>(cfg.seed));
  c.line("seed", seed);

  c.heading("tolerances");
  c.line("bands", "Jacobi off-diagonal 1e-14, eigenpair residual 1e-10 of the coefficient mass");
  c.line("critical set", "crossing gap 1e-9 (diameter + 1), stationary slope 1e-8 (band width + 1), merge 1e-6");
  c.line("gap-eigs", "bisection 1e-10, cluster 1e-9, residual 1e-8, boundary mass 1e-6, L/2L 1e-8");
  c.line("mourre-check", "filter tail 1e-6, degree >= 200, defect threshold 0.1");
  c.line("lap-sweep", "refined residual 1e-10, Lanczos 1e-4, decade ratio 2, L/2L agreement 0.1");
  c.line("classify", "C11 slope <= -0.1 stable under k_max + 1, k_max 14");
  c.line("propagate", "Chebyshev-Bessel 1e-8, filter tail 1e-8, front mass 1e-6");
  c.line("wave-op", "Chebyshev-Bessel 1e-8, gates 2e-2, front mass 1e-6");

  c.record["config"] = {{"task", cfg.task},
                        {"symbol", cfg.symbol.string()},
                        {"perturbation", cfg.perturbation ? json(cfg.perturbation->string()) : json(nullptr)},
                        {"K", c.grid},
                        {"L", cfg.half_length ? json(*cfg.half_length) : json(nullptr)},
                        {"kind", cfg.kind ? json(kind_name(*cfg.kind)) : json(nullptr)},
                        {"s", cfg.s},
                        {"sigma", cfg.sigma},
                        {"delta", cfg.delta ? interval_json(*cfg.delta) : json(nullptr)},
                        {"gap", cfg.gap ? interval_json(*cfg.gap) : json(nullptr)},
                        {"tmax", cfg.t_max},
                        {"Tmax", cfg.wave_t_max},
                        {"seed", seed}};
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::config, "cli", "cannot write " + path.string());
  out << content;
}

int exit_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config:
    case ErrorKind::precondition: return exit_config;
    case ErrorKind::numeric: return exit_numeric;
    case ErrorKind::inconclusive: return exit_inconclusive;
  }
  return exit_numeric;
}

}  // namespace

const std::vector<std::string>& task_names() {
  static const std::vector<std::string> names = {"bands",    "spectrum", "gap-eigs",  "mourre-check", "lap-sweep",
                                                 "classify", "propagate", "wave-op", "full-report"};
  return names;
}

Interval parse_interval(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) bad_config("interval '" + text + "' must be LO:HI");
  try {
    std::size_t a = 0, b = 0;
    const std::string lo_text = text.substr(0, colon), hi_text = text.substr(colon + 1);
    const double lo = std::stod(lo_text, &a), hi = std::stod(hi_text, &b);
    if (a != lo_text.size() || b != hi_text.size()) throw std::invalid_argument("trailing text");
    if (!(lo < hi)) bad_config("interval '" + text + "' needs LO < HI");
    return {lo, hi};
  } catch (const std::logic_error&) {
    bad_config("interval '" + text + "' must be LO:HI");
  }
}

std::uint64_t parse_seed(const std::string& text) {
  std::string digits = text;
  if (digits.rfind("0x", 0) == 0 || digits.rfind("0X", 0) == 0) digits = digits.substr(2);
  if (digits.empty() || digits.size() > 16 ||
      digits.find_first_not_of("0123456789abcdefABCDEF") != std::string::npos)
    bad_config("seed '" + text + "' must be hexadecimal");
  return std::stoull(digits, nullptr, 16);
}

int run(const RunConfig& config, std::ostream& console) {
  Context c;
  c.cfg = config;
  int code = exit_ok;
  std::string failure;
  bool header_written = false;
  try {
    validate(config);
    c.sym = read_symbol(config.symbol);
    if (config.perturbation) c.pert = read_perturbation(*config.perturbation, c.sym.block_size());
    c.grid = config.grid.value_or(std::max(2048, next_pow2(4LL * c.sym.cutoff() + 4)));
    if (c.grid > kMaxGrid) bad_config("cutoff needs K > 8192");
    write_header(c);
    header_written = true;
    c.bands = compute_bands(c.sym, c.grid);
    c.kappa = compute_critical_set(c.sym, c.bands);
    c.ess = essential_spectrum(c.bands);

    Status status = Status::ok;
    const std::string& task = config.task;
    if (task == "bands") status = task_bands(c);
    else if (task == "spectrum") status = task_spectrum(c);
    else if (task == "gap-eigs") status = task_gap_eigs(c).status;
    else if (task == "mourre-check") status = task_mourre(c);
    else if (task == "lap-sweep") status = task_lap(c);
    else if (task == "classify") status = task_classify(c);
    else if (task == "propagate") status = task_propagate(c);
    else if (task == "wave-op") status = task_wave(c);
    else status = task_full_report(c);
    if (status == Status::inconclusive) code = exit_inconclusive;
  } catch (const Error& e) {
    code = exit_for(e.kind());
    failure = e.what();
  } catch (const std::exception& e) {
    code = exit_numeric;
    failure = std::string("unexpected: ") + e.what();
  }

  if (!failure.empty()) {
    c.heading("error");
    c.text << "  " << failure << '\n';
    c.record["error"] = failure;
  }
  c.heading("outcome");
  const char* outcome = code == exit_ok             ? "ok"
                        : code == exit_config       ? "configuration error"
                        : code == exit_numeric      ? "numeric failure"
                                                    : "inconclusive";
  c.line("exit status", std::to_string(code) + " (" + outcome + ")");
  c.record["exit_status"] = code;
  if (!header_written) c.record["config"] = {{"task", config.task}, {"symbol", config.symbol.string()}};

  try {
    std::filesystem::create_directories(config.out);
    write_file(config.out / "REPORT.txt", c.text.str());
    const std::string record_name = (config.task.empty() ? std::string("run") : config.task) + ".json";
    write_file(config.out / record_name, c.record.dump(2) + "\n");
    for (const auto& [name, content] : c.files) write_file(config.out / name, content);
  } catch (const std::exception& e) {
    console << "cannot write outputs: " << e.what() << '\n';
    return code == exit_ok ? exit_config : code;
  }
  console << c.text.str();
  return code;
}

}  // namespace tspec
