#include "tspec/io.hpp"

#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include <json.hpp>

namespace tspec {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& where, const std::string& what) { throw Error(ErrorKind::config, where, what); }

std::string slurp(const std::filesystem::path& path, const std::string& where) {
  std::ifstream in(path);
  if (!in) bad(where, "cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json parse_json(const std::string& text, const std::string& where) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    bad(where, std::string("malformed document: ") + e.what());
  }
}

template <class T>
T field(const json& doc, const char* key, const std::string& where) {
  if (!doc.contains(key)) bad(where, std::string("missing field '") + key + "'");
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    bad(where, std::string("field '") + key + "' has the wrong type");
  }
}

template <class T>
T field_or(const json& doc, const char* key, T fallback, const std::string& where) {
  return doc.contains(key) ? field<T>(doc, key, where) : fallback;
}

CMatrix complex_block(const json& pairs, int n, const std::string& where) {
  if (!pairs.is_array() || static_cast<int>(pairs.size()) != n * n)
    bad(where, "block needs " + std::to_string(n * n) + " complex entries");
  CMatrix m(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      const json& e = pairs[r * n + c];
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
        bad(where, "complex entries are [re, im] pairs");
      m(r, c) = cplx(e[0].get<double>(), e[1].get<double>());
    }
  return m;
}

json pairs_of(const CMatrix& m) {
  json out = json::array();
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) out.push_back({m(r, c).real(), m(r, c).imag()});
  return out;
}

std::vector<PerturbationSpec::Entry> entry_list(const json& doc, int n, const std::string& where) {
  if (!doc.contains("entries") || !doc["entries"].is_array()) bad(where, "missing entry list");
  std::vector<PerturbationSpec::Entry> out;
  for (const json& e : doc["entries"])
    out.push_back({field<int>(e, "i", where), field<int>(e, "j", where),
                   complex_block(e.contains("block") ? e["block"] : json(), n, where)});
  return out;
}

}  // namespace

MatrixSymbol parse_symbol(const std::string& text) {
  const std::string where = "read_symbol";
  const json doc = parse_json(text, where);
  const int n = field<int>(doc, "block_size", where);
  const int m = field<int>(doc, "cutoff", where);
  if (n < 1 || n > 64) bad(where, "block_size must lie in 1..64");
  if (m < 0 || m > 4096) bad(where, "cutoff must lie in 0..4096");
  if (!doc.contains("coefficients") || !doc["coefficients"].is_array()) bad(where, "missing coefficient list");
  std::map<int, CMatrix> given;
  for (const json& c : doc["coefficients"]) {
    const int j = field<int>(c, "j", where);
    if (std::abs(j) > m) bad(where, "coefficient index " + std::to_string(j) + " exceeds the cutoff");
    if (given.count(j)) bad(where, "coefficient " + std::to_string(j) + " listed twice");
    given[j] = complex_block(c.contains("entries") ? c["entries"] : json(), n, where + " (coefficient " + std::to_string(j) + ")");
  }
  std::vector<CMatrix> nonneg;
  for (int j = 0; j <= m; ++j) {
    if (!given.count(j)) bad(where, "coefficient " + std::to_string(j) + " missing");
    nonneg.push_back(given[j]);
  }
  for (const auto& [j, a] : given) {
    if (j >= 0) continue;
    const double scale = std::max(1.0, given[-j].norm());
    if ((a - given[-j].adjoint()).norm() > 1e-12 * scale)
      bad(where, "coefficient " + std::to_string(j) + " is not the conjugate transpose of coefficient " +
                     std::to_string(-j));
  }
  try {
    return MatrixSymbol(nonneg);
  } catch (const Error& e) {
    bad(where, e.what());
  }
}

MatrixSymbol read_symbol(const std::filesystem::path& path) { return parse_symbol(slurp(path, "read_symbol")); }

std::string format_symbol(const MatrixSymbol& sym) {
  json doc;
  doc["block_size"] = sym.block_size();
  doc["cutoff"] = sym.cutoff();
  doc["coefficients"] = json::array();
  for (int j = 0; j <= sym.cutoff(); ++j) doc["coefficients"].push_back({{"j", j}, {"entries", pairs_of(sym.coeff(j))}});
  return doc.dump(2) + "\n";
}

PerturbationSpec parse_perturbation(const std::string& text, int block_size, const std::filesystem::path& base) {
  const std::string where = "read_perturbation";
  const json doc = parse_json(text, where);
  const std::string kind = field<std::string>(doc, "kind", where);
  const int n = block_size;
  PerturbationSpec spec;
  if (kind == "exponential" || kind == "power" || kind == "separable" || kind == "convolution") {
    const double c = field<double>(doc, "c", where), rate = field<double>(doc, "rate", where);
    const bool one_sided = field_or<bool>(doc, "one_sided", false, where);
    if (!(rate > 0.0)) bad(where, "rate must be positive");
    if (kind == "exponential") spec = PerturbationSpec::exponential(c, rate, one_sided);
    if (kind == "power") spec = PerturbationSpec::power(c, rate, one_sided);
    if (kind == "separable") spec = PerturbationSpec::separable(c, rate, one_sided);
    if (kind == "convolution") {
      if (one_sided) bad(where, "convolution generators are two-sided");
      spec = PerturbationSpec::convolution(c, rate);
    }
    if (doc.contains("pattern")) {
      const CMatrix p = complex_block(doc["pattern"], n, where + " (pattern)");
      if ((p - p.adjoint()).norm() > 1e-12 * std::max(1.0, p.norm())) bad(where, "pattern must be Hermitian");
      const double norm = Eigen::SelfAdjointEigenSolver<CMatrix>(p).eigenvalues().cwiseAbs().maxCoeff();
      if (!(norm > 0.0)) bad(where, "pattern must be nonzero");
      spec.pattern = p / norm;
    }
  } else if (kind == "rank_one") {
    const double strength = field_or<double>(doc, "strength", 1.0, where);
    LatticeVector psi;
    if (doc.contains("psi_file")) {
      const std::filesystem::path p = base / field<std::string>(doc, "psi_file", where);
      psi = parse_vector_records(slurp(p, where), n);
    } else {
      if (!doc.contains("psi")) bad(where, "rank_one needs psi or psi_file");
      const json& v = doc["psi"];
      psi.first_site = field_or<int>(v, "first_site", 0, where);
      psi.block_size = n;
      if (!v.contains("values") || !v["values"].is_array() || v["values"].empty() || v["values"].size() % n)
        bad(where, "psi values must be a nonempty multiple of the block size");
      psi.values.resize(v["values"].size());
      for (std::size_t i = 0; i < v["values"].size(); ++i) {
        const json& e = v["values"][i];
        if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
          bad(where, "complex entries are [re, im] pairs");
        psi.values(i) = cplx(e[0].get<double>(), e[1].get<double>());
      }
    }
    spec = PerturbationSpec::rank_one(psi, strength);
  } else if (kind == "explicit") {
    spec = PerturbationSpec::explicit_list(entry_list(doc, n, where), field_or<bool>(doc, "one_sided", false, where));
  } else if (kind == "box") {
    spec = PerturbationSpec::box(field<int>(doc, "extent", where), entry_list(doc, n, where),
                                 field_or<bool>(doc, "one_sided", false, where));
  } else {
    bad(where, "unknown perturbation kind '" + kind + "'");
  }
  try {
    spec.validate(n);
  } catch (const Error& e) {
    bad(where, e.what());
  }
  return spec;
}

PerturbationSpec read_perturbation(const std::filesystem::path& path, int block_size) {
  return parse_perturbation(slurp(path, "read_perturbation"), block_size, path.parent_path());
}

std::string format_vector_records(const CVector& v, const LatticeWindow& window) {
  if (v.size() != window.dim()) throw Error(ErrorKind::precondition, "format_vector_records", "dimension mismatch");
  std::ostringstream out;
  out << "# site component re im\n" << std::setprecision(17);
  for (int i = 0; i < v.size(); ++i)
    out << window.site_of(i) << ' ' << i % window.block_size << ' ' << v(i).real() << ' ' << v(i).imag() << '\n';
  return out.str();
}

LatticeVector parse_vector_records(const std::string& text, int block_size) {
  const std::string where = "parse_vector_records";
  std::map<int, CVector> sites;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream row(line);
    int site, comp;
    double re, im;
    if (!(row >> site)) continue;
    if (!(row >> comp >> re >> im)) bad(where, "line " + std::to_string(number) + ": expected site component re im");
    if (comp < 0 || comp >= block_size) bad(where, "line " + std::to_string(number) + ": component out of range");
    auto [it, fresh] = sites.try_emplace(site, CVector::Zero(block_size));
    it->second(comp) = cplx(re, im);
  }
  if (sites.empty()) bad(where, "no records");
  const int lo = sites.begin()->first, hi = sites.rbegin()->first;
  LatticeVector v{lo, block_size, CVector::Zero(static_cast<Eigen::Index>(hi - lo + 1) * block_size)};
  for (const auto& [site, block] : sites) v.values.segment((site - lo) * block_size, block_size) = block;
  return v;
}

}  // namespace tspec
