#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tspec/io.hpp"

using namespace tspec;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::numeric;
}

}  // namespace

TEST_CASE("symbol documents round trip") {
  for (const auto& sym : {models::off_diagonal(2.0, 1.0), models::scalar_cos(), models::diag_cos_zero(),
                          models::periodic_jacobi({1.0, 0.5, 2.0}, {0.1, -0.2, 0.0})}) {
    const MatrixSymbol back = parse_symbol(format_symbol(sym));
    REQUIRE(back.block_size() == sym.block_size());
    REQUIRE(back.cutoff() == sym.cutoff());
    for (int j = -sym.cutoff(); j <= sym.cutoff(); ++j) CHECK((back.coeff(j) - sym.coeff(j)).norm() == 0.0);
  }
}

TEST_CASE("symbol document validation") {
  const std::string ok = R"({"block_size": 1, "cutoff": 1,
    "coefficients": [{"j": 0, "entries": [[0, 0]]}, {"j": 1, "entries": [[0.5, 0.25]]}]})";
  const MatrixSymbol s = parse_symbol(ok);
  CHECK(s.coeff(-1)(0, 0) == cplx(0.5, -0.25));

  // a listed negative coefficient must be the conjugate transpose
  const std::string consistent = R"({"block_size": 1, "cutoff": 1, "coefficients": [{"j": 0, "entries": [[0, 0]]},
    {"j": 1, "entries": [[0.5, 0.25]]}, {"j": -1, "entries": [[0.5, -0.25]]}]})";
  CHECK_NOTHROW(parse_symbol(consistent));
  const std::string inconsistent = R"({"block_size": 1, "cutoff": 1, "coefficients": [{"j": 0, "entries": [[0, 0]]},
    {"j": 1, "entries": [[0.5, 0.25]]}, {"j": -1, "entries": [[0.5, 0.25]]}]})";
  CHECK(kind_of([&] { parse_symbol(inconsistent); }) == ErrorKind::config);

  CHECK(kind_of([] { parse_symbol("{not json"); }) == ErrorKind::config);
  CHECK(kind_of([] { parse_symbol(R"({"block_size": 1, "cutoff": 1, "coefficients": [{"j": 0, "entries": [[0, 0]]}]})"); }) ==
        ErrorKind::config);
  CHECK(kind_of([] { parse_symbol(R"({"block_size": 2, "cutoff": 0, "coefficients": [{"j": 0, "entries": [[0, 0]]}]})"); }) ==
        ErrorKind::config);
  // non-Hermitian A_0
  CHECK(kind_of([] {
          parse_symbol(R"({"block_size": 1, "cutoff": 0, "coefficients": [{"j": 0, "entries": [[0, 1]]}]})");
        }) == ErrorKind::config);
  CHECK(kind_of([] { read_symbol("/nonexistent/symbol.json"); }) == ErrorKind::config);
}

TEST_CASE("perturbation documents") {
  const auto ex = parse_perturbation(R"({"kind": "exponential", "c": 2.0, "rate": 0.5, "one_sided": true,
    "pattern": [[2, 0], [0, 0], [0, 0], [-1, 0]]})", 2);
  CHECK(ex.kind == PerturbationSpec::Kind::exponential);
  CHECK(ex.scale == 2.0);
  CHECK(ex.rate == 0.5);
  CHECK(ex.one_sided);
  // pattern normalized to unit operator norm
  CHECK(ex.pattern(0, 0).real() == doctest::Approx(1.0));
  CHECK(ex.pattern(1, 1).real() == doctest::Approx(-0.5));

  const auto r1 = parse_perturbation(R"({"kind": "rank_one", "strength": 0.3,
    "psi": {"first_site": -1, "values": [[1, 0], [0, 1], [0.5, 0]]}})", 1);
  CHECK(r1.kind == PerturbationSpec::Kind::rank_one);
  CHECK(r1.strength == 0.3);
  CHECK(r1.psi.first_site == -1);
  CHECK(r1.psi.at(0)(0) == cplx(0.0, 1.0));

  const auto box = parse_perturbation(R"({"kind": "box", "extent": 2,
    "entries": [{"i": 0, "j": 1, "block": [[1, 0]]}, {"i": 1, "j": 0, "block": [[1, 0]]}]})", 1);
  CHECK(box.extent == 2);
  CHECK(box.entries.size() == 2);

  CHECK(kind_of([] { parse_perturbation(R"({"kind": "magic"})", 1); }) == ErrorKind::config);
  CHECK(kind_of([] { parse_perturbation(R"({"kind": "power", "c": 1})", 1); }) == ErrorKind::config);
  CHECK(kind_of([] { parse_perturbation(R"({"kind": "power", "c": 1, "rate": -1})", 1); }) == ErrorKind::config);
  // v_ij = v_ji^* violated
  CHECK(kind_of([] {
          parse_perturbation(R"({"kind": "explicit", "entries": [{"i": 0, "j": 1, "block": [[1, 0]]},
            {"i": 1, "j": 0, "block": [[2, 0]]}]})", 1);
        }) == ErrorKind::config);
  CHECK(kind_of([] {
          parse_perturbation(R"({"kind": "exponential", "c": 1, "rate": 1, "pattern": [[0, 1]]})", 1);
        }) == ErrorKind::config);
}

TEST_CASE("vector records round trip") {
  const auto w = LatticeWindow::two_sided(3, 2);
  CVector v(w.dim());
  for (int i = 0; i < v.size(); ++i) v(i) = cplx(std::sin(1.0 + i), std::cos(0.3 * i) / 7.0);
  const LatticeVector back = parse_vector_records(format_vector_records(v, w), 2);
  CHECK(back.first_site == -3);
  CHECK((back.on(w) - v).norm() == 0.0);

  const LatticeVector sparse = parse_vector_records("# comment\n4 0 1.5 0\n\n2 0 -1 0.5 # trailing\n", 1);
  CHECK(sparse.first_site == 2);
  CHECK(sparse.sites() == 3);
  CHECK(sparse.at(3)(0) == cplx(0.0));
  CHECK(sparse.at(2)(0) == cplx(-1.0, 0.5));
  CHECK(kind_of([] { parse_vector_records("1 0 2\n", 1); }) == ErrorKind::config);
  CHECK(kind_of([] { parse_vector_records("1 3 2 0\n", 2); }) == ErrorKind::config);
  CHECK(kind_of([] { parse_vector_records("# nothing\n", 1); }) == ErrorKind::config);
}
