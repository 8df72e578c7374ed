#pragma once

#include <filesystem>
#include <string>

#include "tspec/lattice.hpp"
#include "tspec/symbol.hpp"

namespace tspec {

/// Symbol document (JSON):
///   {"block_size": N, "cutoff": M,
///    "coefficients": [{"j": 0, "entries": [[re, im], ...]}, ...]}
/// entries are row-major. Every j in [0, M] must appear once; a negative j is accepted only
/// when it equals the conjugate transpose of coeff(-j) to 1e-12. Errors are config errors.
MatrixSymbol parse_symbol(const std::string& text);
MatrixSymbol read_symbol(const std::filesystem::path& path);
std::string format_symbol(const MatrixSymbol& sym);

/// Perturbation document (JSON), one of
///   {"kind": "exponential" | "power" | "separable", "c": C, "rate": r, "one_sided": bool, "pattern": [...]}
///   {"kind": "convolution", "c": C, "rate": q, "pattern": [...]}
///   {"kind": "rank_one", "strength": g, "psi": {"first_site": n0, "values": [[re, im], ...]}}
///   {"kind": "rank_one", "strength": g, "psi_file": "vector records, relative to the document"}
///   {"kind": "explicit", "entries": [{"i": i, "j": j, "block": [[re, im], ...]}], "one_sided": bool}
///   {"kind": "box", "extent": e, "entries": [...], "one_sided": bool}
/// `block_size` sizes patterns, psi blocks and entry blocks.
PerturbationSpec parse_perturbation(const std::string& text, int block_size,
                                    const std::filesystem::path& base = {});
PerturbationSpec read_perturbation(const std::filesystem::path& path, int block_size);

/// Vector records: one "site component re im" line per entry; '#' starts a comment.
std::string format_vector_records(const CVector& v, const LatticeWindow& window);
LatticeVector parse_vector_records(const std::string& text, int block_size);

}  // namespace tspec
