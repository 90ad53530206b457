#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "hmmreal/recover.hpp"
#include "hmmreal/sampling.hpp"

namespace hmmreal::io {

using Json = nlohmann::ordered_json;

// Matrices are stored row-major as nested arrays.
Json to_json(const Matrix& X);
Json to_json(const Vector& x);
Matrix matrix_from_json(const Json& j, const char* what);
Vector vector_from_json(const Json& j, const char* what);

// {"d", "k", "Q", "O", "pi"}. The reader recomputes pi from Q and rejects a
// stored pi that disagrees by more than 1e-8.
Json model_to_json(const Hmm& model);
Hmm model_from_json(const Json& j);

// {"d", "N", "values"} ordered by string index.
Json table_to_json(const JointTable& table);
JointTable table_from_json(const Json& j);

// {"d", "k", "u", "v", "ops", "convention"}
Json quasi_to_json(const QuasiHmm& model);
QuasiHmm quasi_from_json(const Json& j);

// {"k", "A", "B", "C", "residual", "backend"}
Json factors_to_json(const CpFactors& f);

// {model, strategy, backend, residuals, repair_magnitude, verify_error}
Json recovery_to_json(const RecoveryResult& r);

Json diagnostics_to_json(const RealizationDiagnostics& diag);

/// One line per sequence of space-separated 1-based letters after a
/// "#d=<d>" header. Anything after the header's first token is ignored.
void write_sequences(std::ostream& os, const SampleBatch& batch);
SampleBatch read_sequences(std::istream& is);

/// CSV rows d,k,n,sigma_index,sigma_value (1-based index).
void write_spectrum_csv(std::ostream& os, int d, int k, int n, const Vector& sigma, bool header = true);

Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

/// Shortest decimal form that reads back to the same double.
std::string format_double(double x);

}  // namespace hmmreal::io
