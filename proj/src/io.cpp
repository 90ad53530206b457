#include "hmmreal/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "hmmreal/error.hpp"

namespace hmmreal::io {

std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

Json to_json(const Matrix& X) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < X.cols(); ++j) row.push_back(X(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json to_json(const Vector& x) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < x.size(); ++i) out.push_back(x(i));
  return out;
}

Matrix matrix_from_json(const Json& j, const char* what) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    fail(ErrorKind::InvalidInput, std::string(what) + ": expected a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Matrix X(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      fail(ErrorKind::InvalidInput, std::string(what) + ": ragged rows");
    for (Eigen::Index c = 0; c < cols; ++c) {
      const Json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) fail(ErrorKind::InvalidInput, std::string(what) + ": non-numeric entry");
      X(r, c) = v.get<double>();
    }
  }
  return X;
}

Vector vector_from_json(const Json& j, const char* what) {
  if (!j.is_array()) fail(ErrorKind::InvalidInput, std::string(what) + ": expected an array");
  Vector x(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) fail(ErrorKind::InvalidInput, std::string(what) + ": non-numeric entry");
    x(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return x;
}

namespace {

int int_field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || !j[key].is_number_integer())
    fail(ErrorKind::InvalidInput, std::string("missing integer field '") + key + "'");
  return j[key].get<int>();
}

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    fail(ErrorKind::InvalidInput, std::string("missing field '") + key + "'");
  return j[key];
}

}  // namespace

Json model_to_json(const Hmm& model) {
  Json j;
  j["d"] = model.d();
  j["k"] = model.k();
  j["Q"] = to_json(model.Q);
  j["O"] = to_json(model.O);
  j["pi"] = to_json(model.pi);
  return j;
}

Hmm model_from_json(const Json& j) {
  const int d = int_field(j, "d");
  const int k = int_field(j, "k");
  Matrix Q = matrix_from_json(field(j, "Q"), "Q");
  Matrix O = matrix_from_json(field(j, "O"), "O");
  if (Q.rows() != k || Q.cols() != k) fail(ErrorKind::InvalidInput, "Q must be k x k");
  if (O.rows() != d || O.cols() != k) fail(ErrorKind::InvalidInput, "O must be d x k");
  Hmm m = make_hmm(std::move(Q), std::move(O));
  if (j.contains("pi")) {
    const Vector stored = vector_from_json(j["pi"], "pi");
    if (stored.size() != k || (stored - m.pi).cwiseAbs().maxCoeff() > 1e-8)
      fail(ErrorKind::InvalidInput, "stored pi disagrees with the stationary law of Q");
    m.pi = stored;  // keeps write/read round trips exact
  }
  return m;
}

Json table_to_json(const JointTable& table) {
  Json j;
  j["d"] = table.d;
  j["N"] = table.N;
  j["values"] = to_json(table.values);
  if (table.provenance == Provenance::Empirical) j["samples"] = table.samples;
  return j;
}

JointTable table_from_json(const Json& j) {
  JointTable t;
  t.d = int_field(j, "d");
  t.N = int_field(j, "N");
  if (t.d < 1 || t.N < 1) fail(ErrorKind::InvalidInput, "table needs d >= 1 and N >= 1");
  t.values = vector_from_json(field(j, "values"), "values");
  if (t.values.size() != checked_power(t.d, t.N))
    fail(ErrorKind::InvalidInput, "table must hold d^N values");
  if (j.contains("samples")) {
    t.provenance = Provenance::Empirical;
    t.samples = j["samples"].get<std::int64_t>();
  }
  return t;
}

Json quasi_to_json(const QuasiHmm& model) {
  Json j;
  j["d"] = model.d();
  j["k"] = model.k();
  j["u"] = to_json(model.u);
  j["v"] = to_json(model.v);
  Json ops = Json::array();
  for (const auto& A : model.ops) ops.push_back(to_json(A));
  j["ops"] = std::move(ops);
  j["convention"] = kOperatorConvention;
  return j;
}

QuasiHmm quasi_from_json(const Json& j) {
  const int d = int_field(j, "d");
  const int k = int_field(j, "k");
  QuasiHmm q;
  q.u = vector_from_json(field(j, "u"), "u");
  q.v = vector_from_json(field(j, "v"), "v");
  const Json& ops = field(j, "ops");
  if (!ops.is_array() || static_cast<int>(ops.size()) != d)
    fail(ErrorKind::InvalidInput, "ops must hold d matrices");
  for (const auto& A : ops) q.ops.push_back(matrix_from_json(A, "ops"));
  if (q.u.size() != k || q.v.size() != k) fail(ErrorKind::InvalidInput, "u and v must have k entries");
  for (const auto& A : q.ops)
    if (A.rows() != k || A.cols() != k) fail(ErrorKind::InvalidInput, "operators must be k x k");
  return q;
}

Json factors_to_json(const CpFactors& f) {
  Json j;
  j["k"] = f.k;
  j["A"] = to_json(f.A);
  j["B"] = to_json(f.B);
  j["C"] = to_json(f.C);
  j["residual"] = f.residual;
  j["backend"] = to_string(f.backend);
  return j;
}

Json recovery_to_json(const RecoveryResult& r) {
  Json j;
  j["model"] = model_to_json(r.model);
  j["strategy"] = to_string(r.strategy);
  j["backend"] = to_string(r.backend);
  j["residuals"] = {{"cp", r.cp_residual}, {"O", r.O_residual}, {"Q", r.Q_residual}};
  j["repair_magnitude"] = r.repair;
  j["verify_error"] = r.verify_error;
  j["notes"] = r.notes;
  return j;
}

Json diagnostics_to_json(const RealizationDiagnostics& diag) {
  Json j;
  j["detected_rank"] = diag.detected_rank;
  j["used_rank"] = diag.used_rank;
  j["sigma_k"] = diag.sigma_k;
  j["singular_values"] = to_json(diag.singular_values);
  j["verify_error"] = diag.verify_error;
  j["norm_residual_u"] = diag.norm_residual_u;
  j["norm_residual_v"] = diag.norm_residual_v;
  j["warnings"] = diag.warnings;
  return j;
}

void write_sequences(std::ostream& os, const SampleBatch& batch) {
  os << "#d=" << batch.d << '\n';
  for (const auto& s : batch.sequences) {
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? " " : "") << s[i] + 1;
    os << '\n';
  }
}

SampleBatch read_sequences(std::istream& is) {
  SampleBatch batch;
  std::string line;
  if (!std::getline(is, line) || line.rfind("#d=", 0) != 0)
    fail(ErrorKind::InvalidInput, "sequence file must start with a '#d=<d>' header");
  try {
    batch.d = std::stoi(line.substr(3));
  } catch (const std::exception&) {
    fail(ErrorKind::InvalidInput, "malformed sequence header '" + line + "'");
  }
  if (batch.d < 1) fail(ErrorKind::InvalidInput, "alphabet size must be >= 1");
  int min_len = -1;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    Letters s;
    int letter = 0;
    while (ls >> letter) {
      if (letter < 1 || letter > batch.d)
        fail(ErrorKind::InvalidInput, "letter " + std::to_string(letter) + " outside 1.." + std::to_string(batch.d));
      s.push_back(letter - 1);
    }
    if (!ls.eof()) fail(ErrorKind::InvalidInput, "non-integer token in sequence file");
    if (s.empty()) continue;
    const int len = static_cast<int>(s.size());
    min_len = min_len < 0 ? len : std::min(min_len, len);
    batch.sequences.push_back(std::move(s));
  }
  if (batch.sequences.empty()) fail(ErrorKind::InvalidInput, "sequence file holds no sequences");
  batch.length = min_len;
  return batch;
}

void write_spectrum_csv(std::ostream& os, int d, int k, int n, const Vector& sigma, bool header) {
  if (header) os << "d,k,n,sigma_index,sigma_value\n";
  for (Eigen::Index i = 0; i < sigma.size(); ++i)
    os << d << ',' << k << ',' << n << ',' << i + 1 << ',' << format_double(sigma(i)) << '\n';
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::InvalidInput, "cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::InvalidInput, "'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::InvalidInput, "cannot write '" + path + "'");
  out << text;
}

}  // namespace hmmreal::io
