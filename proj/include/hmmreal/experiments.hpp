#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hmmreal/io.hpp"

namespace hmmreal {

/// Everything a command ran with. Echoed into every JSON report.
struct RunConfig {
  std::string command;
  io::Json dims = io::Json::object();
  std::vector<std::uint64_t> seeds;
  io::Json tolerances = io::Json::object();
  io::Json paths = io::Json::object();

  /// Throws InvalidInput unless every numeric tolerance is > 0.
  void validate() const;
  io::Json to_json() const;
};

enum class WindowRule { LogD, LogDPlusOne, Fixed };

WindowRule window_rule_from_string(const std::string& name);
const char* to_string(WindowRule rule);

/// Smallest n >= 1 with d^n >= k, i.e. ceil(log_d k).
int ceil_log(int d, int k);
int window_for(int d, int k, WindowRule rule, int fixed_n);

/// Q = I with random emission columns: an i.i.d. mixture whose H0 rank is
/// capped by the number of distinct strings, used as a negative control.
Hmm identity_control_hmm(int d, int k, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Window-size rank sweep
// ---------------------------------------------------------------------------

struct SweepRecord {
  int d = 0;
  int k = 0;
  int n = 0;
  std::uint64_t seed = 0;
  int rank = -1;        // -1 when the cell was skipped
  double sigma_k = 0.0;
  bool pass = false;    // rank == k
  std::string status;   // base | escalation | control | capacity
  double wall_time = 0.0;
};

/// Instance family for the rank sweep. Shift draws a cyclic-shift Q with
/// random emissions, the construction used to certify full rank generically;
/// generic draws flat random Q and O, whose H0 spectra decay quickly with k.
enum class SweepInstance { Shift, Generic };

SweepInstance sweep_instance_from_string(const std::string& name);
const char* to_string(SweepInstance instance);

struct SweepRankOptions {
  SweepInstance instance = SweepInstance::Shift;
  int d_min = 2;
  int d_max = 32;
  int k_max = 32;
  WindowRule rule = WindowRule::LogD;
  int fixed_n = 1;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  double rank_tol = 1e-8;
  /// Extra windows tried after a failing base record.
  int escalation_steps = 2;
  bool identity_control = false;
};

struct SweepRankSummary {
  int cells = 0;
  int passing_cells = 0;        // every seed passes at the base window
  int recovered_cells = 0;      // failing cells where every seed passes at n+1
  int skipped_cells = 0;
  double pass_fraction = 0.0;
};

std::vector<SweepRecord> sweep_rank(const SweepRankOptions& opts);
SweepRankSummary summarize(const std::vector<SweepRecord>& records);

/// Columns d,k,n,seed,rank,sigma_k,pass,status. Wall time is left out so
/// reruns produce identical bytes; it is reported in the JSON summary.
std::string sweep_rank_csv(const std::vector<SweepRecord>& records);

/// H0 of a model at window n, assembled from its operator products.
Matrix exact_h0(const Hmm& model, int n);

// ---------------------------------------------------------------------------
// Sample-size sweep
// ---------------------------------------------------------------------------

struct SampleRecord {
  int d = 0;
  int k = 0;
  int n = 0;
  std::int64_t T = 0;
  std::uint64_t seed = 0;
  double err_u = 0.0;
  double err_v = 0.0;
  double err_ops_max = 0.0;
  double sigma_k_hat = 0.0;
  double sigma_k = 0.0;
  double h0_frobenius_error = 0.0;
  bool mirsky_ok = true;
};

struct SweepSamplesOptions {
  int d = 2;
  int k = 2;
  int n = 0;  // 0 selects 2 ceil(log_d k)
  std::vector<std::int64_t> Ts{1000, 10000, 100000};
  std::vector<std::uint64_t> seeds;
};

struct SweepSamplesResult {
  std::vector<SampleRecord> records;
  std::vector<std::int64_t> Ts;
  std::vector<double> median_error;  // median of max(err_u, err_v, err_ops_max) per T
  int mirsky_violations = 0;
  bool monotone = false;
};

SweepSamplesResult sweep_samples(const SweepSamplesOptions& opts);

/// Columns d,k,n,T,seed,err_u,err_v,err_ops_max,sigma_k_hat.
std::string sweep_samples_csv(const std::vector<SampleRecord>& records);

// ---------------------------------------------------------------------------
// Noisy parity demonstration
// ---------------------------------------------------------------------------

struct ParityRow {
  int n = 0;
  int rank = 0;
  double sigma_last = 0.0;   // smallest retained singular value
  double verify_error = 0.0; // against the true model
  int verify_len = 0;
};

struct ParityDemo {
  NoisyParityParams params;
  int order = 0;  // states of the constructed chain
  std::vector<ParityRow> rows;
  std::vector<ParityRow> control;  // same windows with flip = 0.5
};

ParityDemo parity_demo(const NoisyParityParams& params, const std::vector<int>& n_list,
                       double rank_tol = 1e-8);

// ---------------------------------------------------------------------------
// Degenerate-class check
// ---------------------------------------------------------------------------

struct DegenerateVerdicts {
  int d = 0;
  int k = 0;
  int r = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<ConditionCheck> checks;
  bool summary = false;  // any seed answered yes
};

DegenerateVerdicts check_degenerate(int d, int k, int r, const std::vector<std::uint64_t>& seeds);

io::Json to_json(const SweepRankSummary& s);
io::Json to_json(const SweepSamplesResult& r);
io::Json to_json(const ParityDemo& demo);
io::Json to_json(const DegenerateVerdicts& v);

}  // namespace hmmreal
