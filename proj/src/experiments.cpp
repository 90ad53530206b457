#include "hmmreal/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <sstream>
#include <tuple>

#include "hmmreal/error.hpp"
#include "hmmreal/rng.hpp"

namespace hmmreal {

void RunConfig::validate() const {
  for (const auto& [name, value] : tolerances.items())
    if (value.is_number() && !(value.get<double>() > 0.0))
      fail(ErrorKind::InvalidInput, "tolerance '" + name + "' must be > 0");
}

io::Json RunConfig::to_json() const {
  io::Json j;
  j["command"] = command;
  j["dims"] = dims;
  j["seeds"] = seeds;
  j["tolerances"] = tolerances;
  j["paths"] = paths;
  return j;
}

WindowRule window_rule_from_string(const std::string& name) {
  if (name == "logd") return WindowRule::LogD;
  if (name == "logd+1") return WindowRule::LogDPlusOne;
  if (name.rfind("fixed", 0) == 0) return WindowRule::Fixed;
  fail(ErrorKind::InvalidInput, "unknown window rule '" + name + "' (logd, logd+1, fixed:<n>)");
}

const char* to_string(WindowRule rule) {
  switch (rule) {
    case WindowRule::LogD: return "logd";
    case WindowRule::LogDPlusOne: return "logd+1";
    case WindowRule::Fixed: return "fixed";
  }
  return "unknown";
}

SweepInstance sweep_instance_from_string(const std::string& name) {
  if (name == "shift") return SweepInstance::Shift;
  if (name == "generic") return SweepInstance::Generic;
  fail(ErrorKind::InvalidInput, "unknown instance family '" + name + "' (shift, generic)");
}

const char* to_string(SweepInstance instance) {
  return instance == SweepInstance::Shift ? "shift" : "generic";
}

int ceil_log(int d, int k) {
  if (d < 2 || k < 1) fail(ErrorKind::InvalidInput, "ceil_log needs d >= 2 and k >= 1");
  int n = 1;
  std::int64_t p = d;
  while (p < k) {
    p *= d;
    ++n;
  }
  return n;
}

int window_for(int d, int k, WindowRule rule, int fixed_n) {
  switch (rule) {
    case WindowRule::LogD: return ceil_log(d, k);
    case WindowRule::LogDPlusOne: return ceil_log(d, k) + 1;
    case WindowRule::Fixed:
      if (fixed_n < 1) fail(ErrorKind::InvalidInput, "fixed window must be >= 1");
      return fixed_n;
  }
  return 1;
}

Hmm identity_control_hmm(int d, int k, std::uint64_t seed) {
  Rng rng(seed, 0x1dull);
  Hmm m;
  m.Q = Matrix::Identity(k, k);
  m.O.resize(d, k);
  for (int i = 0; i < k; ++i) m.O.col(i) = rng.simplex(d);
  m.pi = Vector::Constant(k, 1.0 / k);
  return m;
}

Matrix exact_h0(const Hmm& model, int n) {
  const QuasiHmm q = hmm_to_quasi(model);
  checked_power(model.d(), 2 * n);
  return future_rows(q, n) * past_rows(q, n).transpose();
}

namespace {

SweepRecord rank_record(const Hmm& model, int d, int k, int n, std::uint64_t seed, double rank_tol,
                        const char* status) {
  SweepRecord r;
  r.d = d;
  r.k = k;
  r.n = n;
  r.seed = seed;
  r.status = status;
  const auto start = std::chrono::steady_clock::now();
  try {
    const RankInfo info = numeric_rank(exact_h0(model, n), rank_tol);
    r.rank = info.rank;
    r.sigma_k = k <= info.singular_values.size() ? info.singular_values(k - 1) : 0.0;
    r.pass = r.rank == k;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Capacity) throw;
    r.status = "capacity";
  }
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace

std::vector<SweepRecord> sweep_rank(const SweepRankOptions& opts) {
  if (opts.d_min < 2 || opts.d_max < opts.d_min || opts.k_max < opts.d_min)
    fail(ErrorKind::InvalidInput, "sweep needs 2 <= d_min <= d_max and k_max >= d_min");
  if (opts.seeds.empty()) fail(ErrorKind::InvalidInput, "sweep needs at least one seed");
  std::vector<SweepRecord> out;
  for (int d = opts.d_min; d <= opts.d_max; ++d) {
    for (int k = d; k <= opts.k_max; ++k) {
      const int n = window_for(d, k, opts.rule, opts.fixed_n);
      for (const auto seed : opts.seeds) {
        const Hmm model = opts.instance == SweepInstance::Shift ? shift_cycle_hmm(d, k, seed)
                                                               : random_hmm(d, k, seed);
        SweepRecord base = rank_record(model, d, k, n, seed, opts.rank_tol, "base");
        const bool failed = !base.pass && base.status == "base";
        out.push_back(std::move(base));
        for (int step = 1; failed && step <= opts.escalation_steps; ++step) {
          SweepRecord esc = rank_record(model, d, k, n + step, seed, opts.rank_tol, "escalation");
          const bool stop = esc.pass || esc.status == "capacity";
          out.push_back(std::move(esc));
          if (stop) break;
        }
        if (opts.identity_control)
          out.push_back(rank_record(identity_control_hmm(d, k, seed), d, k, n, seed, opts.rank_tol, "control"));
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const SweepRecord& a, const SweepRecord& b) {
    return std::tie(a.d, a.k, a.n, a.seed, a.status) < std::tie(b.d, b.k, b.n, b.seed, b.status);
  });
  return out;
}

SweepRankSummary summarize(const std::vector<SweepRecord>& records) {
  struct Cell {
    bool base_pass = true;
    bool skipped = false;
    bool escalated_pass = true;
    int base_n = 0;
  };
  std::map<std::pair<int, int>, Cell> cells;
  std::map<std::tuple<int, int, std::uint64_t>, int> base_n_of;
  for (const auto& r : records) {
    if (r.status != "base" && r.status != "capacity") continue;
    auto& c = cells[{r.d, r.k}];
    c.base_n = r.n;
    if (r.status == "capacity") c.skipped = true;
    if (!r.pass) c.base_pass = false;
    base_n_of[{r.d, r.k, r.seed}] = r.n;
  }
  // a failing cell is recovered when each failing seed passes at n + 1
  std::map<std::tuple<int, int, std::uint64_t>, bool> next_pass;
  for (const auto& r : records) {
    if (r.status != "escalation") continue;
    const auto key = std::make_tuple(r.d, r.k, r.seed);
    if (r.n == base_n_of[key] + 1) next_pass[key] = r.pass;
  }
  for (const auto& r : records) {
    if (r.status != "base" || r.pass) continue;
    const auto key = std::make_tuple(r.d, r.k, r.seed);
    auto it = next_pass.find(key);
    if (it == next_pass.end() || !it->second) cells[{r.d, r.k}].escalated_pass = false;
  }

  SweepRankSummary s;
  for (const auto& [dk, c] : cells) {
    ++s.cells;
    if (c.skipped) {
      ++s.skipped_cells;
      continue;
    }
    if (c.base_pass)
      ++s.passing_cells;
    else if (c.escalated_pass)
      ++s.recovered_cells;
  }
  const int tested = s.cells - s.skipped_cells;
  s.pass_fraction = tested > 0 ? static_cast<double>(s.passing_cells) / tested : 0.0;
  return s;
}

std::string sweep_rank_csv(const std::vector<SweepRecord>& records) {
  std::ostringstream os;
  os << "d,k,n,seed,rank,sigma_k,pass,status\n";
  for (const auto& r : records)
    os << r.d << ',' << r.k << ',' << r.n << ',' << r.seed << ',' << r.rank << ','
       << io::format_double(r.sigma_k) << ',' << (r.pass ? "true" : "false") << ',' << r.status << '\n';
  return os.str();
}

namespace {

double median(std::vector<double> x) {
  if (x.empty()) return std::nan("");
  std::sort(x.begin(), x.end());
  const std::size_t m = x.size() / 2;
  return x.size() % 2 ? x[m] : 0.5 * (x[m - 1] + x[m]);
}

}  // namespace

SweepSamplesResult sweep_samples(const SweepSamplesOptions& opts) {
  if (opts.Ts.empty() || opts.seeds.empty())
    fail(ErrorKind::InvalidInput, "sweep-samples needs sample sizes and seeds");
  const int n = opts.n > 0 ? opts.n : 2 * ceil_log(opts.d, opts.k);

  SweepSamplesResult res;
  res.Ts = opts.Ts;
  std::map<std::int64_t, std::vector<double>> errors;
  for (const auto seed : opts.seeds) {
    const Hmm model = random_hmm(opts.d, opts.k, seed);
    const JointTable exact = joint_table(hmm_to_quasi(model), 2 * n + 1);
    const HankelPair H = build_hankel(exact, n);
    RankRule rule;
    rule.expected_k = opts.k;
    const Realization reference = realize_quasi(H, rule);
    EstimateOptions eo;
    eo.expected_k = opts.k;

    for (const auto T : opts.Ts) {
      const std::uint64_t sample_seed = seed * 0x100000001b3ull + static_cast<std::uint64_t>(T);
      const SampleBatch batch = sample_sequences(model, T, 2 * n + 1, sample_seed);
      const Estimate est = estimate_and_realize(batch, n, eo);
      const ParameterError pe = aligned_parameter_error(est.realization.model, reference.model, n);

      SampleRecord r;
      r.d = opts.d;
      r.k = opts.k;
      r.n = n;
      r.T = T;
      r.seed = seed;
      r.err_u = pe.err_u;
      r.err_v = pe.err_v;
      r.err_ops_max = pe.err_ops_max;
      r.sigma_k_hat = est.realization.diagnostics.sigma_k;
      r.sigma_k = reference.diagnostics.sigma_k;
      r.h0_frobenius_error = (est.hankel.H0 - H.H0).norm();
      r.mirsky_ok = std::abs(r.sigma_k_hat - r.sigma_k) <= r.h0_frobenius_error + 1e-12;
      if (!r.mirsky_ok) ++res.mirsky_violations;
      errors[T].push_back(pe.max());
      res.records.push_back(r);
    }
  }
  std::sort(res.records.begin(), res.records.end(), [](const SampleRecord& a, const SampleRecord& b) {
    return std::tie(a.T, a.seed) < std::tie(b.T, b.seed);
  });
  for (const auto T : res.Ts) res.median_error.push_back(median(errors[T]));
  res.monotone = true;
  for (std::size_t i = 1; i < res.median_error.size(); ++i)
    if (!(res.median_error[i] < res.median_error[i - 1])) res.monotone = false;
  return res;
}

std::string sweep_samples_csv(const std::vector<SampleRecord>& records) {
  std::ostringstream os;
  os << "d,k,n,T,seed,err_u,err_v,err_ops_max,sigma_k_hat\n";
  for (const auto& r : records)
    os << r.d << ',' << r.k << ',' << r.n << ',' << r.T << ',' << r.seed << ',' << io::format_double(r.err_u)
       << ',' << io::format_double(r.err_v) << ',' << io::format_double(r.err_ops_max) << ','
       << io::format_double(r.sigma_k_hat) << '\n';
  return os.str();
}

namespace {

std::vector<ParityRow> parity_rows(const Hmm& model, const std::vector<int>& n_list, double rank_tol) {
  const QuasiHmm truth = hmm_to_quasi(model);
  const int verify_len = 2 * *std::max_element(n_list.begin(), n_list.end()) + 3;
  std::vector<ParityRow> rows;
  for (const int n : n_list) {
    ParityRow row;
    row.n = n;
    row.verify_len = verify_len;
    const HankelPair H = build_hankel(joint_table(truth, 2 * n + 1), n);
    RankRule rule;
    rule.rel_tol = rank_tol;
    const Realization rz = realize_quasi(H, rule);
    row.rank = rz.diagnostics.used_rank;
    row.sigma_last = rz.diagnostics.sigma_k;
    row.verify_error = verify_realization(rz.model, truth, verify_len).max_error;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

ParityDemo parity_demo(const NoisyParityParams& params, const std::vector<int>& n_list, double rank_tol) {
  if (n_list.empty()) fail(ErrorKind::InvalidInput, "parity demo needs at least one window");
  for (const int n : n_list)
    if (n < 1) fail(ErrorKind::InvalidInput, "windows must be >= 1");
  ParityDemo demo;
  demo.params = params;
  const Hmm model = noisy_parity_hmm(params);
  demo.order = model.k();
  demo.rows = parity_rows(model, n_list, rank_tol);
  NoisyParityParams control = params;
  control.flip = 0.5;
  demo.control = parity_rows(noisy_parity_hmm(control), n_list, rank_tol);
  return demo;
}

DegenerateVerdicts check_degenerate(int d, int k, int r, const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) fail(ErrorKind::InvalidInput, "check-degenerate needs at least one seed");
  DegenerateVerdicts v;
  v.d = d;
  v.k = k;
  v.r = r;
  v.seeds = seeds;
  for (const auto seed : seeds) {
    v.checks.push_back(check_condition_degenerate(d, k, r, seed));
    v.summary = v.summary || v.checks.back().yes;
  }
  return v;
}

io::Json to_json(const SweepRankSummary& s) {
  return {{"cells", s.cells},
          {"passing_cells", s.passing_cells},
          {"recovered_after_escalation", s.recovered_cells},
          {"skipped_cells", s.skipped_cells},
          {"pass_fraction", s.pass_fraction}};
}

io::Json to_json(const SweepSamplesResult& r) {
  io::Json medians = io::Json::array();
  for (std::size_t i = 0; i < r.Ts.size(); ++i)
    medians.push_back({{"T", r.Ts[i]}, {"median_error", r.median_error[i]}});
  return {{"medians", medians}, {"monotone", r.monotone}, {"mirsky_violations", r.mirsky_violations}};
}

namespace {

io::Json rows_json(const std::vector<ParityRow>& rows) {
  io::Json out = io::Json::array();
  for (const auto& r : rows)
    out.push_back({{"n", r.n},
                   {"rank", r.rank},
                   {"sigma_last", r.sigma_last},
                   {"verify_error", r.verify_error},
                   {"verify_len", r.verify_len}});
  return out;
}

}  // namespace

io::Json to_json(const ParityDemo& demo) {
  return {{"T", demo.params.stages},
          {"s", demo.params.corrupted},
          {"eta", demo.params.flip},
          {"rho", demo.params.reset_stay},
          {"order", demo.order},
          {"windows", rows_json(demo.rows)},
          {"control_eta_half", rows_json(demo.control)}};
}

io::Json to_json(const DegenerateVerdicts& v) {
  io::Json per_seed = io::Json::array();
  for (std::size_t i = 0; i < v.checks.size(); ++i) {
    const auto& c = v.checks[i];
    per_seed.push_back({{"seed", v.seeds[i]},
                        {"verdict", c.yes ? "yes" : "no"},
                        {"factor_error", c.factor_error},
                        {"residual", c.residual},
                        {"detected_k", c.detected_k},
                        {"diagnostics", c.diagnostics}});
  }
  return {{"d", v.d}, {"k", v.k}, {"r", v.r}, {"summary", v.summary ? "yes" : "no"}, {"seeds", per_seed}};
}

}  // namespace hmmreal
