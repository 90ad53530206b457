// hmmreal: command-line front end for realization, recovery and the sweeps.
//
// Exit codes: 0 on success, 2 for rank or condition failures, 3 for invalid
// input or capacity problems.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "hmmreal/error.hpp"
#include "hmmreal/experiments.hpp"

using namespace hmmreal;
using io::Json;

namespace {

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-")
    std::cout << text;
  else
    io::write_text_file(path, text);
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

std::vector<std::uint64_t> seed_list(int count, std::uint64_t base) {
  if (count < 1) fail(ErrorKind::InvalidInput, "--seeds must be >= 1");
  std::vector<std::uint64_t> out;
  for (int i = 0; i < count; ++i) out.push_back(base + static_cast<std::uint64_t>(i));
  return out;
}

SampleBatch load_sequences(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::InvalidInput, "cannot open '" + path + "'");
  return io::read_sequences(in);
}

// Exactly one of the three inputs, turned into a joint table of length N.
JointTable table_for(const std::string& model_path, const std::string& table_path,
                     const std::string& seq_path, int N, std::optional<Hmm>& model) {
  const int given = !model_path.empty() + !table_path.empty() + !seq_path.empty();
  if (given != 1) fail(ErrorKind::InvalidInput, "give exactly one of --model, --table, --sequences");
  if (!model_path.empty()) {
    model = io::model_from_json(io::read_json_file(model_path));
    return joint_table(hmm_to_quasi(*model), N);
  }
  if (!table_path.empty()) {
    const JointTable t = io::table_from_json(io::read_json_file(table_path));
    if (t.N < N)
      fail(ErrorKind::InvalidInput, "table holds strings of length " + std::to_string(t.N) + ", need " +
                                        std::to_string(N));
    return marginal(t, N);
  }
  return empirical_joint(load_sequences(seq_path), N);
}

struct Options {
  // shared
  int d = 2, k = 2, n = 0, r = 1;
  std::uint64_t seed = 0;
  int seeds_rank = 3, seeds_samples = 20, seeds_degenerate = 5;
  double tol_rank = 1e-8;
  std::string out, report, format;
  // gen
  std::string kind = "generic";
  int stages = 5, corrupted = 3;
  double eta = 0.1, rho = 0.5;
  // probs / realize / sample / estimate
  std::string model, table, sequences, mode = "quasi", backend = "auto";
  int N = 0, length = 0;
  std::int64_t count = 1000;
  std::optional<int> expected_k;
  // sweeps
  int d_max = 32, k_max = 32, fixed_n = 1;
  std::string n_rule = "logd", instance = "shift";
  bool control = false;
  std::vector<std::int64_t> Ts{1000, 10000, 100000};
  std::vector<int> n_list{1, 2, 3, 4, 5};
};

RunConfig config_for(const std::string& command, const Options& o) {
  RunConfig c;
  c.command = command;
  c.tolerances["tol_rank"] = o.tol_rank;
  if (!o.out.empty()) c.paths["out"] = o.out;
  if (!o.report.empty()) c.paths["report"] = o.report;
  if (!o.model.empty()) c.paths["model"] = o.model;
  if (!o.table.empty()) c.paths["table"] = o.table;
  if (!o.sequences.empty()) c.paths["sequences"] = o.sequences;
  c.validate();
  return c;
}

int cmd_gen(const Options& o) {
  Hmm m;
  if (o.kind == "generic")
    m = random_hmm(o.d, o.k, o.seed);
  else if (o.kind == "shift")
    m = shift_cycle_hmm(o.d, o.k, o.seed);
  else if (o.kind == "lowrank")
    m = low_rank_hmm(o.d, o.k, o.r, o.seed);
  else if (o.kind == "parity")
    m = noisy_parity_hmm({o.stages, o.corrupted, o.eta, o.rho});
  else
    fail(ErrorKind::InvalidInput, "unknown kind '" + o.kind + "' (generic, shift, lowrank, parity)");
  emit(o.out, dump(io::model_to_json(m)));
  std::cerr << "k=" << m.k() << " d=" << m.d() << " pi_min=" << m.pi.minCoeff() << " pi_max=" << m.pi.maxCoeff()
            << " pi_ratio=" << m.pi.maxCoeff() / m.pi.minCoeff() << "\n";
  return 0;
}

int cmd_probs(const Options& o) {
  if (o.N < 1) fail(ErrorKind::InvalidInput, "--N must be >= 1");
  const Hmm m = io::model_from_json(io::read_json_file(o.model));
  const JointTable t = joint_table(hmm_to_quasi(m), o.N);
  if (o.format == "csv") {
    std::ostringstream os;
    os << "index,string,probability\n";
    for (Eigen::Index i = 0; i < t.values.size(); ++i) {
      os << i << ',';
      const Letters s = string_of(i, t.d, t.N);
      for (std::size_t j = 0; j < s.size(); ++j) os << (j ? " " : "") << s[j] + 1;
      os << ',' << io::format_double(t.values(i)) << '\n';
    }
    emit(o.out, os.str());
  } else {
    emit(o.out, dump(io::table_to_json(t)));
  }
  return 0;
}

int cmd_realize(const Options& o) {
  if (o.n < 1) fail(ErrorKind::InvalidInput, "--n must be >= 1");
  std::optional<Hmm> truth;
  const JointTable table = table_for(o.model, o.table, o.sequences, 2 * o.n + 1, truth);
  Json rep;
  rep["config"] = config_for("realize", o).to_json();
  rep["config"]["dims"] = {{"n", o.n}, {"mode", o.mode}};
  if (o.mode == "quasi") {
    RankRule rule;
    rule.rel_tol = o.tol_rank;
    rule.expected_k = o.expected_k;
    if (table.provenance == Provenance::Empirical && !o.expected_k)
      rule.abs_floor = empirical_rank_floor(table.d, o.n, table.samples);
    Realization rz = realize_quasi(build_hankel(table, o.n), rule);
    auto& diag = rz.diagnostics;
    diag.verify_error = truth ? verify_realization(rz.model, hmm_to_quasi(*truth), 2 * o.n + 3).max_error
                              : verify_realization(rz.model, table, 2 * o.n + 1).max_error;
    rep["quasi"] = io::quasi_to_json(rz.model);
    rep["diagnostics"] = io::diagnostics_to_json(diag);
    rep["verify_error"] = diag.verify_error;
    std::cerr << "rank=" << diag.used_rank << " verify_error=" << diag.verify_error << "\n";
  } else if (o.mode == "hmm") {
    RecoveryOptions ro;
    ro.backend = backend_from_string(o.backend);
    ro.rank_tol = o.tol_rank;
    ro.simdiag.seed = o.seed;
    ro.foobi.seed = o.seed;
    ro.foobi.expected_k = o.expected_k;
    ro.simdiag.expected_k = o.expected_k;
    const RecoveryResult res = realize_hmm(table, o.n, ro);
    rep["recovery"] = io::recovery_to_json(res);
    rep["verify_error"] = res.verify_error;
    if (truth) {
      const auto w = hmm_equivalent_up_to_permutation(*truth, res.model, 1e-6);
      rep["equivalent_to_input"] = w.equivalent;
      rep["permutation_residual"] = w.residual;
    }
    std::cerr << "backend=" << to_string(res.backend) << " strategy=" << to_string(res.strategy)
              << " verify_error=" << res.verify_error << "\n";
  } else {
    fail(ErrorKind::InvalidInput, "--mode must be quasi or hmm");
  }
  emit(o.out, dump(rep));
  return 0;
}

int cmd_sample(const Options& o) {
  if (o.length < 1) fail(ErrorKind::InvalidInput, "--length must be >= 1");
  const Hmm m = io::model_from_json(io::read_json_file(o.model));
  const SampleBatch b = sample_sequences(m, o.count, o.length, o.seed);
  std::ostringstream os;
  io::write_sequences(os, b);
  emit(o.out, os.str());
  return 0;
}

int cmd_estimate(const Options& o) {
  const int n = o.n;
  if (n < 1) fail(ErrorKind::InvalidInput, "--n must be >= 1");
  const SampleBatch b = load_sequences(o.sequences);
  EstimateOptions eo;
  eo.expected_k = o.expected_k;
  const Estimate est = estimate_and_realize(b, n, eo);
  Json rep;
  RunConfig c = config_for("estimate", o);
  c.dims = {{"n", n}, {"d", b.d}, {"T", b.count()}};
  rep["config"] = c.to_json();
  rep["quasi"] = io::quasi_to_json(est.realization.model);
  rep["diagnostics"] = io::diagnostics_to_json(est.realization.diagnostics);
  rep["verify_error"] = est.realization.diagnostics.verify_error;
  rep["sample_size_surrogate"] = est.sample_size_surrogate;
  emit(o.out, dump(rep));
  return 0;
}

int cmd_sweep_rank(const Options& o) {
  SweepRankOptions so;
  so.instance = sweep_instance_from_string(o.instance);
  so.d_max = o.d_max;
  so.k_max = o.k_max;
  so.rule = window_rule_from_string(o.n_rule);
  so.fixed_n = o.fixed_n;
  if (so.rule == WindowRule::Fixed && o.n_rule.size() > 6) so.fixed_n = std::stoi(o.n_rule.substr(6));
  so.seeds = seed_list(o.seeds_rank, o.seed);
  so.rank_tol = o.tol_rank;
  so.identity_control = o.control;
  const auto records = sweep_rank(so);
  const auto summary = summarize(records);

  RunConfig c = config_for("sweep-rank", o);
  c.dims = {{"d_max", so.d_max}, {"k_max", so.k_max}, {"n_rule", o.n_rule}, {"instance", o.instance}};
  c.seeds = so.seeds;
  Json rep;
  rep["config"] = c.to_json();
  rep["summary"] = to_json(summary);
  double wall = 0.0;
  for (const auto& r : records) wall += r.wall_time;
  rep["wall_time"] = wall;
  if (o.format == "json") {
    emit(o.out, dump(rep));
  } else {
    emit(o.out, sweep_rank_csv(records));
    if (!o.report.empty()) emit(o.report, dump(rep));
  }
  std::cerr << summary.passing_cells << "/" << summary.cells << " cells at full rank\n";
  return 0;
}

int cmd_sweep_samples(const Options& o) {
  SweepSamplesOptions so;
  so.d = o.d;
  so.k = o.k;
  so.n = o.n;
  so.Ts = o.Ts;
  so.seeds = seed_list(o.seeds_samples, o.seed);
  const auto res = sweep_samples(so);
  RunConfig c = config_for("sweep-samples", o);
  c.dims = {{"d", so.d}, {"k", so.k}, {"n", res.records.empty() ? so.n : res.records.front().n}, {"T", so.Ts}};
  c.seeds = so.seeds;
  Json rep;
  rep["config"] = c.to_json();
  rep["summary"] = to_json(res);
  if (o.format == "json") {
    emit(o.out, dump(rep));
  } else {
    emit(o.out, sweep_samples_csv(res.records));
    if (!o.report.empty()) emit(o.report, dump(rep));
  }
  return 0;
}

int cmd_parity(const Options& o) {
  const ParityDemo demo = parity_demo({o.stages, o.corrupted, o.eta, o.rho}, o.n_list, o.tol_rank);
  RunConfig c = config_for("parity-demo", o);
  c.dims = {{"T", o.stages}, {"s", o.corrupted}, {"n", o.n_list}};
  c.tolerances["eta"] = o.eta;
  c.tolerances["rho"] = o.rho;
  Json rep;
  rep["config"] = c.to_json();
  rep["demo"] = to_json(demo);
  if (o.format == "csv") {
    std::ostringstream os;
    os << "eta,n,rank,sigma_last,verify_error\n";
    for (const auto* rows : {&demo.rows, &demo.control})
      for (const auto& r : *rows)
        os << io::format_double(rows == &demo.rows ? o.eta : 0.5) << ',' << r.n << ',' << r.rank << ','
           << io::format_double(r.sigma_last) << ',' << io::format_double(r.verify_error) << '\n';
    emit(o.out, os.str());
  } else {
    emit(o.out, dump(rep));
  }
  return 0;
}

int cmd_degenerate(const Options& o) {
  const auto seeds = seed_list(o.seeds_degenerate, o.seed);
  const auto v = check_degenerate(o.d, o.k, o.r, seeds);
  RunConfig c = config_for("check-degenerate", o);
  c.dims = {{"d", o.d}, {"k", o.k}, {"r", o.r}};
  c.seeds = seeds;
  Json rep;
  rep["config"] = c.to_json();
  rep["verdicts"] = to_json(v);
  emit(o.out, dump(rep));
  std::cerr << "summary: " << (v.summary ? "yes" : "no") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimal realization of hidden Markov processes from window statistics"};
  app.require_subcommand(1);
  Options o;

  auto common_out = [&](CLI::App* sub) {
    sub->add_option("--out", o.out, "Output path (stdout when omitted)");
  };
  auto seeds_opt = [&](CLI::App* sub, int& count) {
    sub->add_option("--seeds", count, "Number of seeds")->capture_default_str();
    sub->add_option("--seed", o.seed, "First seed")->capture_default_str();
  };

  auto* gen = app.add_subcommand("gen", "Write a model file");
  gen->add_option("--kind", o.kind, "generic | shift | lowrank | parity")->capture_default_str();
  gen->add_option("--d", o.d)->capture_default_str();
  gen->add_option("--k", o.k)->capture_default_str();
  gen->add_option("--r", o.r, "Rank of Q for lowrank")->capture_default_str();
  gen->add_option("--T", o.stages, "Parity stages")->capture_default_str();
  gen->add_option("--s", o.corrupted, "Corrupted parity stage")->capture_default_str();
  gen->add_option("--eta", o.eta, "Flip probability of the revealed bit")->capture_default_str();
  gen->add_option("--rho", o.rho, "Reset self-loop probability")->capture_default_str();
  gen->add_option("--seed", o.seed)->capture_default_str();
  common_out(gen);

  auto* probs = app.add_subcommand("probs", "Exact joint table of a model");
  probs->add_option("--model", o.model)->required();
  probs->add_option("--N", o.N, "String length")->required();
  probs->add_option("--format", o.format, "json | csv")->capture_default_str();
  common_out(probs);

  auto* realize = app.add_subcommand("realize", "Quasi-HMM or HMM realization");
  realize->add_option("--mode", o.mode, "quasi | hmm")->capture_default_str();
  realize->add_option("--model", o.model);
  realize->add_option("--table", o.table);
  realize->add_option("--sequences", o.sequences);
  realize->add_option("--n", o.n)->required();
  realize->add_option("--tol-rank", o.tol_rank)->capture_default_str();
  realize->add_option("--expected-k", o.expected_k);
  realize->add_option("--backend", o.backend, "auto | simdiag | foobi")->capture_default_str();
  realize->add_option("--seed", o.seed)->capture_default_str();
  common_out(realize);

  auto* sample = app.add_subcommand("sample", "Draw independent sequences from a model");
  sample->add_option("--model", o.model)->required();
  sample->add_option("--T", o.count, "Number of sequences")->capture_default_str();
  sample->add_option("--length", o.length)->required();
  sample->add_option("--seed", o.seed)->capture_default_str();
  common_out(sample);

  auto* estimate = app.add_subcommand("estimate", "Quasi realization from sampled sequences");
  estimate->add_option("--sequences", o.sequences)->required();
  estimate->add_option("--n", o.n)->required();
  estimate->add_option("--expected-k", o.expected_k);
  common_out(estimate);

  auto* sweep_rank = app.add_subcommand("sweep-rank", "Rank of H0 over a (d, k) grid");
  sweep_rank->add_option("--d-max", o.d_max)->capture_default_str();
  sweep_rank->add_option("--k-max", o.k_max)->capture_default_str();
  sweep_rank->add_option("--n-rule", o.n_rule, "logd | logd+1 | fixed:<n>")->capture_default_str();
  sweep_rank->add_option("--instance", o.instance, "shift | generic")->capture_default_str();
  sweep_rank->add_flag("--control", o.control, "Add identity-transition control rows");
  sweep_rank->add_option("--tol-rank", o.tol_rank)->capture_default_str();
  sweep_rank->add_option("--format", o.format, "csv | json");
  sweep_rank->add_option("--report", o.report, "JSON summary path");
  seeds_opt(sweep_rank, o.seeds_rank);
  common_out(sweep_rank);

  auto* sweep_samples = app.add_subcommand("sweep-samples", "Aligned parameter error against sample size");
  sweep_samples->add_option("--d", o.d)->capture_default_str();
  sweep_samples->add_option("--k", o.k)->capture_default_str();
  sweep_samples->add_option("--n", o.n, "0 selects 2 ceil(log_d k)")->capture_default_str();
  sweep_samples->add_option("--T", o.Ts, "Sample sizes")->capture_default_str();
  sweep_samples->add_option("--format", o.format, "csv | json");
  sweep_samples->add_option("--report", o.report, "JSON summary path");
  seeds_opt(sweep_samples, o.seeds_samples);
  common_out(sweep_samples);

  auto* parity = app.add_subcommand("parity-demo", "Rank growth on the noisy parity chain");
  parity->add_option("--T", o.stages)->capture_default_str();
  parity->add_option("--s", o.corrupted)->capture_default_str();
  parity->add_option("--eta", o.eta)->capture_default_str();
  parity->add_option("--rho", o.rho)->capture_default_str();
  parity->add_option("--n", o.n_list, "Windows to test")->capture_default_str();
  parity->add_option("--tol-rank", o.tol_rank)->capture_default_str();
  parity->add_option("--format", o.format, "json | csv");
  common_out(parity);

  auto* degenerate = app.add_subcommand("check-degenerate", "FOOBI check on rank-deficient transitions");
  degenerate->add_option("--d", o.d)->required();
  degenerate->add_option("--k", o.k)->required();
  degenerate->add_option("--r", o.r)->required();
  seeds_opt(degenerate, o.seeds_degenerate);
  common_out(degenerate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 3;
  }

  try {
    if (*gen) return cmd_gen(o);
    if (*probs) return cmd_probs(o);
    if (*realize) return cmd_realize(o);
    if (*sample) return cmd_sample(o);
    if (*estimate) return cmd_estimate(o);
    if (*sweep_rank) return cmd_sweep_rank(o);
    if (*sweep_samples) return cmd_sweep_samples(o);
    if (*parity) return cmd_parity(o);
    if (*degenerate) return cmd_degenerate(o);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
