#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

#include "hmmreal/io.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path& workdir() {
  static const fs::path dir = [] {
    fs::path p = fs::temp_directory_path() / ("hmmreal_cli_" + std::to_string(::getpid()));
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

std::string path(const std::string& name) { return (workdir() / name).string(); }

int run(const std::string& args) {
  const std::string cmd = std::string(HMMREAL_CLI_PATH) + " " + args + " 2>" + path("stderr.txt");
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

hmmreal::io::Json json_at(const std::string& p) { return hmmreal::io::read_json_file(p); }

}  // namespace

TEST_CASE("gen writes models that read back identically") {
  REQUIRE(run("gen --kind generic --d 4 --k 8 --seed 2 --out " + path("g.json")) == 0);
  const auto j = json_at(path("g.json"));
  CHECK(hmmreal::io::model_to_json(hmmreal::io::model_from_json(j)).dump() == j.dump());
  REQUIRE(run("gen --kind parity --T 5 --s 3 --eta 0.1 --rho 0.5 --out " + path("p.json")) == 0);
  CHECK(json_at(path("p.json"))["k"] == 17);
  CHECK(slurp(path("stderr.txt")).find("pi") != std::string::npos);
  REQUIRE(run("gen --kind lowrank --d 4 --k 3 --r 3 --seed 1 --out " + path("l.json")) == 0);
  REQUIRE(run("gen --kind generic --d 4 --k 3 --seed 1 --out " + path("g3.json")) == 0);
  CHECK(slurp(path("l.json")) == slurp(path("g3.json")));
}

TEST_CASE("invalid input exits with 3") {
  CHECK(run("gen --kind nonsense --out " + path("x.json")) == 3);
  CHECK(run("gen --kind lowrank --d 2 --k 3 --r 2 --out " + path("x.json")) == 3);
  CHECK(run("realize --mode quasi --n 1") == 3);
  CHECK(run("probs --model " + path("missing.json") + " --N 2") == 3);
  CHECK(run("--no-such-flag") == 3);
}

TEST_CASE("quasi realization from a model and from a table") {
  REQUIRE(run("gen --kind generic --d 2 --k 4 --seed 0 --out " + path("m24.json")) == 0);
  REQUIRE(run("realize --mode quasi --model " + path("m24.json") + " --n 2 > " + path("r.json")) == 0);
  const auto r = json_at(path("r.json"));
  CHECK(r["diagnostics"]["verify_error"].get<double>() <= 1e-9);
  CHECK(r["quasi"]["k"] == 4);

  REQUIRE(run("probs --model " + path("m24.json") + " --N 5 > " + path("t.json")) == 0);
  REQUIRE(run("realize --mode quasi --table " + path("t.json") + " --n 2 > " + path("rt.json")) == 0);
  CHECK(json_at(path("rt.json"))["diagnostics"]["verify_error"].get<double>() <= 1e-9);
}

TEST_CASE("expected order above the rank exits with 2") {
  REQUIRE(run("gen --kind generic --d 2 --k 4 --seed 0 --out " + path("m.json")) == 0);
  CHECK(run("realize --mode quasi --model " + path("m.json") + " --n 1 --expected-k 4") == 2);
  CHECK(slurp(path("stderr.txt")).find("rank") != std::string::npos);
}

TEST_CASE("hmm recovery through the CLI") {
  REQUIRE(run("gen --kind generic --d 4 --k 4 --seed 3 --out " + path("h.json")) == 0);
  REQUIRE(run("realize --mode hmm --model " + path("h.json") + " --n 1 > " + path("hr.json")) == 0);
  const auto r = json_at(path("hr.json"));
  CHECK(r["equivalent_to_input"] == true);
  CHECK(r["verify_error"].get<double>() <= 1e-7);

  REQUIRE(run("gen --kind lowrank --d 5 --k 4 --r 3 --seed 0 --out " + path("lr.json")) == 0);
  REQUIRE(run("realize --mode hmm --model " + path("lr.json") + " --n 1 --expected-k 4 > " + path("lrr.json")) == 0);
  CHECK(json_at(path("lrr.json"))["recovery"]["backend"] == "foobi");
}

TEST_CASE("sample and estimate") {
  REQUIRE(run("gen --kind generic --d 2 --k 2 --seed 1 --out " + path("s.json")) == 0);
  REQUIRE(run("sample --model " + path("s.json") + " --T 20000 --length 5 --seed 4 --out " + path("seq.txt")) == 0);
  const std::string seq = slurp(path("seq.txt"));
  CHECK(seq.rfind("#d=2", 0) == 0);
  REQUIRE(run("estimate --sequences " + path("seq.txt") + " --n 2 --expected-k 2 > " + path("e.json")) == 0);
  CHECK(json_at(path("e.json"))["quasi"]["k"] == 2);
  REQUIRE(run("realize --mode quasi --sequences " + path("seq.txt") + " --n 2 --expected-k 2 > " + path("e2.json")) ==
          0);
}

TEST_CASE("sweeps write fixed CSV schemas and repeat byte for byte") {
  REQUIRE(run("sweep-rank --d-max 3 --k-max 5 --out " + path("a.csv")) == 0);
  REQUIRE(run("sweep-rank --d-max 3 --k-max 5 --out " + path("b.csv") + " --report " + path("rep.json")) == 0);
  CHECK(slurp(path("a.csv")) == slurp(path("b.csv")));
  CHECK(slurp(path("a.csv")).rfind("d,k,n,seed,rank,sigma_k,pass,status\n", 0) == 0);
  const auto rep = json_at(path("rep.json"));
  CHECK(rep.contains("config"));
  CHECK(rep["summary"]["pass_fraction"] == 1.0);

  REQUIRE(run("sweep-samples --T 300 3000 --seeds 3 --out " + path("s1.csv")) == 0);
  REQUIRE(run("sweep-samples --T 300 3000 --seeds 3 --out " + path("s2.csv")) == 0);
  CHECK(slurp(path("s1.csv")) == slurp(path("s2.csv")));
  CHECK(slurp(path("s1.csv")).rfind("d,k,n,T,seed,err_u,err_v,err_ops_max,sigma_k_hat\n", 0) == 0);
}

TEST_CASE("parity demo and degenerate check") {
  REQUIRE(run("parity-demo --n 1 5 > " + path("pd.json")) == 0);
  const auto pd = json_at(path("pd.json"));
  CHECK(pd["demo"]["windows"][0]["rank"].get<int>() < pd["demo"]["windows"][1]["rank"].get<int>());
  REQUIRE(run("check-degenerate --d 4 --k 3 --r 1 --seeds 2 > " + path("cd.json")) == 0);
  CHECK(json_at(path("cd.json"))["verdicts"]["summary"] == "no");
}
