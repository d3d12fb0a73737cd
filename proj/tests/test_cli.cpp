#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
};

fs::path scratch_root() {
  static fs::path root = [] {
    fs::path p = fs::temp_directory_path() / "dsyk_cli_tests";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return root;
}

fs::path fresh_dir(const std::string& name) {
  fs::path d = scratch_root() / name;
  fs::create_directories(d);
  return d;
}

RunResult run_cli(const std::string& args) {
  static int counter = 0;
  fs::path log = scratch_root() / ("log" + std::to_string(counter++) + ".txt");
  std::string cmd = std::string(DSYK_CLI_PATH) + " " + args + " > " +
                    log.string() + " 2>&1";
  int rc = std::system(cmd.c_str());
  RunResult r;
  r.code = WEXITSTATUS(rc);
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.out = ss.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line))
    if (!line.empty()) out.push_back(line);
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

TEST_CASE("help lists every subcommand") {
  RunResult r = run_cli("--help");
  CHECK(r.code == 0);
  for (const char* sub : {"page-curve", "phase-diagram", "largeq", "traj",
                          "oracle", "compare", "green-dump"})
    CHECK(r.out.find(sub) != std::string::npos);
}

TEST_CASE("config errors exit with code 2") {
  CHECK(run_cli("no-such-command").code == 2);
  CHECK(run_cli("traj --bogus-flag 3").code == 2);
  // no time points given
  CHECK(run_cli("page-curve --N 20 --mu 0.1").code == 2);
  // oracle dimension contract
  fs::path d = fresh_dir("orc_too_big");
  CHECK(run_cli("oracle --N 10 --mu 0.1 --times 0.5 --out " + d.string()).code == 2);
  // config file that does not exist
  CHECK(run_cli("traj --config /nonexistent.json --times 1").code == 2);
}

TEST_CASE("traj: schema, t = 0 row, reruns byte-identical") {
  fs::path d1 = fresh_dir("traj_a");
  fs::path d2 = fresh_dir("traj_b");
  const std::string args =
      "traj --N 6 --mu 0.1 --times 0,0.5,1.0 --n-traj 200 --seed 5 --prefix run";
  CHECK(run_cli(args + " --out " + d1.string()).code == 0);
  CHECK(run_cli(args + " --out " + d2.string()).code == 0);

  std::string csv = slurp(d1 / "run.csv");
  CHECK(csv == slurp(d2 / "run.csv"));
  CHECK(slurp(d1 / "run.meta.json") == slurp(d2 / "run.meta.json"));

  auto ls = lines_of(csv);
  REQUIRE(ls.size() == 4);
  CHECK(ls[0] == "t,gamma,gamma_err,S,S_err,N,q,mu,beta,n_traj,n_disorder,seed");
  auto row0 = split_csv(ls[1]);
  REQUIRE(row0.size() == 12);
  CHECK(std::stod(row0[0]) == 0.0);
  CHECK(std::stod(row0[1]) == 1.0);  // purity exactly one at t = 0
  CHECK(std::stod(row0[3]) == 0.0);
  CHECK(std::stod(row0[5]) == 6.0);

  json meta = json::parse(slurp(d1 / "run.meta.json"));
  CHECK(meta["schema_version"] == 1);
  CHECK(meta["subcommand"] == "traj");
  CHECK(!meta["code_version"].get<std::string>().empty());
  CHECK(meta["config_hash"].get<std::string>().size() == 16);
  CHECK(meta["config"]["model"]["mu"] == 0.1);
  CHECK(meta["seeds"]["master_seed"] == 5);
}

TEST_CASE("oracle: same schema, zero error column, per-seed list") {
  fs::path d = fresh_dir("orc");
  CHECK(run_cli("oracle --N 4 --mu 0.15 --times 0.5,1.0 --seeds 2 --out " +
                d.string() + " --prefix orc").code == 0);
  auto ls = lines_of(slurp(d / "orc.csv"));
  REQUIRE(ls.size() == 3);
  CHECK(ls[0] == "t,gamma,gamma_err,S,S_err,N,q,mu,beta,n_traj,n_disorder,seed");
  for (std::size_t i = 1; i < ls.size(); ++i) {
    auto row = split_csv(ls[i]);
    REQUIRE(row.size() == 12);
    CHECK(std::stod(row[2]) == 0.0);
    CHECK(std::stod(row[4]) == 0.0);
    CHECK(std::stod(row[10]) == 2.0);
    double g = std::stod(row[1]);
    CHECK(g > 0.0);
    CHECK(g <= 1.0);
  }
  json meta = json::parse(slurp(d / "orc.meta.json"));
  CHECK(meta["seeds"]["disorder_seeds"].size() == 2);
}

TEST_CASE("page-curve: schema and branch bookkeeping") {
  fs::path d = fresh_dir("page");
  CHECK(run_cli("page-curve --N 20 --mu 0.15 --times 0.4,0.8,1.2,1.6 "
                "--nsteps 40 --out " + d.string()).code == 0);
  auto ls = lines_of(slurp(d / "page-curve.csv"));
  REQUIRE(ls.size() == 5);
  CHECK(ls[0] == "t,S_diag,S_worm,S_min,dominant,residual_diag,residual_worm");
  for (std::size_t i = 1; i < ls.size(); ++i) {
    auto row = split_csv(ls[i]);
    REQUIRE(row.size() == 7);
    const double sd = std::stod(row[1]), sw = std::stod(row[2]),
                 sm = std::stod(row[3]);
    CHECK(sm <= std::min(sd, sw) + 1e-12);
    const int dom = std::stoi(row[4]);
    CHECK((dom == 0 || dom == 1));
  }
  json meta = json::parse(slurp(d / "page-curve.meta.json"));
  CHECK(meta.contains("page_time"));
  CHECK(meta.contains("slope_gap"));
}

TEST_CASE("config file values with flag overrides") {
  fs::path d = fresh_dir("cfg");
  fs::path cfg = d / "c.json";
  {
    std::ofstream out(cfg);
    out << R"({"model":{"N":6,"mu":0.1},"times":[0.5],"mc":{"n_traj":100}})";
  }
  CHECK(run_cli("traj --config " + cfg.string() + " --mu 0.2 --out " +
                d.string() + " --prefix ov").code == 0);
  json meta = json::parse(slurp(d / "ov.meta.json"));
  CHECK(meta["config"]["model"]["mu"] == 0.2);  // flag wins
  CHECK(meta["config"]["model"]["N"] == 6);     // file value kept
  CHECK(meta["config"]["mc"]["n_traj"] == 100);

  CHECK(run_cli("traj --config " + cfg.string() + " --out " + d.string() +
                " --prefix noov").code == 0);
  json meta2 = json::parse(slurp(d / "noov.meta.json"));
  CHECK(meta2["config"]["model"]["mu"] == 0.1);
}

TEST_CASE("compare: aligned per-fermion table across routes") {
  fs::path d = fresh_dir("cmp");
  CHECK(run_cli("compare --N 6 --mu 0.1 --times 0.5,1.0 --n-traj 300 "
                "--nsteps 32 --out " + d.string()).code == 0);
  auto ls = lines_of(slurp(d / "compare.csv"));
  REQUIRE(ls.size() == 3);
  CHECK(ls[0] ==
        "t,S_traj,S_traj_err,S_oracle,S_saddle,S_largeq,dev_traj_oracle,"
        "dev_traj_saddle");
  for (std::size_t i = 1; i < ls.size(); ++i) {
    auto row = split_csv(ls[i]);
    REQUIRE(row.size() == 8);
    CHECK(std::isfinite(std::stod(row[3])));  // N = 6 <= 8: oracle column live
    CHECK(std::isfinite(std::stod(row[6])));
    CHECK(std::stod(row[6]) >= 0.0);
  }
}

TEST_CASE("compare: refuses mismatched parameter sets, listing keys") {
  fs::path d = fresh_dir("cmp_meta");
  auto write_meta = [&](const std::string& name, double mu) {
    json j;
    j["config"]["model"] = {{"N", 6}, {"q", 4}, {"J", 1.0}, {"mu", mu}, {"beta", 0.0}};
    std::ofstream out(d / name);
    out << j.dump(2);
  };
  write_meta("a.meta.json", 0.1);
  write_meta("b.meta.json", 0.2);
  write_meta("c.meta.json", 0.1);
  RunResult bad = run_cli("compare --check " + (d / "a.meta.json").string() +
                          " --against " + (d / "b.meta.json").string());
  CHECK(bad.code == 2);
  CHECK(bad.out.find("mu") != std::string::npos);
  RunResult good = run_cli("compare --check " + (d / "a.meta.json").string() +
                           " --against " + (d / "c.meta.json").string());
  CHECK(good.code == 0);
}

TEST_CASE("green-dump: full bilocal grid with run metadata") {
  fs::path d = fresh_dir("gd");
  CHECK(run_cli("green-dump --N 20 --mu 0.1 --t 1.0 --nsteps 24 "
                "--glue wormhole --out " + d.string()).code == 0);
  auto ls = lines_of(slurp(d / "green-dump.csv"));
  const std::size_t nc = 4 * 24;  // four branches
  REQUIRE(ls.size() == nc * nc + 1);
  CHECK(ls[0] == "i,j,re,im");
  json meta = json::parse(slurp(d / "green-dump.meta.json"));
  CHECK(meta["converged"] == true);
  CHECK(meta["glue"] == "wormhole");
  CHECK(std::isfinite(meta["action_re"].get<double>()));
}

TEST_CASE("numerical failure exits 3 and leaves an error report") {
  fs::path d = fresh_dir("fail");
  RunResult r = run_cli("green-dump --N 20 --mu 0.1 --t 1.0 --nsteps 24 "
                        "--max-iter 1 --out " + d.string());
  CHECK(r.code == 3);
  json err = json::parse(slurp(d / "green-dump.error.json"));
  CHECK(err.contains("error"));
}

TEST_CASE("phase-diagram: slope-gap scan schema") {
  fs::path d = fresh_dir("phase");
  CHECK(run_cli("phase-diagram --N 20 --mu-list 0.06,0.18 --nsteps 28 --out " +
                d.string()).code == 0);
  auto ls = lines_of(slurp(d / "phase-diagram.csv"));
  REQUIRE(ls.size() == 3);
  CHECK(ls[0] == "mu,slope_gap,page_time");
  json meta = json::parse(slurp(d / "phase-diagram.meta.json"));
  CHECK(meta.contains("mu_c"));
}

TEST_CASE("largeq: entropy density table") {
  fs::path d = fresh_dir("lq");
  CHECK(run_cli("largeq --q 16 --muhat 0.5 --times 1,2 --out " +
                d.string()).code == 0);
  auto ls = lines_of(slurp(d / "largeq.csv"));
  REQUIRE(ls.size() == 3);
  CHECK(ls[0] == "t,S_per_fermion");
  auto row = split_csv(ls[2]);
  CHECK(std::stod(row[1]) == doctest::Approx(2.0 * 0.5 * 2.0 / 16.0));
}

TEST_CASE("default output directory comes from the environment") {
  fs::path d = fresh_dir("envout");
  std::string cmd = "DSYK_OUT=" + d.string() + " " + DSYK_CLI_PATH +
                    " largeq --q 8 --muhat 0.3 --times 1 > /dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(rc) == 0);
  CHECK(fs::exists(d / "largeq.csv"));
}
