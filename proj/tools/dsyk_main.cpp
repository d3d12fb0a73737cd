// Batch front end: reproducible experiment runs over the saddle, large-q,
// trajectory, and oracle routes. Every run writes a CSV table plus a
// .meta.json sidecar carrying the effective config, its hash, the seeds, and
// the code version. Reruns of the same config are byte-identical.
//
// Exit codes: 0 success, 2 config error, 3 numerical failure.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dsyk/contour.hpp"
#include "dsyk/largeq.hpp"
#include "dsyk/oracle.hpp"
#include "dsyk/params.hpp"
#include "dsyk/rng.hpp"
#include "dsyk/saddle.hpp"
#include "dsyk/trajectory.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dsyk;

namespace {

constexpr int kSchemaVersion = 1;
constexpr std::uint64_t kDisorderTag = 0xD150000ull;

struct Config {
  // model
  int N = 12, q = 4;
  double J = 1.0, mu = 0.0, beta = 0.0;
  // time grid: explicit list wins over the range form
  std::vector<double> times;
  double tmin = 0.0, tmax = -1.0;
  int nt = 0;
  // saddle solver
  int nsteps = 200, nimag = 8, max_iter = 5000;
  double tol = 1e-8, mix = 0.5;
  // Monte Carlo sampler
  int n_traj = 1000, n_disorder = 1, batch = 100, exact_dim = 64;
  double dt_max = 0.05;
  std::uint64_t seed = 1;
  // oracle
  int seeds = 1, krylov_dim = 30;
  double oracle_dt = 0.05;
  std::string method = "krylov";
  // phase diagram
  std::vector<double> mu_list;
  double eps_gap = 0.2;
  // large-q
  double muhat = 0.0;
  // green-dump
  double t_single = 1.0;
  std::string glue = "diagonal";
  // compare meta cross-check
  std::string check_path, against_path;
  // output
  std::string out_dir, prefix;
  int threads = 1;
};

// ---------------------------------------------------------------- utilities

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fnv16hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

void write_csv(const fs::path& p, const std::string& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::string text = header + "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      text += row[i];
      text += (i + 1 < row.size()) ? ',' : '\n';
    }
  }
  write_text(p, text);
}

json beta_json(double beta) {
  if (std::isinf(beta)) return "inf";
  return beta;
}

// nested lookup with the current value as fallback
template <typename T>
void from_json_path(const json& j, const char* sec, const char* key, T& value) {
  if (j.contains(sec) && j[sec].contains(key)) value = j[sec][key].get<T>();
}

void apply_config_file(const std::string& path, Config& c) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config file not found: " + path);
  json j = json::parse(in, nullptr, true, true);
  from_json_path(j, "model", "N", c.N);
  from_json_path(j, "model", "q", c.q);
  from_json_path(j, "model", "J", c.J);
  from_json_path(j, "model", "mu", c.mu);
  if (j.contains("model") && j["model"].contains("beta")) {
    const json& b = j["model"]["beta"];
    c.beta = b.is_string() ? std::numeric_limits<double>::infinity()
                           : b.get<double>();
  }
  if (j.contains("times")) c.times = j["times"].get<std::vector<double>>();
  from_json_path(j, "grid", "tmin", c.tmin);
  from_json_path(j, "grid", "tmax", c.tmax);
  from_json_path(j, "grid", "nt", c.nt);
  from_json_path(j, "saddle", "nsteps", c.nsteps);
  from_json_path(j, "saddle", "nimag", c.nimag);
  from_json_path(j, "saddle", "tol", c.tol);
  from_json_path(j, "saddle", "max_iter", c.max_iter);
  from_json_path(j, "saddle", "mix", c.mix);
  from_json_path(j, "mc", "n_traj", c.n_traj);
  from_json_path(j, "mc", "n_disorder", c.n_disorder);
  from_json_path(j, "mc", "batch", c.batch);
  from_json_path(j, "mc", "exact_dim", c.exact_dim);
  from_json_path(j, "mc", "dt_max", c.dt_max);
  from_json_path(j, "mc", "seed", c.seed);
  from_json_path(j, "oracle", "seeds", c.seeds);
  from_json_path(j, "oracle", "dt", c.oracle_dt);
  from_json_path(j, "oracle", "krylov_dim", c.krylov_dim);
  from_json_path(j, "oracle", "method", c.method);
  if (j.contains("mu_list")) c.mu_list = j["mu_list"].get<std::vector<double>>();
  from_json_path(j, "largeq", "muhat", c.muhat);
  from_json_path(j, "output", "dir", c.out_dir);
  from_json_path(j, "output", "prefix", c.prefix);
  if (j.contains("threads")) c.threads = j["threads"].get<int>();
}

json effective_config(const Config& c, const std::vector<double>& times) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["model"] = {{"N", c.N}, {"q", c.q},         {"J", c.J},
                {"mu", c.mu}, {"beta", beta_json(c.beta)}};
  j["times"] = times;
  j["saddle"] = {{"nsteps", c.nsteps}, {"nimag", c.nimag},       {"tol", c.tol},
                 {"max_iter", c.max_iter}, {"mix", c.mix}};
  j["mc"] = {{"n_traj", c.n_traj},     {"n_disorder", c.n_disorder},
             {"batch", c.batch},       {"exact_dim", c.exact_dim},
             {"dt_max", c.dt_max},     {"seed", c.seed}};
  j["oracle"] = {{"seeds", c.seeds}, {"dt", c.oracle_dt},
                 {"krylov_dim", c.krylov_dim}, {"method", c.method}};
  j["largeq"] = {{"muhat", c.muhat}};
  j["mu_list"] = c.mu_list;
  // output location is deliberately not part of the config hash: the same
  // run written elsewhere is the same run
  j["threads"] = c.threads;
  return j;
}

json base_meta(const std::string& sub, const json& cfg) {
  json meta;
  meta["schema_version"] = kSchemaVersion;
  meta["subcommand"] = sub;
  meta["code_version"] = DSYK_VERSION;
  meta["config"] = cfg;
  meta["config_hash"] = fnv16hex(cfg.dump());
  return meta;
}

ModelParams model_of(const Config& c) {
  ModelParams p;
  p.N = c.N;
  p.q = c.q;
  p.J = c.J;
  p.mu = c.mu;
  p.beta = c.beta;
  p.validate();
  return p;
}

std::vector<double> resolve_times(const Config& c) {
  if (!c.times.empty()) return c.times;
  if (c.nt > 0) {
    std::vector<double> ts(c.nt);
    for (int i = 0; i < c.nt; ++i)
      ts[i] = c.nt == 1
                  ? c.tmin
                  : c.tmin + (c.tmax - c.tmin) * i / static_cast<double>(c.nt - 1);
    return ts;
  }
  throw std::invalid_argument("no time points: pass --times or --tmin/--tmax/--nt");
}

SaddleOptions saddle_opts(const Config& c) {
  SaddleOptions o;
  o.nsteps = c.nsteps;
  o.nimag = c.nimag;
  o.tol = c.tol;
  o.max_iter = c.max_iter;
  o.mix = c.mix;
  return o;
}

std::vector<std::uint64_t> disorder_seeds(std::uint64_t master, int n) {
  std::vector<std::uint64_t> s(n);
  for (int r = 0; r < n; ++r) s[r] = rng::mix(master, kDisorderTag + r);
  return s;
}

// ------------------------------------------------------------- subcommands

void run_page_curve(const Config& c, const fs::path& dir, const std::string& prefix) {
  ModelParams p = model_of(c);
  std::vector<double> times = resolve_times(c);
  PageCurve pc = page_curve(p, times, saddle_opts(c));
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < pc.times.size(); ++i) {
    if (!std::isfinite(pc.S_min[i]))
      throw std::runtime_error("saddle produced a non-finite entropy");
    rows.push_back({fmt17(pc.times[i]), fmt17(pc.S_diag[i]), fmt17(pc.S_worm[i]),
                    fmt17(pc.S_min[i]), std::to_string(pc.dominant[i]),
                    fmt17(pc.residual_diag[i]), fmt17(pc.residual_worm[i])});
  }
  write_csv(dir / (prefix + ".csv"),
            "t,S_diag,S_worm,S_min,dominant,residual_diag,residual_worm", rows);
  json meta = base_meta("page-curve", effective_config(c, times));
  meta["page_time"] = pc.page_time;
  meta["slope_gap"] = pc.slope_gap;
  meta["outputs"] = {{"csv", prefix + ".csv"}};
  write_text(dir / (prefix + ".meta.json"), meta.dump(2) + "\n");
}

void run_phase_diagram(const Config& c, const fs::path& dir,
                       const std::string& prefix) {
  ModelParams p = model_of(c);
  if (c.mu_list.empty())
    throw std::invalid_argument("no jump rates: pass --mu-list");
  auto scan = critical_mu_scan(p, c.mu_list, saddle_opts(c));
  std::vector<std::vector<std::string>> rows;
  for (const auto& g : scan)
    rows.push_back({fmt17(g.mu), fmt17(g.slope_gap), fmt17(g.page_time)});
  write_csv(dir / (prefix + ".csv"), "mu,slope_gap,page_time", rows);
  json meta = base_meta("phase-diagram", effective_config(c, {}));
  meta["mu_c"] = critical_mu_estimate(scan, c.eps_gap);
  meta["eps_gap"] = c.eps_gap;
  meta["outputs"] = {{"csv", prefix + ".csv"}};
  write_text(dir / (prefix + ".meta.json"), meta.dump(2) + "\n");
}

void run_largeq(const Config& c, const fs::path& dir, const std::string& prefix) {
  std::vector<double> times = resolve_times(c);
  std::vector<std::vector<std::string>> rows;
  for (double t : times)
    rows.push_back({fmt17(t), fmt17(largeq::entropy_density(t, c.muhat, c.q))});
  write_csv(dir / (prefix + ".csv"), "t,S_per_fermion", rows);
  json meta = base_meta("largeq", effective_config(c, times));
  meta["outputs"] = {{"csv", prefix + ".csv"}};
  write_text(dir / (prefix + ".meta.json"), meta.dump(2) + "\n");
}

TrajOptions traj_opts(const Config& c) {
  TrajOptions o;
  o.dt_max = c.dt_max;
  o.n_traj = c.n_traj;
  o.n_disorder = c.n_disorder;
  o.batch = c.batch;
  o.exact_dim = c.exact_dim;
  o.threads = c.threads;
  o.master_seed = c.seed;
  return o;
}

void run_traj(const Config& c, const fs::path& dir, const std::string& prefix) {
  ModelParams p = model_of(c);
  std::vector<double> times = resolve_times(c);
  auto est = estimate_purity(p, times, traj_opts(c));
  std::vector<std::vector<std::string>> rows;
  for (const auto& e : est) {
    if (!std::isfinite(e.gamma_mean))
      throw std::runtime_error("sampler produced a non-finite purity");
    rows.push_back({fmt17(e.t), fmt17(e.gamma_mean), fmt17(e.gamma_stderr),
                    fmt17(e.entropy), fmt17(e.entropy_err), std::to_string(p.N),
                    std::to_string(p.q), fmt17(p.mu), fmt17(p.beta),
                    std::to_string(e.n_traj), std::to_string(e.n_disorder),
                    std::to_string(c.seed)});
  }
  write_csv(dir / (prefix + ".csv"),
            "t,gamma,gamma_err,S,S_err,N,q,mu,beta,n_traj,n_disorder,seed", rows);
  json meta = base_meta("traj", effective_config(c, times));
  meta["seeds"] = {{"master_seed", c.seed},
                   {"disorder_seeds", disorder_seeds(c.seed, c.n_disorder)}};
  meta["outputs"] = {{"csv", prefix + ".csv"}};
  write_text(dir / (prefix + ".meta.json"), meta.dump(2) + "\n");
}

OracleOptions oracle_opts(const Config& c) {
  OracleOptions o;
  o.dt = c.oracle_dt;
  o.krylov_dim = c.krylov_dim;
  if (c.method == "krylov")
    o.method = OracleMethod::krylov;
  else if (c.method == "rk4")
    o.method = OracleMethod::rk4;
  else if (c.method == "expm")
    o.method = OracleMethod::expm;
  else
    throw std::invalid_argument("unknown oracle method: " + c.method);
  return o;
}

void run_oracle(const Config& c, const fs::path& dir, const std::string& prefix) {
  ModelParams p = model_of(c);
  std::vector<double> times = resolve_times(c);
  auto seeds = disorder_seeds(c.seed, c.seeds);
  OracleCurve curve = oracle_entropy(p, seeds, times, oracle_opts(c));
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < curve.t.size(); ++i)
    rows.push_back({fmt17(curve.t[i]), fmt17(curve.gamma_mean[i]), "0",
                    fmt17(curve.S[i]), "0", std::to_string(p.N),
                    std::to_string(p.q), fmt17(p.mu), fmt17(p.beta), "0",
                    std::to_string(curve.n_seeds), std::to_string(c.seed)});
  write_csv(dir / (prefix + ".csv"),
            "t,gamma,gamma_err,S,S_err,N,q,mu,beta,n_traj,n_disorder,seed", rows);
  json meta = base_meta("oracle", effective_config(c, times));
  meta["seeds"] = {{"master_seed", c.seed}, {"disorder_seeds", seeds}};
  meta["outputs"] = {{"csv", prefix + ".csv"}};
  write_text(dir / (prefix + ".meta.json"), meta.dump(2) + "\n");
}

void run_compare(const Config& c, const fs::path& dir, const std::string& prefix) {
  if (!c.check_path.empty() || !c.against_path.empty()) {
    if (c.check_path.empty() || c.against_path.empty())
      throw std::invalid_argument("--check and --against must be given together");
    auto load = [](const std::string& path) {
      std::ifstream in(path);
      if (!in) throw std::invalid_argument("meta file not found: " + path);
      return json::parse(in);
    };
    json a = load(c.check_path)["config"]["model"];
    json b = load(c.against_path)["config"]["model"];
    std::vector<std::string> diff;
    for (auto it = a.begin(); it != a.end(); ++it)
      if (!b.contains(it.key()) || b[it.key()] != it.value())
        diff.push_back(it.key());
    for (auto it = b.begin(); it != b.end(); ++it)
      if (!a.contains(it.key())) diff.push_back(it.key());
    if (!diff.empty()) {
      std::string msg = "parameter sets differ:";
      for (const auto& k : diff) msg += " " + k;
      throw std::invalid_argument(msg);
    }
    std::puts("parameter sets match");
    return;
  }

  ModelParams p = model_of(c);
  std::vector<double> times = resolve_times(c);
  auto est = estimate_purity(p, times, traj_opts(c));
  PageCurve pc = page_curve(p, times, saddle_opts(c));
  const bool with_oracle = p.N <= 8;
  OracleCurve orc;
  if (with_oracle)
    orc = oracle_entropy(p, disorder_seeds(c.seed, c.n_disorder), times,
                         oracle_opts(c));
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double s_traj = est[i].entropy / p.N;
    const double s_err = est[i].entropy_err / p.N;
    const double s_orc = with_oracle ? orc.S[i] / p.N : nan;
    const double s_saddle = pc.S_min[i] / p.N;
    const double s_lq = largeq::entropy_density(times[i], p.muhat(), p.q);
    rows.push_back({fmt17(times[i]), fmt17(s_traj), fmt17(s_err), fmt17(s_orc),
                    fmt17(s_saddle), fmt17(s_lq),
                    fmt17(std::abs(s_traj - s_orc)),
                    fmt17(std::abs(s_traj - s_saddle))});
  }
  write_csv(dir / (prefix + ".csv"),
            "t,S_traj,S_traj_err,S_oracle,S_saddle,S_largeq,dev_traj_oracle,"
            "dev_traj_saddle",
            rows);
  json meta = base_meta("compare", effective_config(c, times));
  meta["seeds"] = {{"master_seed", c.seed},
                   {"disorder_seeds", disorder_seeds(c.seed, c.n_disorder)}};
  meta["with_oracle"] = with_oracle;
  meta["outputs"] = {{"csv", prefix + ".csv"}};
  write_text(dir / (prefix + ".meta.json"), meta.dump(2) + "\n");
}

void run_green_dump(const Config& c, const fs::path& dir, const std::string& prefix) {
  ModelParams p = model_of(c);
  const SaddleSeed glue = [&] {
    if (c.glue == "diagonal") return SaddleSeed::diagonal;
    if (c.glue == "wormhole") return SaddleSeed::wormhole;
    throw std::invalid_argument("glue must be diagonal or wormhole");
  }();
  Contour contour = build_contour(2, c.t_single, p.beta, c.nsteps, c.nimag);
  SaddleSolution sol = solve_saddle(p, contour, glue, saddle_opts(c));
  if (!sol.converged)
    throw std::runtime_error("saddle iteration did not converge: residual " +
                             fmt17(sol.residual));
  std::vector<std::vector<std::string>> rows;
  rows.reserve(static_cast<std::size_t>(sol.G.rows()) * sol.G.cols());
  for (Eigen::Index i = 0; i < sol.G.rows(); ++i)
    for (Eigen::Index j = 0; j < sol.G.cols(); ++j)
      rows.push_back({std::to_string(i), std::to_string(j),
                      fmt17(sol.G(i, j).real()), fmt17(sol.G(i, j).imag())});
  write_csv(dir / (prefix + ".csv"), "i,j,re,im", rows);
  json meta = base_meta("green-dump", effective_config(c, {c.t_single}));
  meta["glue"] = c.glue;
  meta["t"] = c.t_single;
  meta["converged"] = sol.converged;
  meta["paired"] = sol.paired;
  meta["iterations"] = sol.iterations;
  meta["residual"] = sol.residual;
  meta["max_cross"] = sol.max_cross;
  meta["action_re"] = sol.action.real();
  meta["action_im"] = sol.action.imag();
  meta["outputs"] = {{"csv", prefix + ".csv"}};
  write_text(dir / (prefix + ".meta.json"), meta.dump(2) + "\n");
}

// ------------------------------------------------------------------- wiring

void add_model_flags(CLI::App* sub, Config& c) {
  sub->add_option("--N", c.N, "Majorana count per side");
  sub->add_option("--q", c.q, "interaction order");
  sub->add_option("--J", c.J, "coupling strength");
  sub->add_option("--mu", c.mu, "jump rate");
  sub->add_option("--beta", c.beta, "inverse temperature (inf allowed)");
}

void add_time_flags(CLI::App* sub, Config& c) {
  sub->add_option("--times", c.times, "explicit time list")->delimiter(',');
  sub->add_option("--tmin", c.tmin, "uniform grid start");
  sub->add_option("--tmax", c.tmax, "uniform grid end");
  sub->add_option("--nt", c.nt, "uniform grid size");
}

void add_saddle_flags(CLI::App* sub, Config& c) {
  sub->add_option("--nsteps", c.nsteps, "real bins per loop round trip");
  sub->add_option("--nimag", c.nimag, "thermal bins per half-arc");
  sub->add_option("--tol", c.tol, "fixed-point residual target");
  sub->add_option("--max-iter", c.max_iter, "iteration cap");
  sub->add_option("--mix", c.mix, "damping weight");
}

void add_mc_flags(CLI::App* sub, Config& c) {
  sub->add_option("--n-traj", c.n_traj, "trajectories per realization");
  sub->add_option("--n-disorder", c.n_disorder, "coupling realizations");
  sub->add_option("--batch", c.batch, "batch size for error bars");
  sub->add_option("--exact-dim", c.exact_dim, "exact-trace dimension cutoff");
  sub->add_option("--dt-max", c.dt_max, "bin width cap");
  sub->add_option("--seed", c.seed, "master seed");
}

void add_output_flags(CLI::App* sub, Config& c) {
  sub->add_option("--out", c.out_dir, "output directory (default $DSYK_OUT or .)");
  sub->add_option("--prefix", c.prefix, "output file prefix");
  sub->add_option("--threads", c.threads, "worker thread bound");
  sub->add_option("--config", "JSON config file (flags override it)")
      ->expected(1);  // consumed in the pre-scan; declared so parsing accepts it
}

}  // namespace

int main(int argc, char** argv) {
  Config cfg;
  // --config is applied before flag parsing so that flags override the file
  try {
    for (int i = 1; i < argc; ++i) {
      std::string arg = argv[i];
      if (arg == "--config" && i + 1 < argc)
        apply_config_file(argv[i + 1], cfg);
      else if (arg.rfind("--config=", 0) == 0)
        apply_config_file(arg.substr(9), cfg);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }

  CLI::App app{"dissipative SYK laboratory: entropy growth of a jump-coupled "
               "thermofield double via saddle, large-q, trajectory, and oracle "
               "routes"};
  app.require_subcommand(1);

  CLI::App* page = app.add_subcommand(
      "page-curve", "large-N entropy curve from the two replica gluings");
  add_model_flags(page, cfg);
  add_time_flags(page, cfg);
  add_saddle_flags(page, cfg);
  add_output_flags(page, cfg);

  CLI::App* phase = app.add_subcommand(
      "phase-diagram", "slope-gap scan over the jump rate");
  add_model_flags(phase, cfg);
  add_saddle_flags(phase, cfg);
  add_output_flags(phase, cfg);
  phase->add_option("--mu-list", cfg.mu_list, "jump rates to scan")->delimiter(',');
  phase->add_option("--eps-gap", cfg.eps_gap, "gap threshold for the estimate");

  CLI::App* lq = app.add_subcommand(
      "largeq", "closed-form entropy density at large interaction order");
  lq->add_option("--q", cfg.q, "interaction order");
  lq->add_option("--muhat", cfg.muhat, "scaled jump rate q*mu");
  add_time_flags(lq, cfg);
  add_output_flags(lq, cfg);

  CLI::App* traj = app.add_subcommand(
      "traj", "quantum-trajectory Monte Carlo purity estimate");
  add_model_flags(traj, cfg);
  add_time_flags(traj, cfg);
  add_mc_flags(traj, cfg);
  add_output_flags(traj, cfg);

  CLI::App* orc = app.add_subcommand(
      "oracle", "exact Lindblad purity curve (N <= 8)");
  add_model_flags(orc, cfg);
  add_time_flags(orc, cfg);
  add_output_flags(orc, cfg);
  orc->add_option("--seeds", cfg.seeds, "number of disorder seeds");
  orc->add_option("--seed", cfg.seed, "master seed");
  orc->add_option("--dt", cfg.oracle_dt, "outer step");
  orc->add_option("--krylov-dim", cfg.krylov_dim, "Krylov subspace size");
  orc->add_option("--method", cfg.method, "krylov | rk4 | expm");

  CLI::App* cmp = app.add_subcommand(
      "compare", "aligned per-fermion entropy table across all routes");
  add_model_flags(cmp, cfg);
  add_time_flags(cmp, cfg);
  add_mc_flags(cmp, cfg);
  add_saddle_flags(cmp, cfg);
  add_output_flags(cmp, cfg);
  cmp->add_option("--check", cfg.check_path, "meta.json to cross-check");
  cmp->add_option("--against", cfg.against_path, "meta.json to compare against");

  CLI::App* gd = app.add_subcommand(
      "green-dump", "solve one saddle and dump the bilocal field");
  add_model_flags(gd, cfg);
  add_saddle_flags(gd, cfg);
  add_output_flags(gd, cfg);
  gd->add_option("--t", cfg.t_single, "evolution time");
  gd->add_option("--glue", cfg.glue, "diagonal | wormhole");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  if (cfg.out_dir.empty()) {
    const char* env = std::getenv("DSYK_OUT");
    cfg.out_dir = env ? env : ".";
  }
  const std::string prefix = cfg.prefix.empty() ? sub : cfg.prefix;
  fs::path dir(cfg.out_dir);

  auto report_error = [&](const char* kind, const std::string& what, int code) {
    std::fprintf(stderr, "%s: %s\n", kind, what.c_str());
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!ec) {
      json err = {{"error", what}, {"kind", kind}, {"exit_code", code}};
      std::ofstream out(dir / (prefix + ".error.json"));
      out << err.dump(2) << "\n";
    }
    return code;
  };

  try {
    fs::create_directories(dir);
    if (sub == "page-curve")
      run_page_curve(cfg, dir, prefix);
    else if (sub == "phase-diagram")
      run_phase_diagram(cfg, dir, prefix);
    else if (sub == "largeq")
      run_largeq(cfg, dir, prefix);
    else if (sub == "traj")
      run_traj(cfg, dir, prefix);
    else if (sub == "oracle")
      run_oracle(cfg, dir, prefix);
    else if (sub == "compare")
      run_compare(cfg, dir, prefix);
    else if (sub == "green-dump")
      run_green_dump(cfg, dir, prefix);
  } catch (const std::invalid_argument& e) {
    return report_error("config error", e.what(), 2);
  } catch (const std::exception& e) {
    return report_error("numerical failure", e.what(), 3);
  }
  return 0;
}
