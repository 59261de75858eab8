#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>

#include "rdme/dfsp.hpp"
#include "rdme/driver.hpp"
#include "rdme/error_estimator.hpp"
#include "rdme/errors.hpp"
#include "rdme/oracle.hpp"

namespace {

using namespace rdme;

enum Exit { ok = 0, usage = 1, model_error = 2, numeric_error = 3 };

struct Common {
  std::string model;
  std::string solver = "adaptive-dfsp";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
  std::string out;
};

// Output to a file, or stdout when no path is given.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw ConfigurationError("cannot open '" + path + "' for writing");
    }
  }
  std::ostream& get() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

StateMatrix state_or_initial(const std::string& path, const ModelSystem& m) {
  return path.empty() ? m.initial_state() : load_state_csv(path, m);
}

int cmd_run(const Common& c, std::size_t n, double end_time, const std::string& summary_path,
            const std::string& diag_path) {
  auto mf = resolve_model(c.model);
  if (end_time > 0.0) mf.model = mf.model.with_end_time(end_time, std::min(end_time, mf.model.output_interval()));
  const Solver solver = parse_solver(c.solver);
  const std::uint64_t seed = c.seed_set ? c.seed : mf.seed;
  const auto e = run_ensemble(mf, solver, n, seed);
  {
    Sink sink(c.out);
    write_ensemble_csv(sink.get(), e, mf.model.species());
  }
  std::string spath = summary_path;
  if (spath.empty() && !c.out.empty()) spath = c.out + ".summary.json";
  if (!spath.empty()) {
    std::ofstream os(spath);
    os << summary_json(e, mf.model).dump(2) << '\n';
  }
  if (!diag_path.empty() && !e.trajectories.empty()) {
    std::ofstream os(diag_path);
    write_diagnostics_csv(os, e.trajectories.front().diagnostics, mf.model.species());
  }
  int warnings = 0;
  for (const auto& t : e.trajectories) warnings += t.diagnostics.infeasible_warnings;
  if (warnings > 0)
    std::cerr << "warning: " << warnings << " steps accepted at dt_min above the error tolerance\n";
  return ok;
}

int cmd_estimate(const Common& c, const std::string& state, const std::vector<double>& dts) {
  const auto mf = resolve_model(c.model);
  const auto x = state_or_initial(state, mf.model);
  Sink sink(c.out);
  auto& os = sink.get();
  const auto& names = mf.model.species().names;
  os << "dt,voxel,species,d_mean,d_second_moment,d_variance,eta\n";
  for (double dt : dts) {
    const auto est = estimate_error(x, mf.model, dt);
    for (int i = 0; i < mf.model.voxel_count(); ++i)
      for (int s = 0; s < mf.model.species_count(); ++s)
        os << g17(dt) << ',' << i << ',' << names[s] << ',' << g17(est.mean(i, s)) << ','
           << g17(est.second_moment(i, s)) << ',' << g17(est.variance(i, s)) << ',' << g17(est.eta[s]) << '\n';
  }
  return ok;
}

int cmd_converge(const Common& c, const std::string& mode, const std::string& state, const std::vector<double>& dts,
                 double end_time, int headroom) {
  const auto mf = resolve_model(c.model);
  const auto x = state_or_initial(state, mf.model);
  Sink sink(c.out);
  if (mode == "local") {
    const auto r = converge_local(mf.model, x, dts, headroom);
    write_local_csv(sink.get(), r);
    if (r.degenerate) std::cerr << "note: all errors are zero (commuting operators); slopes are undefined\n";
  } else {
    const double T = end_time > 0.0 ? end_time : 1.0;
    write_global_csv(sink.get(), converge_global(mf.model, x, T, dts, oracle_caps(mf.model, x, headroom)));
  }
  return ok;
}

int cmd_oracle(const Common& c, const std::string& state, const std::vector<double>& dts, int headroom) {
  const auto mf = resolve_model(c.model);
  const auto& m = mf.model;
  const auto x = state_or_initial(state, m);
  const oracle::TruncatedStateSpace space(m.voxel_count(), m.species_count(), oracle_caps(m, x, headroom));
  const auto g = oracle::build_generators(m, space);
  Sink sink(c.out);
  auto& os = sink.get();
  os << "dt,voxel,species,true_d_mean,est_d_mean,true_d_second_moment,est_d_second_moment,residual_mean\n";
  for (double dt : dts) {
    const auto t = oracle::exact_local_error(g, space, x, dt, 1e-14);
    const auto e = estimate_error(x, m, dt, ExecPolicy::serial);
    for (int i = 0; i < m.voxel_count(); ++i)
      for (int s = 0; s < m.species_count(); ++s)
        os << g17(dt) << ',' << i << ',' << m.species().names[s] << ',' << g17(t.mean(i, s)) << ','
           << g17(e.mean(i, s)) << ',' << g17(t.second_moment(i, s)) << ',' << g17(e.second_moment(i, s)) << ','
           << g17(std::abs(e.mean(i, s) - t.mean(i, s))) << '\n';
  }
  const auto conv = converge_local(m, x, dts, headroom);
  os << "# slope_true," << g17(conv.true_slope) << "\n# slope_residual," << g17(conv.residual_slope) << '\n';
  return ok;
}

int cmd_bench(const Common& c, const std::vector<std::string>& models, const std::vector<std::string>& solvers,
              const std::vector<int>& threads, double end_time) {
  std::vector<Solver> ss;
  for (const auto& s : solvers) ss.push_back(parse_solver(s));
  std::vector<std::string> ms = models;
  if (ms.empty()) ms.push_back(c.model.empty() ? "mincde-3d-cartesian:5" : c.model);
  const auto rows = bench(ms, ss, threads, c.seed_set ? c.seed : 1, end_time);
  Sink sink(c.out);
  write_bench_csv(sink.get(), rows);
  return ok;
}

int cmd_tables(const Common& c, double dt, const std::string& load) {
  const auto mf = resolve_model(c.model);
  if (!load.empty()) {
    const auto t = load_tables(load, mf.model.mesh());
    std::cout << "tables: " << t.tables().size() << " dt=" << g17(t.params().dt)
              << " hop_radius=" << t.params().hop_radius << " max_residual=" << g17(t.max_residual()) << '\n';
    return ok;
  }
  if (c.out.empty()) throw InvalidArgument("tables needs --out or --load");
  TableParams p;
  p.dt = dt > 0.0 ? dt : mf.dt;
  p.hop_radius = mf.hop_radius;
  p.table_tol = mf.table_tol;
  const auto t = build_tables(mf.model.mesh(), p);
  save_tables(c.out, t);
  std::cout << "wrote " << t.tables().size() << " tables, max_residual=" << g17(t.max_residual()) << '\n';
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatial stochastic reaction-diffusion simulator with adaptive operator splitting"};
  app.require_subcommand(1);
  Common c;

  auto add_common = [&](CLI::App* sub, bool needs_model = true) {
    auto* opt = sub->add_option("--model", c.model, "Model JSON file or builtin name");
    if (needs_model) opt->required();
    sub->add_option("--seed", c.seed, "Master seed")->each([&](const std::string&) { c.seed_set = true; });
    sub->add_option("--threads", c.threads, "Worker threads (default: RDME_THREADS, else all cores)");
    sub->add_option("--out", c.out, "Output path (default stdout)");
  };

  auto* run = app.add_subcommand("run", "Simulate an ensemble and write trajectories as CSV");
  add_common(run);
  run->add_option("--solver", c.solver, "nsm, split-exact, split-dfsp, adaptive-exact or adaptive-dfsp");
  std::size_t n = 1;
  double end_time = 0.0;
  std::string summary, diag;
  run->add_option("-n,--trajectories", n, "Number of trajectories");
  run->add_option("--end-time", end_time, "Override the model's end time");
  run->add_option("--summary", summary, "Summary JSON path (default <out>.summary.json)");
  run->add_option("--diagnostics", diag, "Step diagnostics CSV of the first trajectory");

  auto* est = app.add_subcommand("estimate-error", "Local splitting error estimates for a state");
  add_common(est);
  std::string state;
  std::vector<double> dts{0.01};
  est->add_option("--state", state, "State CSV (voxel,species,count); default: model initial state");
  est->add_option("--dt", dts, "Step sizes")->expected(1, -1);

  auto* conv = app.add_subcommand("converge", "Local or global convergence study against the oracle");
  add_common(conv);
  std::string mode = "local";
  int headroom = 6;
  conv->add_option("--mode", mode)->check(CLI::IsMember({"local", "global"}));
  conv->add_option("--state", state);
  std::vector<double> study_dts;
  conv->add_option("--dt", study_dts, "Step sizes (default 0.02 0.01 0.005 0.0025; global 0.05 to 0.003125)")
      ->expected(1, -1);
  conv->add_option("--end-time", end_time, "Final time for global mode (default 1)");
  conv->add_option("--headroom", headroom, "Oracle state cap above the initial counts");

  auto* orc = app.add_subcommand("oracle", "Compare estimates with the truncated-generator oracle");
  add_common(orc);
  orc->add_option("--state", state);
  orc->add_option("--dt", study_dts, "Step sizes (default 0.02 0.01 0.005 0.0025)")->expected(1, -1);
  orc->add_option("--headroom", headroom);

  auto* ben = app.add_subcommand("bench", "Wall-clock comparison of solvers");
  add_common(ben, false);
  std::vector<std::string> models, solvers{"nsm", "adaptive-dfsp"};
  std::vector<int> threads{1};
  ben->add_option("--models", models, "Models to time (default: --model, else mincde-3d-cartesian:5)");
  ben->add_option("--solvers", solvers);
  ben->add_option("--thread-counts", threads);
  ben->add_option("--end-time", end_time, "Simulated time per run");

  auto* tab = app.add_subcommand("tables", "Build and dump, or load and check, DFSP tables");
  add_common(tab);
  double table_dt = 0.0;
  std::string load;
  tab->add_option("--dt", table_dt, "Table step size (default: model dt)");
  tab->add_option("--load", load, "Load a table file and verify it against the mesh");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : usage;
  }

  if (study_dts.empty())
    study_dts = *conv && mode == "global" ? std::vector<double>{0.05, 0.025, 0.0125, 0.00625, 0.003125}
                                          : std::vector<double>{0.02, 0.01, 0.005, 0.0025};

  set_threads(c.threads > 0 ? c.threads : default_threads(max_threads()));
  try {
    if (*run) return cmd_run(c, n, end_time, summary, diag);
    if (*est) return cmd_estimate(c, state, dts);
    if (*conv) return cmd_converge(c, mode, state, study_dts, end_time, headroom);
    if (*orc) return cmd_oracle(c, state, study_dts, headroom);
    if (*ben) return cmd_bench(c, models, solvers, threads, end_time);
    if (*tab) return cmd_tables(c, table_dt, load);
  } catch (const ModelError& e) {
    std::cerr << "model error: " << e.what() << '\n';
    return model_error;
  } catch (const ConfigurationError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return model_error;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return numeric_error;
  } catch (const NegativePopulation& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return numeric_error;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return usage;
  }
  return usage;
}
