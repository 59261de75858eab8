#include "rdme/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "rdme/error_estimator.hpp"
#include "rdme/errors.hpp"
#include "rdme/exact_solvers.hpp"
#include "rdme/oracle.hpp"

namespace rdme {

using nlohmann::json;

Solver parse_solver(const std::string& name) {
  if (name == "nsm") return Solver::nsm;
  if (name == "split-exact") return Solver::split_exact;
  if (name == "split-dfsp") return Solver::split_dfsp;
  if (name == "adaptive-exact") return Solver::adaptive_exact;
  if (name == "adaptive-dfsp") return Solver::adaptive_dfsp;
  throw InvalidArgument("unknown solver '" + name +
                        "' (nsm, split-exact, split-dfsp, adaptive-exact, adaptive-dfsp)");
}

std::string solver_name(Solver s) {
  switch (s) {
    case Solver::nsm: return "nsm";
    case Solver::split_exact: return "split-exact";
    case Solver::split_dfsp: return "split-dfsp";
    case Solver::adaptive_exact: return "adaptive-exact";
    case Solver::adaptive_dfsp: return "adaptive-dfsp";
  }
  return "?";
}

SplitConfig split_config(const ModelFile& mf, Solver s, ExecPolicy policy) {
  SplitConfig c;
  c.propagator = (s == Solver::split_exact || s == Solver::adaptive_exact) ? Propagator::exact_ssa : Propagator::dfsp;
  c.adaptive = s == Solver::adaptive_exact || s == Solver::adaptive_dfsp;
  c.fixed_dt = mf.dt;
  c.controller = mf.controller;
  c.hop_radius = mf.hop_radius;
  c.table_tol = mf.table_tol;
  c.policy = policy;
  return c;
}

Trajectory run_single(const ModelFile& mf, Solver solver, std::uint64_t seed, std::uint64_t index,
                      ExecPolicy policy, std::shared_ptr<TableCache> cache) {
  const auto times = mf.model.sample_times();
  if (solver == Solver::nsm) {
    const auto start = std::chrono::steady_clock::now();
    Rng rng = make_stream({seed, index, 0, 0, Phase::nsm});
    auto t = nsm_run(mf.model, rng, times);
    t.seed = seed;
    t.index = index;
    t.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return t;
  }
  return run_split(mf.model, split_config(mf, solver, policy), seed, index, times, std::move(cache));
}

Ensemble run_ensemble(const ModelFile& mf, Solver solver, std::size_t n, std::uint64_t seed) {
  Ensemble e;
  e.solver = solver;
  e.trajectories.resize(n);
  const auto start = std::chrono::steady_clock::now();
  auto cache = std::make_shared<TableCache>();
  if (n == 1) {
    e.trajectories[0] = run_single(mf, solver, seed, 0, ExecPolicy::parallel, cache);
  } else if (n > 1) {
    // Exceptions cannot leave an OpenMP region; collect the first one.
    std::vector<std::exception_ptr> errors(n);
    for_each_index(ExecPolicy::parallel, static_cast<int>(n), [&](int k) {
      try {
        e.trajectories[k] = run_single(mf, solver, seed, static_cast<std::uint64_t>(k), ExecPolicy::serial, cache);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    });
    for (auto& err : errors)
      if (err) std::rethrow_exception(err);
  }
  e.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return e;
}

void write_ensemble_csv(std::ostream& os, const Ensemble& e, const SpeciesSet& species) {
  if (e.trajectories.empty()) return;
  write_trajectory_header(os);
  for (const auto& t : e.trajectories) write_trajectory_csv(os, t, species);
}

json summary_json(const Ensemble& e, const ModelSystem& m) {
  json out;
  out["solver"] = solver_name(e.solver);
  out["trajectories"] = e.trajectories.size();
  out["wall_seconds"] = e.wall_seconds;
  out["species"] = m.species().names;
  out["voxels"] = m.voxel_count();
  json samples = json::array();
  if (!e.trajectories.empty()) {
    const int nv = m.voxel_count(), ns = m.species_count();
    const double n = static_cast<double>(e.trajectories.size());
    const auto& times = e.trajectories.front().times;
    for (std::size_t k = 0; k < times.size(); ++k) {
      std::vector<double> mean(ns, 0.0), sq(ns, 0.0), vox(static_cast<std::size_t>(nv) * ns, 0.0);
      for (const auto& t : e.trajectories) {
        const auto& x = t.snapshots[k];
        for (int s = 0; s < ns; ++s) {
          const double c = static_cast<double>(x.species_total(s));
          mean[s] += c;
          sq[s] += c * c;
        }
        for (std::size_t q = 0; q < vox.size(); ++q) vox[q] += static_cast<double>(x.data()[q]);
      }
      json row;
      row["time"] = times[k];
      json per_species = json::object();
      for (int s = 0; s < ns; ++s) {
        const double mu = mean[s] / n;
        const double var = n > 1 ? (sq[s] - n * mu * mu) / (n - 1) : 0.0;
        json vm = json::array();
        for (int i = 0; i < nv; ++i) vm.push_back(vox[static_cast<std::size_t>(i) * ns + s] / n);
        per_species[m.species().names[s]] = {{"mean", mu}, {"variance", std::max(0.0, var)}, {"voxel_means", vm}};
      }
      row["species"] = per_species;
      samples.push_back(row);
    }
  }
  out["samples"] = samples;
  json steps = json::array();
  for (const auto& t : e.trajectories) {
    const auto& d = t.diagnostics;
    steps.push_back({{"index", t.index},
                     {"wall_seconds", t.wall_seconds},
                     {"steps", d.steps.size()},
                     {"rejections", d.rejections},
                     {"infeasible_warnings", d.infeasible_warnings},
                     {"table_builds", d.table_builds}});
  }
  out["runs"] = steps;
  return out;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (!(x[k] > 0.0) || !(y[k] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    const double lx = std::log(x[k]), ly = std::log(y[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (n * sxy - sx * sy) / den;
}

std::vector<Count> oracle_caps(const ModelSystem& m, const StateMatrix& x0, Count headroom) {
  const int nv = m.voxel_count(), ns = m.species_count();
  std::vector<Count> caps(static_cast<std::size_t>(nv) * ns);
  for (int s = 0; s < ns; ++s) {
    bool produced = false;
    for (const auto& r : m.reactions()) produced = produced || r.stoichiometry[s] > 0;
    const bool mobile = m.mesh().species_mobile(s);
    for (int i = 0; i < nv; ++i) {
      Count cap = x0(i, s) + headroom;
      if (!produced) cap = std::min(cap, mobile ? x0.species_total(s) : x0(i, s));
      caps[static_cast<std::size_t>(i) * ns + s] = cap;
    }
  }
  return caps;
}

LocalConvergence converge_local(const ModelSystem& m, const StateMatrix& x0, std::span<const double> dts,
                                Count headroom) {
  const oracle::TruncatedStateSpace space(m.voxel_count(), m.species_count(), oracle_caps(m, x0, headroom));
  const auto g = oracle::build_generators(m, space);
  LocalConvergence out;
  std::vector<double> xs, te, es, rs;
  for (double dt : dts) {
    const auto truth = oracle::exact_local_error(g, space, x0, dt, 1e-14);
    const auto est = estimate_error(x0, m, dt, ExecPolicy::serial);
    LocalConvergenceRow row;
    row.dt = dt;
    row.boundary_mass = truth.boundary_mass;
    for (std::size_t k = 0; k < est.mean.values.size(); ++k) {
      row.true_error += std::abs(truth.mean.values[k]);
      row.estimate += std::abs(est.mean.values[k]);
      row.residual += std::abs(est.mean.values[k] - truth.mean.values[k]);
    }
    out.rows.push_back(row);
    xs.push_back(dt);
    te.push_back(row.true_error);
    es.push_back(row.estimate);
    rs.push_back(row.residual);
  }
  out.true_slope = loglog_slope(xs, te);
  out.estimate_slope = loglog_slope(xs, es);
  out.residual_slope = loglog_slope(xs, rs);
  // Below round-off of an O(1) probability vector the operators commute.
  out.degenerate = std::all_of(out.rows.begin(), out.rows.end(),
                               [](const auto& r) { return r.true_error < 1e-13 && r.estimate == 0.0; });
  return out;
}

GlobalConvergence converge_global(const ModelSystem& m, const StateMatrix& x0, double T, std::span<const double> dts,
                                  std::vector<Count> caps) {
  const oracle::TruncatedStateSpace space(m.voxel_count(), m.species_count(), std::move(caps));
  const auto g = oracle::build_generators(m, space);
  GlobalConvergence out;
  std::vector<double> xs, ys;
  for (double dt : dts) {
    const auto gm = oracle::global_means(g, space, x0, T, dt, 1e-14);
    double err = 0.0;
    for (std::size_t k = 0; k < gm.exact.values.size(); ++k) err += std::abs(gm.split.values[k] - gm.exact.values[k]);
    out.rows.push_back({dt, err});
    xs.push_back(dt);
    ys.push_back(err);
  }
  out.slope = loglog_slope(xs, ys);
  return out;
}

namespace {

std::string g17(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_local_csv(std::ostream& os, const LocalConvergence& c) {
  os << "dt,true_error,estimate,residual,boundary_mass\n";
  for (const auto& r : c.rows)
    os << g17(r.dt) << ',' << g17(r.true_error) << ',' << g17(r.estimate) << ',' << g17(r.residual) << ','
       << g17(r.boundary_mass) << '\n';
  os << "# slope_true," << g17(c.true_slope) << "\n# slope_estimate," << g17(c.estimate_slope)
     << "\n# slope_residual," << g17(c.residual_slope) << "\n# degenerate," << (c.degenerate ? 1 : 0) << '\n';
}

void write_global_csv(std::ostream& os, const GlobalConvergence& c) {
  os << "dt,error\n";
  for (const auto& r : c.rows) os << g17(r.dt) << ',' << g17(r.error) << '\n';
  os << "# slope," << g17(c.slope) << '\n';
}

std::vector<BenchRow> bench(const std::vector<std::string>& models, const std::vector<Solver>& solvers,
                            const std::vector<int>& threads, std::uint64_t seed, double end_time) {
  std::vector<BenchRow> rows;
  const int restore = max_threads();
  for (const auto& name : models) {
    auto mf = resolve_model(name);
    if (end_time > 0.0) mf.model = mf.model.with_end_time(end_time, end_time);
    for (Solver s : solvers)
      for (int th : (s == Solver::nsm ? std::vector<int>{1} : threads)) {
        set_threads(th);
        run_single(mf, s, seed, 0, ExecPolicy::parallel);  // warmup
        const auto start = std::chrono::steady_clock::now();
        const auto t = run_single(mf, s, seed, 1, ExecPolicy::parallel);
        BenchRow r;
        r.model = name;
        r.voxels = mf.model.voxel_count();
        r.solver = solver_name(s);
        r.threads = th;
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        r.steps = t.diagnostics.steps.size();
        rows.push_back(r);
      }
  }
  set_threads(restore);
  return rows;
}

void write_bench_csv(std::ostream& os, std::span<const BenchRow> rows) {
  os << "model,voxels,solver,threads,seconds,steps\n";
  for (const auto& r : rows)
    os << r.model << ',' << r.voxels << ',' << r.solver << ',' << r.threads << ',' << g17(r.seconds) << ','
       << r.steps << '\n';
}

}  // namespace rdme
