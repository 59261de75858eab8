#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rdme/model_io.hpp"
#include "rdme/split_stepper.hpp"
#include "rdme/trajectory.hpp"

namespace rdme {

enum class Solver { nsm, split_exact, split_dfsp, adaptive_exact, adaptive_dfsp };

Solver parse_solver(const std::string& name);  // throws InvalidArgument
std::string solver_name(Solver s);
SplitConfig split_config(const ModelFile& mf, Solver s, ExecPolicy policy = ExecPolicy::parallel);

struct Ensemble {
  Solver solver = Solver::nsm;
  std::vector<Trajectory> trajectories;
  double wall_seconds = 0.0;
};

// n trajectories on substreams (seed, index). More than one trajectory
// runs in parallel across trajectories with serial kernels; a single one
// uses the parallel kernels. Output does not depend on the choice.
Ensemble run_ensemble(const ModelFile& mf, Solver solver, std::size_t n, std::uint64_t seed);
Trajectory run_single(const ModelFile& mf, Solver solver, std::uint64_t seed, std::uint64_t index,
                      ExecPolicy policy, std::shared_ptr<TableCache> cache = nullptr);

void write_ensemble_csv(std::ostream& os, const Ensemble& e, const SpeciesSet& species);
// Per sample time: mean and variance of each species total and per-voxel means.
nlohmann::json summary_json(const Ensemble& e, const ModelSystem& m);

// Least-squares slope of log y against log x; NaN when any y <= 0 or fewer
// than two points.
double loglog_slope(std::span<const double> x, std::span<const double> y);

struct LocalConvergenceRow {
  double dt = 0.0;
  double true_error = 0.0;  // sum_is |oracle dE_is|
  double estimate = 0.0;    // sum_is |estimated dE_is|
  double residual = 0.0;    // sum_is |estimate - oracle|
  double boundary_mass = 0.0;
};

struct LocalConvergence {
  std::vector<LocalConvergenceRow> rows;
  double true_slope = 0.0;
  double estimate_slope = 0.0;
  double residual_slope = 0.0;
  bool degenerate = false;  // every error is zero: the operators commute here
};

// Oracle state caps: per (voxel, species), enough headroom above x0 for
// everything one step can reach, or the whole conserved total when known.
std::vector<Count> oracle_caps(const ModelSystem& m, const StateMatrix& x0, Count headroom);

LocalConvergence converge_local(const ModelSystem& m, const StateMatrix& x0, std::span<const double> dts,
                                Count headroom = 6);

struct GlobalConvergenceRow {
  double dt = 0.0;
  double error = 0.0;  // sum_is |split mean - exact mean| at T
};

struct GlobalConvergence {
  std::vector<GlobalConvergenceRow> rows;
  double slope = 0.0;
};

GlobalConvergence converge_global(const ModelSystem& m, const StateMatrix& x0, double T, std::span<const double> dts,
                                  std::vector<Count> caps);

void write_local_csv(std::ostream& os, const LocalConvergence& c);
void write_global_csv(std::ostream& os, const GlobalConvergence& c);

struct BenchRow {
  std::string model;
  int voxels = 0;
  std::string solver;
  int threads = 1;
  double seconds = 0.0;
  std::size_t steps = 0;
};

// Wall clock of one trajectory per (model, solver, thread count), after an
// untimed warmup run.
std::vector<BenchRow> bench(const std::vector<std::string>& models, const std::vector<Solver>& solvers,
                            const std::vector<int>& threads, std::uint64_t seed, double end_time);
void write_bench_csv(std::ostream& os, std::span<const BenchRow> rows);

}  // namespace rdme
