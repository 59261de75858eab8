#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rdme/model.hpp"

namespace rdme {

struct StepRecord {
  double t = 0.0;   // step start
  double dt = 0.0;  // step actually taken (or proposed, for rejections)
  bool accepted = true;
  bool estimated = false;
  bool truncated = false;  // shortened to land on a sample time
  bool infeasible = false;  // accepted at dt_min with error above tolerance
  std::vector<double> eta;
  double table_residual = 0.0;
};

struct StepDiagnostics {
  std::vector<StepRecord> steps;
  int rejections = 0;
  int infeasible_warnings = 0;
  int table_builds = 0;  // distinct DFSP table sets the run stepped with

  std::vector<double> accepted_dt(bool include_truncated = false) const;
  // Trailing moving average of accepted step sizes.
  std::vector<double> windowed_dt(int window = 10) const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<StateMatrix> snapshots;
  std::string solver;
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
  double wall_seconds = 0.0;
  StepDiagnostics diagnostics;
};

// Long-format CSV: trajectory,time,voxel,species,count. Times use 17
// significant digits so reloading reproduces them exactly.
void write_trajectory_header(std::ostream& os);
void write_trajectory_csv(std::ostream& os, const Trajectory& t, const SpeciesSet& species);
std::vector<Trajectory> read_trajectories_csv(std::istream& is, const SpeciesSet& species, int voxels);

void write_diagnostics_csv(std::ostream& os, const StepDiagnostics& d, const SpeciesSet& species);

}  // namespace rdme
