#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace rdme {

struct ControllerConfig {
  std::vector<double> epsilon;  // per species; a single entry applies to all
  int stride = 10;
  double safety = 0.9;
  double grow_min = 0.5;
  double grow_max = 2.0;
  double dt_min = 1e-6;
  double dt_max = 1.0;
  double dt_init = 1e-3;
  bool snap_grid = false;

  double tolerance(int species) const { return epsilon.size() == 1 ? epsilon[0] : epsilon[species]; }
  // Throws InvalidArgument on a violated invariant.
  void validate(int species_count) const;
};

enum class DecisionStatus { ok, infeasible, non_finite };

struct StepDecision {
  bool accept = true;
  double next_dt = 0.0;
  int worst_species = -1;
  double eta_max = 0.0;  // max_s eta_s / eps_s
  DecisionStatus status = DecisionStatus::ok;
};

// Elementary controller for a second-order local error:
// next = safety * dt / sqrt(max_s eta_s / eps_s).
StepDecision propose(std::span<const double> eta, const ControllerConfig& cfg, double dt);

// True every `stride` steps and on the first step after a rejection.
bool should_estimate(std::uint64_t step_index, const ControllerConfig& cfg, bool after_rejection = false);

// Largest 2^(k/4) <= dt.
double snap_to_grid(double dt);

}  // namespace rdme
