#pragma once

#include <cstdint>
#include <memory>
#include <set>
#include <span>

#include "rdme/controller.hpp"
#include "rdme/dfsp.hpp"
#include "rdme/model.hpp"
#include "rdme/parallel.hpp"
#include "rdme/trajectory.hpp"

namespace rdme {

enum class Propagator { exact_ssa, dfsp };

struct SplitConfig {
  Propagator propagator = Propagator::dfsp;
  bool adaptive = false;
  double fixed_dt = 0.01;
  ControllerConfig controller;
  int hop_radius = 3;
  double table_tol = 5e-3;
  ExecPolicy policy = ExecPolicy::parallel;

  void validate(int species_count) const;
};

/// Diffusion half-step. Implementations draw from per-step substreams and
/// never touch reaction state.
class DiffusionPropagator {
 public:
  virtual ~DiffusionPropagator() = default;
  virtual void apply(StateMatrix& x, double dt, const StepContext& ctx, ExecPolicy policy) = 0;
  // Largest truncation residual of the tables behind the last apply().
  virtual double last_residual() const { return 0.0; }
};

class ExactDiffusion final : public DiffusionPropagator {
 public:
  explicit ExactDiffusion(const ModelSystem& m) : model_(m) {}
  void apply(StateMatrix& x, double dt, const StepContext& ctx, ExecPolicy policy) override;

 private:
  const ModelSystem& model_;
};

class DfspDiffusion final : public DiffusionPropagator {
 public:
  // A shared cache can be passed so several runs reuse the same tables.
  DfspDiffusion(const MeshGraph& mesh, int hop_radius, double table_tol, std::shared_ptr<TableCache> cache = nullptr);
  void apply(StateMatrix& x, double dt, const StepContext& ctx, ExecPolicy policy) override;
  double last_residual() const override { return residual_; }
  const TableCache& cache() const { return *cache_; }
  // Distinct step sizes this propagator has drawn tables for.
  std::size_t table_sets_used() const { return used_.size(); }

 private:
  const MeshGraph& mesh_;
  int hop_radius_;
  double table_tol_;
  std::shared_ptr<TableCache> cache_;
  double residual_ = 0.0;
  std::set<double> used_;
};

std::unique_ptr<DiffusionPropagator> make_propagator(const ModelSystem& m, const SplitConfig& cfg,
                                                     std::shared_ptr<TableCache> cache = nullptr);

// Reaction half-step: an independent SSA window in every voxel.
void reaction_substep(StateMatrix& x, const ModelSystem& m, double dt, const StepContext& ctx, ExecPolicy policy);

// x <- R(dt) D(dt) x: diffusion first, then reactions on the result.
void lie_trotter_step(StateMatrix& x, const ModelSystem& m, double dt, DiffusionPropagator& diffusion,
                      const StepContext& ctx, ExecPolicy policy = ExecPolicy::parallel);

// Split-step sample path from the model's initial state, stepping exactly
// onto each of `sample_times`. With cfg.adaptive the step size follows the
// controller; otherwise cfg.fixed_dt is used throughout.
Trajectory run_split(const ModelSystem& m, const SplitConfig& cfg, std::uint64_t seed, std::uint64_t index,
                     std::span<const double> sample_times, std::shared_ptr<TableCache> cache = nullptr);

}  // namespace rdme
