#include "rdme/split_stepper.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "rdme/error_estimator.hpp"
#include "rdme/errors.hpp"
#include "rdme/exact_solvers.hpp"

namespace rdme {

void SplitConfig::validate(int species_count) const {
  if (adaptive)
    controller.validate(species_count);
  else if (!(fixed_dt > 0.0) || !std::isfinite(fixed_dt))
    throw InvalidArgument("fixed dt must be positive");
  if (hop_radius < 1) throw InvalidArgument("hop radius must be >= 1");
  if (!(table_tol > 0.0 && table_tol < 1.0)) throw InvalidArgument("table_tol must be in (0, 1)");
}

void ExactDiffusion::apply(StateMatrix& x, double dt, const StepContext& ctx, ExecPolicy) {
  Rng rng = make_stream({ctx.seed, ctx.trajectory, ctx.step, 0, Phase::diffusion});
  diffusion_ssa_window(x, model_, dt, rng);
}

DfspDiffusion::DfspDiffusion(const MeshGraph& mesh, int hop_radius, double table_tol,
                             std::shared_ptr<TableCache> cache)
    : mesh_(mesh),
      hop_radius_(hop_radius),
      table_tol_(table_tol),
      cache_(cache ? std::move(cache) : std::make_shared<TableCache>()) {}

void DfspDiffusion::apply(StateMatrix& x, double dt, const StepContext& ctx, ExecPolicy policy) {
  TableParams p;
  p.dt = dt;
  p.hop_radius = hop_radius_;
  p.table_tol = table_tol_;
  const auto tables = cache_->get(mesh_, p, policy);
  residual_ = tables->max_residual();
  used_.insert(dt);
  dfsp_diffusion_step(x, mesh_, *tables, ctx, policy);
}

std::unique_ptr<DiffusionPropagator> make_propagator(const ModelSystem& m, const SplitConfig& cfg,
                                                     std::shared_ptr<TableCache> cache) {
  if (cfg.propagator == Propagator::exact_ssa) return std::make_unique<ExactDiffusion>(m);
  return std::make_unique<DfspDiffusion>(m.mesh(), cfg.hop_radius, cfg.table_tol, std::move(cache));
}

void reaction_substep(StateMatrix& x, const ModelSystem& m, double dt, const StepContext& ctx, ExecPolicy policy) {
  if (m.reaction_count() == 0) return;
  for_each_index(policy, x.voxels(), [&](int i) {
    Rng rng = make_stream({ctx.seed, ctx.trajectory, ctx.step, static_cast<std::uint64_t>(i), Phase::reaction});
    ssa_reaction_window(x.row(i), m, i, dt, rng);
  });
}

void lie_trotter_step(StateMatrix& x, const ModelSystem& m, double dt, DiffusionPropagator& diffusion,
                      const StepContext& ctx, ExecPolicy policy) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("step size must be positive");
  diffusion.apply(x, dt, ctx, policy);
  reaction_substep(x, m, dt, ctx, policy);
}

Trajectory run_split(const ModelSystem& m, const SplitConfig& cfg, std::uint64_t seed, std::uint64_t index,
                     std::span<const double> sample_times, std::shared_ptr<TableCache> cache) {
  cfg.validate(m.species_count());
  for (std::size_t k = 0; k < sample_times.size(); ++k)
    if (sample_times[k] < 0.0 || (k > 0 && sample_times[k] < sample_times[k - 1]))
      throw InvalidArgument("sample times must be ascending and >= 0");

  const auto start = std::chrono::steady_clock::now();
  Trajectory traj;
  traj.solver = cfg.propagator == Propagator::dfsp ? "split-dfsp" : "split-exact";
  if (cfg.adaptive) traj.solver = "adaptive-" + traj.solver;
  traj.seed = seed;
  traj.index = index;

  auto diffusion = make_propagator(m, cfg, cache);
  // Steps shortened to land on a sample time have one-off lengths; exact
  // sampling is cheaper for them than a fresh table set.
  ExactDiffusion landing(m);
  StateMatrix x = m.initial_state();
  const auto& ctrl = cfg.controller;
  double t = 0.0;
  double dt = cfg.adaptive ? std::clamp(ctrl.dt_init, ctrl.dt_min, ctrl.dt_max) : cfg.fixed_dt;
  std::uint64_t step = 0;
  bool after_rejection = false;
  auto& diag = traj.diagnostics;
  std::size_t next = 0;

  auto take_samples = [&] {
    while (next < sample_times.size() && sample_times[next] <= t) {
      traj.times.push_back(sample_times[next]);
      traj.snapshots.push_back(x);
      ++next;
    }
  };
  take_samples();

  while (next < sample_times.size()) {
    const double target = sample_times[next];
    StepRecord rec;
    rec.t = t;
    double dt_next = dt;

    if (cfg.adaptive && should_estimate(step, ctrl, after_rejection)) {
      const auto est = estimate_error(x, m, dt, cfg.policy);
      const auto d = propose(est.eta, ctrl, dt);
      rec.estimated = true;
      rec.eta = est.eta;
      if (d.status == DecisionStatus::non_finite && dt <= ctrl.dt_min)
        throw NumericError("non-finite error estimate at the minimum step size");
      if (!d.accept) {
        // The estimate is taken on the pre-step state, so a rejection
        // leaves x untouched and needs no rollback.
        rec.dt = dt;
        rec.accepted = false;
        diag.steps.push_back(std::move(rec));
        ++diag.rejections;
        dt = d.next_dt;
        after_rejection = true;
        continue;
      }
      if (d.status == DecisionStatus::infeasible) {
        rec.infeasible = true;
        ++diag.infeasible_warnings;
      }
      dt_next = d.next_dt;
    }
    after_rejection = false;

    double h = dt;
    bool lands = false;
    if (t + dt >= target - 1e-9 * dt) {
      h = target - t;
      lands = true;
      rec.truncated = h < dt * (1.0 - 1e-9);
    }
    const bool one_off = rec.truncated && cfg.propagator == Propagator::dfsp;
    DiffusionPropagator& prop = one_off ? landing : *diffusion;
    lie_trotter_step(x, m, h, prop, {seed, index, step}, cfg.policy);
    t = lands ? target : t + h;
    rec.dt = h;
    rec.table_residual = prop.last_residual();
    diag.steps.push_back(std::move(rec));
    ++step;
    dt = dt_next;
    take_samples();
  }
  if (auto* dfsp = dynamic_cast<DfspDiffusion*>(diffusion.get()))
    diag.table_builds = static_cast<int>(dfsp->table_sets_used());
  traj.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return traj;
}

}  // namespace rdme
