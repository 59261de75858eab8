#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rdme/model.hpp"
#include "rdme/rng.hpp"

namespace rdme {

/// Indexed binary min-heap of (next event time, voxel). Each voxel is in
/// the heap exactly once; `update` restores the heap after a key change.
class EventQueue {
 public:
  explicit EventQueue(std::span<const double> times);

  int top() const { return heap_[0]; }
  double top_time() const { return time_[heap_[0]]; }
  double time(int voxel) const { return time_[voxel]; }
  void update(int voxel, double t);
  bool valid() const;

 private:
  void sift_up(std::size_t pos);
  void sift_down(std::size_t pos);
  void swap_at(std::size_t a, std::size_t b);

  std::vector<double> time_;
  std::vector<int> heap_;
  std::vector<std::size_t> pos_;
};

// Direct-method SSA of the reactions of one voxel over [0, t_span].
// Returns the number of reaction events fired.
std::uint64_t ssa_reaction_window(std::span<Count> row, const ModelSystem& m, int voxel, double t_span, Rng& rng);

struct NsmOptions {
  bool reactions = true;
  bool diffusion = true;
  // Cross-check cached voxel rates against a fresh recomputation after
  // every event. Test-only, O(N_v) per event.
  bool audit = false;
  Count copy_ceiling = Count{1} << 40;
};

/// Next Subvolume Method. Voxel total rates are recomputed from the voxel's
/// own row whenever it changes, so cached and fresh values agree exactly.
class NsmEngine {
 public:
  NsmEngine(const ModelSystem& m, StateMatrix x, Rng& rng, NsmOptions opts = {});

  // Fires every event with time <= t. Pending events stay scheduled.
  void advance_to(double t);

  const StateMatrix& state() const { return x_; }
  double time() const { return now_; }
  std::uint64_t events() const { return events_; }
  std::uint64_t reaction_events() const { return reaction_events_; }
  double voxel_rate(int i) const { return react_rate_[i] + diff_rate_[i]; }
  // Largest |cached - fresh| / fresh seen in audit mode.
  double audit_drift() const { return audit_drift_; }
  double last_event_time() const { return last_event_; }

 private:
  void refresh(int voxel);
  void schedule(int voxel);
  void fire(int voxel);
  void audit();

  const ModelSystem& model_;
  StateMatrix x_;
  Rng& rng_;
  NsmOptions opts_;
  std::vector<double> react_rate_;
  std::vector<double> diff_rate_;
  std::vector<double> prop_;  // per (voxel, reaction)
  EventQueue queue_;
  double now_ = 0.0;
  double last_event_ = 0.0;
  Count total_ = 0;
  std::uint64_t events_ = 0;
  std::uint64_t reaction_events_ = 0;
  double audit_drift_ = 0.0;
};

// Diffusion-only exact sampler over [0, t_span]; conserves per-species totals.
void diffusion_ssa_window(StateMatrix& x, const ModelSystem& m, double t_span, Rng& rng);

struct Trajectory;

// Exact RDME sample path of the model's initial state, snapshotted at
// `sample_times` (ascending, within [0, end_time]).
Trajectory nsm_run(const ModelSystem& m, Rng& rng, std::span<const double> sample_times, NsmOptions opts = {});

}  // namespace rdme
