#pragma once

#include <compare>
#include <functional>
#include <map>
#include <vector>

#include "rdme/model.hpp"
#include "rdme/parallel.hpp"
#include "rdme/propensity.hpp"

namespace rdme {

enum class DeltaKind { base, diff, react, cross };

/// Identifies a state reachable from x by one reaction and/or one jump:
///   base              x
///   diff(i,j,s)       x + nu_ijs
///   react(k,r)        x + n_kr
///   cross(i,j,s,k,r)  x + n_kr + nu_ijs
struct DeltaKey {
  DeltaKind kind = DeltaKind::base;
  int i = -1, j = -1, s = -1, k = -1, r = -1;

  static DeltaKey base() { return {}; }
  static DeltaKey diff(int i, int j, int s) { return {DeltaKind::diff, i, j, s, -1, -1}; }
  static DeltaKey react(int k, int r) { return {DeltaKind::react, -1, -1, -1, k, r}; }
  static DeltaKey cross(int i, int j, int s, int k, int r) { return {DeltaKind::cross, i, j, s, k, r}; }

  friend auto operator<=>(const DeltaKey&, const DeltaKey&) = default;
};

/// Sparse conditional local error in the PDF, (dt^2/2) [D, M] delta(x),
/// keyed by perturbation. Zero entries are not stored.
class ReachableStateDelta {
 public:
  void add(const DeltaKey& key, double value);
  double at(const DeltaKey& key) const;
  const std::map<DeltaKey, double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double sum() const;
  double max_abs() const;

  // The state a key refers to. Distinct keys can name the same state
  // (a jump i->j followed by decay in j equals decay in i).
  static StateMatrix state_of(const DeltaKey& key, const StateMatrix& x, const ModelSystem& m);
  // Values aggregated by resulting state.
  std::map<std::vector<Count>, double> by_state(const StateMatrix& x, const ModelSystem& m) const;

 private:
  std::map<DeltaKey, double> values_;
};

// Upper bound on the number of reachable states: 1 + 2 N_e N_s + N_v N_r + 2 N_v N_r N_e N_s.
std::size_t reachable_state_bound(const ModelSystem& m);

ReachableStateDelta commutator_pdf_error(const StateMatrix& x, const ModelSystem& m, double dt);

// Local error in E[g(X_is)] from outflow/inflow of probability differences.
double weak_error(const StateMatrix& x, const ModelSystem& m, double dt, const std::function<double(Count)>& g,
                  int voxel, int species);

Field error_mean(const StateMatrix& x, const ModelSystem& m, double dt, ExecPolicy policy = ExecPolicy::parallel);
Field error_second_moment(const StateMatrix& x, const ModelSystem& m, double dt,
                          ExecPolicy policy = ExecPolicy::parallel);
Field error_variance(const StateMatrix& x, const ModelSystem& m, double dt, ExecPolicy policy = ExecPolicy::parallel);

// eta_s = sum_i |V_i| |dE_is| / sum_i |V_i| x_is; 0 for an absent species.
std::vector<double> normalized_l1(const Field& delta_mean, const StateMatrix& x, std::span<const double> volumes);

struct ErrorEstimate {
  Field mean;
  Field second_moment;
  Field variance;
  std::vector<double> eta;
  double dt = 0.0;
};

// All three moment estimates from one pass over the propensity probes.
ErrorEstimate estimate_error(const StateMatrix& x, const ModelSystem& m, double dt,
                             ExecPolicy policy = ExecPolicy::parallel);

}  // namespace rdme
