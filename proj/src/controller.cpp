#include "rdme/controller.hpp"

#include <algorithm>
#include <cmath>

#include "rdme/errors.hpp"

namespace rdme {

void ControllerConfig::validate(int species_count) const {
  if (epsilon.empty() || (epsilon.size() != 1 && static_cast<int>(epsilon.size()) != species_count))
    throw InvalidArgument("epsilon needs one value or one per species");
  for (double e : epsilon)
    if (!(e > 0.0)) throw InvalidArgument("epsilon must be positive");
  if (stride < 1) throw InvalidArgument("stride must be >= 1");
  if (!(safety > 0.0 && safety < 1.0)) throw InvalidArgument("safety must lie in (0, 1)");
  if (!(grow_min > 0.0 && grow_min <= 1.0 && grow_max >= 1.0)) throw InvalidArgument("bad growth clamp");
  if (!(dt_min > 0.0 && dt_min <= dt_max)) throw InvalidArgument("need 0 < dt_min <= dt_max");
  if (!(dt_init > 0.0)) throw InvalidArgument("dt_init must be positive");
}

double snap_to_grid(double dt) {
  const double k = std::floor(4.0 * std::log2(dt) + 1e-9);
  return std::exp2(k / 4.0);
}

StepDecision propose(std::span<const double> eta, const ControllerConfig& cfg, double dt) {
  StepDecision d;
  double ratio = 0.0;
  for (std::size_t s = 0; s < eta.size(); ++s) {
    if (!std::isfinite(eta[s]) || eta[s] < 0.0) {
      d.accept = false;
      d.status = DecisionStatus::non_finite;
      d.worst_species = static_cast<int>(s);
      d.eta_max = eta[s];
      d.next_dt = std::clamp(0.5 * dt, cfg.dt_min, cfg.dt_max);
      return d;
    }
    const double r = eta[s] / cfg.tolerance(static_cast<int>(s));
    if (r > ratio || d.worst_species < 0) {
      ratio = std::max(ratio, r);
      d.worst_species = static_cast<int>(s);
    }
  }
  d.eta_max = ratio;

  double next;
  if (ratio == 0.0) {
    next = 2.0 * dt;
  } else if (ratio <= 1.0) {
    next = dt * std::clamp(cfg.safety / std::sqrt(ratio), cfg.grow_min, cfg.grow_max);
  } else {
    // No lower clamp on a rejection: the retry must actually meet the tolerance.
    next = std::min(dt * cfg.safety / std::sqrt(ratio), dt * cfg.grow_max);
    d.accept = false;
  }
  if (cfg.snap_grid) next = snap_to_grid(next);
  next = std::clamp(next, cfg.dt_min, cfg.dt_max);

  if (!d.accept && dt <= cfg.dt_min) {
    // Already at the floor: proceed and flag instead of looping.
    d.accept = true;
    d.status = DecisionStatus::infeasible;
  }
  d.next_dt = next;
  return d;
}

bool should_estimate(std::uint64_t step_index, const ControllerConfig& cfg, bool after_rejection) {
  return after_rejection || step_index % static_cast<std::uint64_t>(cfg.stride) == 0;
}

}  // namespace rdme
