#include "rdme/exact_solvers.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "rdme/errors.hpp"
#include "rdme/propensity.hpp"
#include "rdme/trajectory.hpp"

namespace rdme {

// --------------------------------------------------------------- EventQueue

EventQueue::EventQueue(std::span<const double> times) : time_(times.begin(), times.end()) {
  heap_.resize(time_.size());
  pos_.resize(time_.size());
  for (std::size_t k = 0; k < heap_.size(); ++k) {
    heap_[k] = static_cast<int>(k);
    pos_[k] = k;
  }
  for (std::size_t k = heap_.size() / 2; k-- > 0;) sift_down(k);
}

void EventQueue::swap_at(std::size_t a, std::size_t b) {
  std::swap(heap_[a], heap_[b]);
  pos_[heap_[a]] = a;
  pos_[heap_[b]] = b;
}

void EventQueue::sift_up(std::size_t p) {
  while (p > 0) {
    const std::size_t parent = (p - 1) / 2;
    if (time_[heap_[parent]] <= time_[heap_[p]]) break;
    swap_at(p, parent);
    p = parent;
  }
}

void EventQueue::sift_down(std::size_t p) {
  const std::size_t n = heap_.size();
  for (;;) {
    std::size_t best = p;
    const std::size_t l = 2 * p + 1, r = l + 1;
    if (l < n && time_[heap_[l]] < time_[heap_[best]]) best = l;
    if (r < n && time_[heap_[r]] < time_[heap_[best]]) best = r;
    if (best == p) return;
    swap_at(p, best);
    p = best;
  }
}

void EventQueue::update(int voxel, double t) {
  const double old = time_[voxel];
  time_[voxel] = t;
  if (t < old)
    sift_up(pos_[voxel]);
  else
    sift_down(pos_[voxel]);
}

bool EventQueue::valid() const {
  for (std::size_t k = 1; k < heap_.size(); ++k)
    if (time_[heap_[(k - 1) / 2]] > time_[heap_[k]]) return false;
  for (std::size_t k = 0; k < heap_.size(); ++k)
    if (pos_[heap_[k]] != k) return false;
  return true;
}

// ------------------------------------------------------------- direct SSA

std::uint64_t ssa_reaction_window(std::span<Count> row, const ModelSystem& m, int voxel, double t_span, Rng& rng) {
  const int nr = m.reaction_count();
  if (nr == 0 || t_span <= 0.0) return 0;
  // Propensities live on the stack for the common small-network case.
  double small[32];
  std::vector<double> big;
  double* a = small;
  if (nr > 32) {
    big.resize(nr);
    a = big.data();
  }

  std::uint64_t fired = 0;
  double t = 0.0;
  for (;;) {
    double a0 = 0.0;
    for (int r = 0; r < nr; ++r) {
      a[r] = propensity(m, voxel, r, row);
      a0 += a[r];
    }
    if (!std::isfinite(a0)) throw NumericError("non-finite reaction propensity sum in voxel " + std::to_string(voxel));
    if (a0 <= 0.0) break;
    t += rng.exponential(a0);
    if (t > t_span) break;
    const double target = rng.uniform() * a0;
    double acc = 0.0;
    int chosen = nr - 1;
    for (int r = 0; r < nr; ++r) {
      acc += a[r];
      if (target <= acc) {
        chosen = r;
        break;
      }
    }
    // Guard against rounding picking a zero-propensity tail channel.
    while (a[chosen] == 0.0) --chosen;
    const auto& n = m.reactions()[chosen].stoichiometry;
    for (std::size_t s = 0; s < row.size(); ++s) {
      row[s] += n[s];
      if (row[s] < 0) throw NegativePopulation("direct method produced a negative copy number");
    }
    ++fired;
  }
  return fired;
}

// --------------------------------------------------------------- NsmEngine

namespace {

std::vector<double> pending_times(int n) { return std::vector<double>(n, INFINITY); }

}  // namespace

NsmEngine::NsmEngine(const ModelSystem& m, StateMatrix x, Rng& rng, NsmOptions opts)
    : model_(m),
      x_(std::move(x)),
      rng_(rng),
      opts_(opts),
      react_rate_(m.voxel_count(), 0.0),
      diff_rate_(m.voxel_count(), 0.0),
      prop_(static_cast<std::size_t>(m.voxel_count()) * m.reaction_count(), 0.0),
      queue_(pending_times(m.voxel_count())) {
  total_ = x_.total();
  for (int i = 0; i < m.voxel_count(); ++i) {
    refresh(i);
    schedule(i);
  }
}

void NsmEngine::refresh(int i) {
  const int nr = model_.reaction_count();
  double ar = 0.0;
  if (opts_.reactions) {
    const auto row = x_.row(i);
    for (int r = 0; r < nr; ++r) {
      const double a = propensity(model_, i, r, row);
      prop_[static_cast<std::size_t>(i) * nr + r] = a;
      ar += a;
    }
  }
  double ad = 0.0;
  if (opts_.diffusion)
    for (int s = 0; s < x_.species(); ++s) ad += static_cast<double>(x_(i, s)) * model_.mesh().out_rate(i, s);
  if (!std::isfinite(ar) || !std::isfinite(ad))
    throw NumericError("non-finite event rate in voxel " + std::to_string(i));
  react_rate_[i] = ar;
  diff_rate_[i] = ad;
}

void NsmEngine::schedule(int i) {
  const double rate = react_rate_[i] + diff_rate_[i];
  queue_.update(i, rate > 0.0 ? now_ + rng_.exponential(rate) : INFINITY);
}

void NsmEngine::fire(int i) {
  const double total = react_rate_[i] + diff_rate_[i];
  double target = rng_.uniform() * total;
  if (target <= react_rate_[i] && react_rate_[i] > 0.0) {
    const int nr = model_.reaction_count();
    int chosen = -1;
    double acc = 0.0;
    for (int r = 0; r < nr; ++r) {
      const double a = prop_[static_cast<std::size_t>(i) * nr + r];
      if (a == 0.0) continue;
      chosen = r;
      acc += a;
      if (target <= acc) break;
    }
    const auto& rx = model_.reactions()[chosen];
    apply_reaction(x_, i, rx);
    for (int v : rx.stoichiometry) total_ += v;
    ++reaction_events_;
    refresh(i);
    schedule(i);
  } else {
    target -= react_rate_[i];
    const DiffusionEdge* chosen = nullptr;
    const DiffusionEdge* last = nullptr;
    double acc = 0.0;
    for (int s = 0; s < x_.species() && !chosen; ++s) {
      const double n = static_cast<double>(x_(i, s));
      if (n == 0.0) continue;
      for (const auto& e : model_.mesh().out_edges(i, s)) {
        acc += n * e.rate;
        last = &e;
        if (target <= acc) {
          chosen = &e;
          break;
        }
      }
    }
    // Rounding at the top of the cumulative sum: take the last live edge.
    if (!chosen) chosen = last;
    apply_diffusion_jump(x_, *chosen);
    refresh(i);
    refresh(chosen->to);
    schedule(i);
    // Memorylessness makes a fresh draw for the destination exact.
    schedule(chosen->to);
  }
  if (total_ > opts_.copy_ceiling) {
    std::ostringstream msg;
    msg << "total copy number " << total_ << " exceeded ceiling " << opts_.copy_ceiling << " at t=" << now_;
    throw NumericError(msg.str());
  }
  ++events_;
}

void NsmEngine::advance_to(double t) {
  if (t < now_) throw InvalidArgument("NSM cannot advance to an earlier time");
  while (queue_.top_time() <= t) {
    const int i = queue_.top();
    const double te = queue_.top_time();
    if (te < last_event_) throw NumericError("NSM event times went backwards");
    now_ = te;
    last_event_ = te;
    fire(i);
    if (opts_.audit) audit();
  }
  now_ = t;
}

void NsmEngine::audit() {
  if (!queue_.valid()) throw NumericError("NSM heap invariant violated");
  const std::vector<double> rr = react_rate_, dr = diff_rate_;
  for (int i = 0; i < x_.voxels(); ++i) {
    // refresh() is deterministic in the row, so compare against a copy.
    refresh(i);
    const double cached = rr[i] + dr[i];
    const double fresh = react_rate_[i] + diff_rate_[i];
    const double scale = std::max(std::abs(fresh), 1e-300);
    audit_drift_ = std::max(audit_drift_, std::abs(cached - fresh) / scale);
  }
}

void diffusion_ssa_window(StateMatrix& x, const ModelSystem& m, double t_span, Rng& rng) {
  if (t_span <= 0.0) return;
  NsmOptions opts;
  opts.reactions = false;
  NsmEngine engine(m, std::move(x), rng, opts);
  engine.advance_to(t_span);
  x = engine.state();
}

Trajectory nsm_run(const ModelSystem& m, Rng& rng, std::span<const double> sample_times, NsmOptions opts) {
  Trajectory out;
  out.solver = "nsm";
  NsmEngine engine(m, m.initial_state(), rng, opts);
  double prev = 0.0;
  for (double t : sample_times) {
    if (t < prev || t < 0.0 || t > m.end_time() * (1 + 1e-12))
      throw InvalidArgument("sample times must be ascending within [0, end_time]");
    engine.advance_to(t);
    out.times.push_back(t);
    out.snapshots.push_back(engine.state());
    prev = t;
  }
  return out;
}

}  // namespace rdme
