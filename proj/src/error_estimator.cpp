#include "rdme/error_estimator.hpp"

#include <algorithm>
#include <cmath>

namespace rdme {

// ------------------------------------------------------ ReachableStateDelta

void ReachableStateDelta::add(const DeltaKey& key, double value) {
  if (value == 0.0) return;
  auto [it, inserted] = values_.emplace(key, value);
  if (!inserted) {
    it->second += value;
    if (it->second == 0.0) values_.erase(it);
  }
}

double ReachableStateDelta::at(const DeltaKey& key) const {
  auto it = values_.find(key);
  return it == values_.end() ? 0.0 : it->second;
}

double ReachableStateDelta::sum() const {
  double s = 0.0;
  for (const auto& [k, v] : values_) s += v;
  return s;
}

double ReachableStateDelta::max_abs() const {
  double s = 0.0;
  for (const auto& [k, v] : values_) s = std::max(s, std::abs(v));
  return s;
}

StateMatrix ReachableStateDelta::state_of(const DeltaKey& key, const StateMatrix& x, const ModelSystem& m) {
  StateMatrix y = x;
  if (key.kind == DeltaKind::diff || key.kind == DeltaKind::cross) {
    --y(key.i, key.s);
    ++y(key.j, key.s);
  }
  if (key.kind == DeltaKind::react || key.kind == DeltaKind::cross) {
    const auto& n = m.reactions()[key.r].stoichiometry;
    for (int s = 0; s < y.species(); ++s) y(key.k, s) += n[s];
  }
  return y;
}

std::map<std::vector<Count>, double> ReachableStateDelta::by_state(const StateMatrix& x, const ModelSystem& m) const {
  std::map<std::vector<Count>, double> out;
  for (const auto& [key, v] : values_) {
    const auto y = state_of(key, x, m);
    out[std::vector<Count>(y.data().begin(), y.data().end())] += v;
  }
  return out;
}

std::size_t reachable_state_bound(const ModelSystem& m) {
  const std::size_t ne = m.mesh().connection_count();
  const std::size_t ns = m.species_count();
  const std::size_t nv = m.voxel_count();
  const std::size_t nr = m.reaction_count();
  return 1 + 2 * ne * ns + nv * nr + 2 * nv * nr * ne * ns;
}

// ------------------------------------------------------------ PDF error

ReachableStateDelta commutator_pdf_error(const StateMatrix& x, const ModelSystem& m, double dt) {
  ReachableStateDelta out;
  const int nr = m.reaction_count();
  if (nr == 0) return out;
  const double h = 0.5 * dt * dt;
  const auto& mesh = m.mesh();

  for (int k = 0; k < m.voxel_count(); ++k)
    for (int r = 0; r < nr; ++r) {
      const double a = propensity(m, k, r, x.row(k));
      if (a == 0.0) continue;
      const auto& n = m.reactions()[r].stoichiometry;
      double moved = 0.0;
      for (int s = 0; s < m.species_count(); ++s)
        if (n[s] != 0) moved += n[s] * mesh.out_rate(k, s);
      out.add(DeltaKey::react(k, r), -h * a * moved);
    }

  for (const auto& e : mesh.edges()) {
    const int i = e.from, j = e.to, s = e.species;
    const double flux = e.rate * static_cast<double>(x(i, s));
    const auto xi = x.row(i);
    const auto xj = x.row(j);
    double diff_sum = 0.0;
    for (int r = 0; r < nr; ++r) {
      const double ai = propensity(m, i, r, xi);
      const double aj = propensity(m, j, r, xj);
      const int n_is = m.reactions()[r].stoichiometry[s];
      double cross_i = e.rate * n_is * ai;
      if (flux != 0.0) {
        const double ai_moved = propensity(m, i, r, xi, s, -1);
        const double aj_moved = propensity(m, j, r, xj, s, +1);
        diff_sum += (ai_moved - ai) + (aj_moved - aj);
        cross_i += flux * (ai - ai_moved);
        out.add(DeltaKey::cross(i, j, s, j, r), h * flux * (aj - aj_moved));
      }
      out.add(DeltaKey::cross(i, j, s, i, r), h * cross_i);
    }
    if (flux != 0.0) out.add(DeltaKey::diff(i, j, s), h * flux * diff_sum);
  }
  return out;
}

// --------------------------------------------------------- weak errors

namespace {

struct Workspace {
  int nv, ns, nr;
  std::vector<double> a;       // (i, r)
  std::vector<double> dminus;  // (i, r, s); zero where its multiplier is zero
  std::vector<double> dplus;   // (i, r, s)
  std::vector<double> sig;     // (i, r): sum over s' of sigma_irs'
  std::vector<double> inflow;  // (i, s): sum_j d_jis x_js
  Field R;

  std::size_t ir(int i, int r) const { return static_cast<std::size_t>(i) * nr + r; }
  std::size_t irs(int i, int r, int s) const { return (static_cast<std::size_t>(i) * nr + r) * ns + s; }
};

Workspace prepare(const StateMatrix& x, const ModelSystem& m, ExecPolicy policy) {
  Workspace w;
  w.nv = m.voxel_count();
  w.ns = m.species_count();
  w.nr = m.reaction_count();
  w.a.assign(static_cast<std::size_t>(w.nv) * w.nr, 0.0);
  w.dminus.assign(static_cast<std::size_t>(w.nv) * w.nr * w.ns, 0.0);
  w.dplus.assign(w.dminus.size(), 0.0);
  w.sig.assign(w.a.size(), 0.0);
  w.inflow.assign(static_cast<std::size_t>(w.nv) * w.ns, 0.0);
  w.R = Field(w.nv, w.ns);
  const auto& mesh = m.mesh();

  for_each_index(policy, w.nv, [&](int i) {
    const auto row = x.row(i);
    for (int s = 0; s < w.ns; ++s) {
      double in = 0.0;
      for (int k : mesh.in_edges(i, s)) {
        const auto& e = mesh.edges()[k];
        in += e.rate * static_cast<double>(x(e.from, s));
      }
      w.inflow[static_cast<std::size_t>(i) * w.ns + s] = in;
    }
    for (int r = 0; r < w.nr; ++r) {
      const auto& rx = m.reactions()[r];
      const double a = propensity(m, i, r, row);
      w.a[w.ir(i, r)] = a;
      for (int s = 0; s < w.ns; ++s) w.R(i, s) += rx.stoichiometry[s] * a;
      double sig = 0.0;
      for (int s = 0; s < w.ns; ++s) {
        if (!rx.depends_on(s)) continue;
        const double out = static_cast<double>(row[s]) * mesh.out_rate(i, s);
        const double in = w.inflow[static_cast<std::size_t>(i) * w.ns + s];
        if (out != 0.0) {
          const double d = propensity(m, i, r, row, s, -1) - a;
          w.dminus[w.irs(i, r, s)] = d;
          sig += d * out;
        }
        if (in != 0.0) {
          const double d = propensity(m, i, r, row, s, +1) - a;
          w.dplus[w.irs(i, r, s)] = d;
          sig += d * in;
        }
      }
      w.sig[w.ir(i, r)] = sig;
    }
  });
  return w;
}

}  // namespace

ErrorEstimate estimate_error(const StateMatrix& x, const ModelSystem& m, double dt, ExecPolicy policy) {
  const Workspace w = prepare(x, m, policy);
  const auto& mesh = m.mesh();
  const double h = 0.5 * dt * dt;
  ErrorEstimate est;
  est.dt = dt;
  est.mean = Field(w.nv, w.ns);
  est.second_moment = Field(w.nv, w.ns);
  est.variance = Field(w.nv, w.ns);

  for_each_index(policy, w.nv, [&](int i) {
    for (int s = 0; s < w.ns; ++s) {
      const double xs = static_cast<double>(x(i, s));
      const double out_rate = mesh.out_rate(i, s);
      const double in = w.inflow[static_cast<std::size_t>(i) * w.ns + s];
      double r_in = 0.0;  // sum_j d_jis R_js
      for (int k : mesh.in_edges(i, s)) {
        const auto& e = mesh.edges()[k];
        r_in += e.rate * w.R(e.from, s);
      }
      const double r_out = out_rate * w.R(i, s);

      double mean = r_in - r_out;
      double q = r_in + r_out;
      for (int r = 0; r < w.nr; ++r) {
        const double n = m.reactions()[r].stoichiometry[s];
        if (n == 0.0) continue;
        const double sig = w.sig[w.ir(i, r)];
        mean -= n * sig;
        q -= n * n * sig;
        q -= 2.0 * out_rate * n * n * w.a[w.ir(i, r)];
        q += 2.0 * n * (xs * out_rate * w.dminus[w.irs(i, r, s)] - in * w.dplus[w.irs(i, r, s)]);
      }
      const double dmean = h * mean;
      const double dm2 = 2.0 * xs * dmean + h * q;
      est.mean(i, s) = dmean;
      est.second_moment(i, s) = dm2;
      est.variance(i, s) = dm2 - 2.0 * xs * dmean;
    }
  });
  est.eta = normalized_l1(est.mean, x, mesh.volumes());
  return est;
}

Field error_mean(const StateMatrix& x, const ModelSystem& m, double dt, ExecPolicy policy) {
  return estimate_error(x, m, dt, policy).mean;
}

Field error_second_moment(const StateMatrix& x, const ModelSystem& m, double dt, ExecPolicy policy) {
  return estimate_error(x, m, dt, policy).second_moment;
}

Field error_variance(const StateMatrix& x, const ModelSystem& m, double dt, ExecPolicy policy) {
  return estimate_error(x, m, dt, policy).variance;
}

double weak_error(const StateMatrix& x, const ModelSystem& m, double dt, const std::function<double(Count)>& g,
                  int i, int s) {
  const Workspace w = prepare(x, m, ExecPolicy::serial);
  const auto& mesh = m.mesh();
  const Count xi = x(i, s);
  const double g0 = g(xi);
  auto dg = [&](Count y) { return g(xi + y) - g0; };
  const double out_rate = mesh.out_rate(i, s);
  const double in = w.inflow[static_cast<std::size_t>(i) * w.ns + s];
  const double xs = static_cast<double>(xi);

  double r_in = 0.0;
  for (int k : mesh.in_edges(i, s)) {
    const auto& e = mesh.edges()[k];
    r_in += e.rate * w.R(e.from, s);
  }
  double sum_dminus = 0.0, sum_dplus = 0.0;
  for (int r = 0; r < w.nr; ++r) {
    sum_dminus += w.dminus[w.irs(i, r, s)];
    sum_dplus += w.dplus[w.irs(i, r, s)];
  }

  double total = dg(-1) * xs * out_rate * sum_dminus + dg(+1) * r_in + dg(+1) * in * sum_dplus;
  for (int r = 0; r < w.nr; ++r) {
    const int n = m.reactions()[r].stoichiometry[s];
    const double a = w.a[w.ir(i, r)];
    double other = 0.0;  // sigma summed over s' != s
    for (int sp = 0; sp < w.ns; ++sp) {
      if (sp == s) continue;
      other += static_cast<double>(x(i, sp)) * mesh.out_rate(i, sp) * w.dminus[w.irs(i, r, sp)] +
               w.inflow[static_cast<std::size_t>(i) * w.ns + sp] * w.dplus[w.irs(i, r, sp)];
    }
    total -= dg(n) * out_rate * n * a;
    total -= dg(n) * other;
    total += dg(n - 1) * out_rate * (n * a - xs * w.dminus[w.irs(i, r, s)]);
    total -= dg(n + 1) * in * w.dplus[w.irs(i, r, s)];
  }
  return 0.5 * dt * dt * total;
}

std::vector<double> normalized_l1(const Field& delta_mean, const StateMatrix& x, std::span<const double> volumes) {
  std::vector<double> eta(delta_mean.species, 0.0);
  for (int s = 0; s < delta_mean.species; ++s) {
    double num = 0.0, den = 0.0;
    for (int i = 0; i < delta_mean.voxels; ++i) {
      num += volumes[i] * std::abs(delta_mean(i, s));
      den += volumes[i] * static_cast<double>(x(i, s));
    }
    eta[s] = den > 0.0 ? num / den : 0.0;
  }
  return eta;
}

}  // namespace rdme
