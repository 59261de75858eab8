#include "rdme/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>
#include <utility>

#include "rdme/errors.hpp"

namespace rdme {

SpeciesSet::SpeciesSet(std::vector<std::string> n, std::vector<double> g) : names(std::move(n)), gamma(std::move(g)) {
  if (names.empty()) throw InvalidArgument("species set must not be empty");
  if (gamma.size() != names.size()) throw InvalidArgument("one diffusion constant per species required");
  std::set<std::string> seen;
  for (std::size_t s = 0; s < names.size(); ++s) {
    if (!seen.insert(names[s]).second) throw InvalidArgument("duplicate species name '" + names[s] + "'");
    if (!(gamma[s] >= 0.0) || !std::isfinite(gamma[s]))
      throw InvalidArgument("diffusion constant of '" + names[s] + "' must be finite and >= 0");
  }
}

std::optional<int> SpeciesSet::index_of(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<int>(it - names.begin());
}

int Reaction::order() const {
  int o = 0;
  for (const auto& r : reactants) o += r.order;
  return o;
}

bool Reaction::depends_on(int species) const {
  if (kind == PropensityKind::tabulated && driver == species) return true;
  return std::any_of(reactants.begin(), reactants.end(), [&](const Reactant& r) { return r.species == species; });
}

// ---------------------------------------------------------------- MeshGraph

MeshGraph::MeshGraph(std::vector<double> volumes, std::vector<DiffusionEdge> edges, int species_count)
    : volumes_(std::move(volumes)), edges_(std::move(edges)), species_count_(species_count) {
  const int nv = voxel_count();
  if (nv < 1) throw InvalidArgument("mesh needs at least one voxel");
  if (species_count_ < 1) throw InvalidArgument("mesh needs at least one species");
  for (double v : volumes_)
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument("voxel volumes must be positive and finite");

  for (const auto& e : edges_) {
    if (e.from < 0 || e.from >= nv || e.to < 0 || e.to >= nv)
      throw InvalidArgument("edge voxel index out of range");
    if (e.from == e.to) throw InvalidArgument("self-edges are not allowed");
    if (e.species < 0 || e.species >= species_count_) throw InvalidArgument("edge species index out of range");
    if (!(e.rate >= 0.0) || !std::isfinite(e.rate)) throw InvalidArgument("jump rates must be finite and >= 0");
  }
  // Zero-rate edges carry nothing; dropping them keeps adjacency tight.
  std::erase_if(edges_, [](const DiffusionEdge& e) { return e.rate == 0.0; });
  std::sort(edges_.begin(), edges_.end(), [](const DiffusionEdge& a, const DiffusionEdge& b) {
    return std::tie(a.from, a.species, a.to) < std::tie(b.from, b.species, b.to);
  });
  for (std::size_t k = 1; k < edges_.size(); ++k) {
    const auto& a = edges_[k - 1];
    const auto& b = edges_[k];
    if (a.from == b.from && a.species == b.species && a.to == b.to)
      throw InvalidArgument("duplicate edge (" + std::to_string(a.from) + "," + std::to_string(a.to) + ")");
  }

  const std::size_t slots = static_cast<std::size_t>(nv) * species_count_;
  out_offset_.assign(slots + 1, 0);
  in_offset_.assign(slots + 1, 0);
  out_rate_.assign(slots, 0.0);
  mobile_.assign(species_count_, 0);
  for (const auto& e : edges_) {
    ++out_offset_[static_cast<std::size_t>(e.from) * species_count_ + e.species + 1];
    ++in_offset_[static_cast<std::size_t>(e.to) * species_count_ + e.species + 1];
    out_rate_[static_cast<std::size_t>(e.from) * species_count_ + e.species] += e.rate;
    mobile_[e.species] = 1;
  }
  std::partial_sum(out_offset_.begin(), out_offset_.end(), out_offset_.begin());
  std::partial_sum(in_offset_.begin(), in_offset_.end(), in_offset_.begin());
  in_index_.assign(edges_.size(), 0);
  std::vector<std::size_t> fill(in_offset_.begin(), in_offset_.end() - 1);
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    const auto& e = edges_[k];
    in_index_[fill[static_cast<std::size_t>(e.to) * species_count_ + e.species]++] = static_cast<int>(k);
  }

  std::set<std::pair<int, int>> pairs;
  for (const auto& e : edges_) pairs.emplace(std::min(e.from, e.to), std::max(e.from, e.to));
  connections_ = static_cast<int>(pairs.size());
}

std::vector<std::vector<int>> MeshGraph::neighbours() const {
  std::vector<std::vector<int>> adj(voxel_count());
  for (const auto& e : edges_) {
    adj[e.from].push_back(e.to);
    adj[e.to].push_back(e.from);
  }
  for (auto& a : adj) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
  return adj;
}

int MeshGraph::hop_diameter() const {
  const auto adj = neighbours();
  int diameter = 0;
  std::vector<int> depth(voxel_count());
  for (int src = 0; src < voxel_count(); ++src) {
    std::fill(depth.begin(), depth.end(), -1);
    std::queue<int> q;
    q.push(src);
    depth[src] = 0;
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      diameter = std::max(diameter, depth[u]);
      for (int v : adj[u])
        if (depth[v] < 0) {
          depth[v] = depth[u] + 1;
          q.push(v);
        }
    }
  }
  return diameter;
}

MeshGraph MeshGraph::restricted(int species, const std::vector<int>& allowed) const {
  std::vector<char> ok(voxel_count(), 0);
  for (int v : allowed) {
    if (v < 0 || v >= voxel_count()) throw InvalidArgument("subdomain voxel index out of range");
    ok[v] = 1;
  }
  std::vector<DiffusionEdge> kept;
  kept.reserve(edges_.size());
  for (const auto& e : edges_)
    if (e.species != species || (ok[e.from] && ok[e.to])) kept.push_back(e);
  return MeshGraph(volumes_, std::move(kept), species_count_);
}

namespace {

std::vector<int> checked_dims(std::span<const int> dims) {
  if (dims.empty() || dims.size() > 3) throw InvalidArgument("Cartesian mesh must have 1 to 3 dimensions");
  std::vector<int> d(dims.begin(), dims.end());
  for (int n : d)
    if (n < 1) throw InvalidArgument("Cartesian dims must all be >= 1");
  d.resize(3, 1);
  return d;
}

}  // namespace

MeshGraph build_cartesian_mesh(std::span<const int> dims, double h, const SpeciesSet& species) {
  if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("voxel side length h must be positive");
  const auto d = checked_dims(dims);
  const int nx = d[0], ny = d[1], nz = d[2];
  const int nv = nx * ny * nz;
  const double volume = std::pow(h, static_cast<double>(dims.size()));
  auto index = [&](int x, int y, int z) { return x + nx * (y + ny * z); };

  std::vector<DiffusionEdge> edges;
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) {
        const int i = index(x, y, z);
        const int nbr[3] = {x + 1 < nx ? index(x + 1, y, z) : -1, y + 1 < ny ? index(x, y + 1, z) : -1,
                            z + 1 < nz ? index(x, y, z + 1) : -1};
        for (int j : nbr) {
          if (j < 0) continue;
          for (int s = 0; s < species.size(); ++s) {
            if (species.gamma[s] == 0.0) continue;
            const double rate = species.gamma[s] / (h * h);
            edges.push_back({i, j, s, rate});
            edges.push_back({j, i, s, rate});
          }
        }
      }
  return MeshGraph(std::vector<double>(nv, volume), std::move(edges), species.size());
}

std::vector<int> cartesian_boundary_voxels(std::span<const int> dims) {
  const auto d = checked_dims(dims);
  const std::size_t used = dims.size();
  std::vector<int> out;
  for (int z = 0; z < d[2]; ++z)
    for (int y = 0; y < d[1]; ++y)
      for (int x = 0; x < d[0]; ++x) {
        const int c[3] = {x, y, z};
        bool edge = false;
        for (std::size_t a = 0; a < used; ++a) edge = edge || c[a] == 0 || c[a] == d[a] - 1;
        if (edge) out.push_back(x + d[0] * (y + d[1] * z));
      }
  return out;
}

// -------------------------------------------------------------- StateMatrix

StateMatrix::StateMatrix(int voxels, int species, std::vector<Count> data)
    : nv_(voxels), ns_(species), data_(std::move(data)) {
  if (data_.size() != static_cast<std::size_t>(voxels) * species)
    throw InvalidArgument("state data size does not match N_v x N_s");
}

Count StateMatrix::species_total(int s) const {
  Count t = 0;
  for (int i = 0; i < nv_; ++i) t += (*this)(i, s);
  return t;
}

Count StateMatrix::total() const { return std::accumulate(data_.begin(), data_.end(), Count{0}); }

bool StateMatrix::nonnegative() const {
  return std::all_of(data_.begin(), data_.end(), [](Count c) { return c >= 0; });
}

void apply_reaction(StateMatrix& x, int voxel, const Reaction& r) {
  auto row = x.row(voxel);
  for (int s = 0; s < x.species(); ++s)
    if (row[s] + r.stoichiometry[s] < 0) {
      std::ostringstream msg;
      msg << "reaction '" << r.name << "' in voxel " << voxel << " would make species " << s << " negative";
      throw NegativePopulation(msg.str());
    }
  for (int s = 0; s < x.species(); ++s) row[s] += r.stoichiometry[s];
}

void apply_diffusion_jump(StateMatrix& x, const DiffusionEdge& e) {
  if (x(e.from, e.species) < 1) {
    std::ostringstream msg;
    msg << "diffusion jump from empty voxel " << e.from << " (species " << e.species << ")";
    throw NegativePopulation(msg.str());
  }
  --x(e.from, e.species);
  ++x(e.to, e.species);
}

// -------------------------------------------------------------- ModelSystem

ModelSystem::ModelSystem(SpeciesSet species, std::vector<Reaction> reactions, MeshGraph mesh, StateMatrix initial,
                         double end_time, double output_interval)
    : species_(std::move(species)),
      reactions_(std::move(reactions)),
      mesh_(std::move(mesh)),
      initial_(std::move(initial)),
      end_time_(end_time),
      output_interval_(output_interval) {
  const int ns = species_.size();
  const int nv = mesh_.voxel_count();
  if (mesh_.species_count() != ns) throw InvalidArgument("mesh species count does not match species set");
  if (initial_.voxels() != nv || initial_.species() != ns)
    throw InvalidArgument("initial state dimensions do not match mesh and species");
  if (!initial_.nonnegative()) throw InvalidArgument("initial state has negative entries");
  if (!(end_time_ > 0.0) || !std::isfinite(end_time_)) throw InvalidArgument("end_time must be positive");
  if (!(output_interval_ > 0.0) || !std::isfinite(output_interval_))
    throw InvalidArgument("output_interval must be positive");

  for (const auto& r : reactions_) {
    if (static_cast<int>(r.stoichiometry.size()) != ns)
      throw InvalidArgument("reaction '" + r.name + "' stoichiometry has wrong length");
    if (!(r.rate_constant >= 0.0) || !std::isfinite(r.rate_constant))
      throw InvalidArgument("reaction '" + r.name + "' rate constant must be finite and >= 0");
    std::vector<int> need(ns, 0);
    for (const auto& re : r.reactants) {
      if (re.species < 0 || re.species >= ns) throw InvalidArgument("reaction '" + r.name + "' reactant out of range");
      if (re.order < 1) throw InvalidArgument("reaction '" + r.name + "' reactant order must be >= 1");
      need[re.species] += re.order;
    }
    for (int s = 0; s < ns; ++s)
      if (r.stoichiometry[s] < 0 && need[s] < -r.stoichiometry[s])
        throw InvalidArgument("reaction '" + r.name + "' consumes more of species " + species_.names[s] +
                              " than its reactants guarantee");
    if (r.kind == PropensityKind::mass_action) {
      if (r.order() > 2) throw InvalidArgument("mass-action reaction '" + r.name + "' has order > 2");
    } else {
      if (r.driver < 0 || r.driver >= ns) throw InvalidArgument("tabulated reaction '" + r.name + "' needs a driver");
      if (r.table.empty()) throw InvalidArgument("tabulated reaction '" + r.name + "' has an empty table");
      for (double v : r.table)
        if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("tabulated propensities must be >= 0");
    }
    for (int v : r.voxels)
      if (v < 0 || v >= nv) throw InvalidArgument("reaction '" + r.name + "' voxel index out of range");
  }

  k_eff_.assign(reactions_.size() * static_cast<std::size_t>(nv), 0.0);
  for (std::size_t r = 0; r < reactions_.size(); ++r) {
    const auto& rx = reactions_[r];
    std::vector<char> active(nv, rx.voxels.empty() ? 1 : 0);
    for (int v : rx.voxels) active[v] = 1;
    for (int i = 0; i < nv; ++i) {
      if (!active[i]) continue;
      double k = rx.rate_constant;
      if (rx.kind == PropensityKind::mass_action && rx.order() == 2) k /= mesh_.volume(i);
      k_eff_[r * nv + i] = k;
    }
  }
}

std::vector<double> ModelSystem::sample_times() const {
  std::vector<double> t;
  const auto n = static_cast<long>(std::floor(end_time_ / output_interval_ * (1.0 + 1e-12)));
  for (long k = 0; k <= n; ++k) t.push_back(std::min(end_time_, static_cast<double>(k) * output_interval_));
  if (t.back() < end_time_) t.push_back(end_time_);
  return t;
}

ModelSystem ModelSystem::with_initial_state(StateMatrix x) const {
  return ModelSystem(species_, reactions_, mesh_, std::move(x), end_time_, output_interval_);
}

ModelSystem ModelSystem::with_end_time(double end_time, double output_interval) const {
  return ModelSystem(species_, reactions_, mesh_, initial_, end_time, output_interval);
}

}  // namespace rdme
