#include "rdme/dfsp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

#include "rdme/errors.hpp"

namespace rdme {

namespace {

void finish_table(DiffusionTable& t) {
  std::vector<std::size_t> order(t.support.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (t.prob[a] != t.prob[b]) return t.prob[a] > t.prob[b];
    return t.support[a] < t.support[b];
  });
  std::vector<int> support;
  std::vector<double> prob;
  for (std::size_t k : order) {
    support.push_back(t.support[k]);
    prob.push_back(t.prob[k]);
  }
  t.support = std::move(support);
  t.prob = std::move(prob);

  double sum = 0.0;
  for (double p : t.prob) sum += p;
  t.residual = std::max(0.0, 1.0 - sum);

  t.cdf.resize(t.prob.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < t.prob.size(); ++k) {
    acc += t.prob[k] + (t.support[k] == t.origin ? t.residual : 0.0);
    t.cdf[k] = acc;
  }
  if (!t.cdf.empty()) t.cdf.back() = 1.0;

  // Vose's construction.
  const std::size_t m = t.prob.size();
  t.alias_cut.assign(m, 1.0);
  t.alias.resize(m);
  std::iota(t.alias.begin(), t.alias.end(), 0);
  std::vector<double> scaled(m);
  std::vector<std::size_t> small, large;
  for (std::size_t k = 0; k < m; ++k) {
    scaled[k] = (t.prob[k] + (t.support[k] == t.origin ? t.residual : 0.0)) * static_cast<double>(m);
    (scaled[k] < 1.0 ? small : large).push_back(k);
  }
  while (!small.empty() && !large.empty()) {
    const std::size_t a = small.back(), b = large.back();
    small.pop_back();
    t.alias_cut[a] = scaled[a];
    t.alias[a] = static_cast<int>(b);
    scaled[b] -= 1.0 - scaled[a];
    if (scaled[b] < 1.0) {
      large.pop_back();
      small.push_back(b);
    }
  }
}

double weight(const DiffusionTable& t, std::size_t k) {
  return t.prob[k] + (t.support[k] == t.origin ? t.residual : 0.0);
}

}  // namespace

// ------------------------------------------------------------------ TableSet

TableSet::TableSet(TableParams params, std::uint64_t hash, int voxels, int species, std::vector<DiffusionTable> tables)
    : params_(params), mesh_hash_(hash), voxels_(voxels), species_(species), tables_(std::move(tables)) {
  slot_.assign(static_cast<std::size_t>(voxels_) * species_, -1);
  for (std::size_t k = 0; k < tables_.size(); ++k) {
    const auto& t = tables_[k];
    if (t.origin < 0 || t.origin >= voxels_ || t.species < 0 || t.species >= species_)
      throw ConfigurationError("diffusion table index out of range");
    slot_[static_cast<std::size_t>(t.origin) * species_ + t.species] = static_cast<int>(k);
  }
}

const DiffusionTable* TableSet::find(int origin, int species) const {
  const int k = slot_[static_cast<std::size_t>(origin) * species_ + species];
  return k < 0 ? nullptr : &tables_[k];
}

double TableSet::max_residual() const {
  double r = 0.0;
  for (const auto& t : tables_) r = std::max(r, t.residual);
  return r;
}

bool operator==(const TableSet& a, const TableSet& b) {
  if (a.mesh_hash_ != b.mesh_hash_ || a.tables_.size() != b.tables_.size()) return false;
  for (std::size_t k = 0; k < a.tables_.size(); ++k) {
    const auto& x = a.tables_[k];
    const auto& y = b.tables_[k];
    if (x.origin != y.origin || x.species != y.species || x.support != y.support || x.prob != y.prob ||
        x.residual != y.residual || x.cdf != y.cdf)
      return false;
  }
  return true;
}

std::uint64_t mesh_hash(const MeshGraph& mesh) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  mix(static_cast<std::uint64_t>(mesh.voxel_count()));
  mix(static_cast<std::uint64_t>(mesh.species_count()));
  for (double v : mesh.volumes()) mix(std::bit_cast<std::uint64_t>(v));
  for (const auto& e : mesh.edges()) {
    mix(static_cast<std::uint64_t>(e.from));
    mix(static_cast<std::uint64_t>(e.to));
    mix(static_cast<std::uint64_t>(e.species));
    mix(std::bit_cast<std::uint64_t>(e.rate));
  }
  return h;
}

// -------------------------------------------------------------- table build

namespace {

struct Neighbourhood {
  std::vector<int> nodes;  // global voxel ids in BFS order, nodes[0] == origin
  std::vector<std::size_t> layer_end;  // nodes within d hops: [0, layer_end[d])
  bool whole_component = false;
};

Neighbourhood hop_ball(const MeshGraph& mesh, int origin, int species, int radius, std::vector<int>& local) {
  Neighbourhood nb;
  nb.nodes.push_back(origin);
  local[origin] = 0;
  nb.layer_end.push_back(1);
  std::size_t frontier_begin = 0;
  for (int depth = 0; depth < radius; ++depth) {
    const std::size_t frontier_end = nb.nodes.size();
    for (std::size_t k = frontier_begin; k < frontier_end; ++k)
      for (const auto& e : mesh.out_edges(nb.nodes[k], species))
        if (local[e.to] < 0) {
          local[e.to] = static_cast<int>(nb.nodes.size());
          nb.nodes.push_back(e.to);
        }
    frontier_begin = frontier_end;
    nb.layer_end.push_back(nb.nodes.size());
    if (frontier_begin == nb.nodes.size()) break;
  }
  // Whole component iff no node has an edge leaving the ball.
  nb.whole_component = true;
  for (int u : nb.nodes)
    for (const auto& e : mesh.out_edges(u, species))
      if (local[e.to] < 0) {
        nb.whole_component = false;
        return nb;
      }
  return nb;
}

}  // namespace

DiffusionTable build_table(const MeshGraph& mesh, int origin, int species, double dt, int hop_radius,
                           double poisson_tol) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("table dt must be positive");
  if (hop_radius < 1) throw InvalidArgument("hop radius must be >= 1");
  DiffusionTable table;
  table.origin = origin;
  table.species = species;
  table.hop_radius = hop_radius;

  std::vector<int> local(mesh.voxel_count(), -1);
  const auto nb = hop_ball(mesh, origin, species, hop_radius, local);
  const std::size_t n = nb.nodes.size();

  std::vector<double> exit(n);
  double lambda = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    exit[k] = mesh.out_rate(nb.nodes[k], species);
    lambda = std::max(lambda, exit[k]);
  }
  if (!std::isfinite(lambda)) throw NumericError("non-finite jump rate in table build");

  std::vector<double> v(n, 0.0);
  v[0] = 1.0;
  if (lambda > 0.0) {
    // Split into substeps with lambda*tau <= 16 so exp(-lambda*tau) stays
    // far from underflow; each substep gets an equal share of the tail budget.
    const double q_total = lambda * dt;
    const int substeps = std::max(1, static_cast<int>(std::ceil(q_total / 16.0)));
    const double q = q_total / substeps;
    const double tail = std::max(poisson_tol / substeps, 1e-15);
    std::vector<double> term(n), next(n, 0.0), out(n);
    // During the first substep the j-th term is supported on the j-hop
    // layer, so the sweeps stop there.
    auto reach = [&](int sub, int j) {
      if (sub > 0) return n;
      return nb.layer_end[std::min<std::size_t>(j, nb.layer_end.size() - 1)];
    };
    for (int sub = 0; sub < substeps; ++sub) {
      double w = std::exp(-q);
      double cum = w;
      term = v;
      for (std::size_t k = 0; k < n; ++k) out[k] = w * term[k];
      for (int j = 1; 1.0 - cum > tail && j < 100000; ++j) {
        const std::size_t src = reach(sub, j - 1), dst_end = reach(sub, j);
        for (std::size_t k = 0; k < dst_end; ++k) next[k] = k < src ? term[k] * (1.0 - exit[k] / lambda) : 0.0;
        for (std::size_t k = 0; k < src; ++k) {
          if (term[k] == 0.0) continue;
          for (const auto& e : mesh.out_edges(nb.nodes[k], species)) {
            const int dst = local[e.to];
            if (dst >= 0) next[dst] += term[k] * (e.rate / lambda);
          }
        }
        term.swap(next);
        w *= q / j;
        cum += w;
        for (std::size_t k = 0; k < dst_end; ++k) out[k] += w * term[k];
      }
      v = out;
    }
  }

  for (std::size_t k = 0; k < n; ++k)
    if (v[k] > 0.0) {
      table.support.push_back(nb.nodes[k]);
      table.prob.push_back(v[k]);
    }
  finish_table(table);
  return table;
}

TableSet build_tables(const MeshGraph& mesh, const TableParams& params, ExecPolicy policy) {
  if (!(params.dt > 0.0)) throw InvalidArgument("table dt must be positive");
  if (params.hop_radius < 1) throw InvalidArgument("hop radius must be >= 1");
  if (!(params.table_tol > 0.0 && params.table_tol < 1.0)) throw InvalidArgument("table_tol must be in (0, 1)");

  // Species with the same jump operator share their tables.
  const int ns = mesh.species_count();
  std::vector<int> rep(ns, -1);
  auto same_operator = [&](int a, int b) {
    for (int i = 0; i < mesh.voxel_count(); ++i) {
      const auto ea = mesh.out_edges(i, a), eb = mesh.out_edges(i, b);
      if (ea.size() != eb.size()) return false;
      for (std::size_t k = 0; k < ea.size(); ++k)
        if (ea[k].to != eb[k].to || ea[k].rate != eb[k].rate) return false;
    }
    return true;
  };
  for (int s = 0; s < ns; ++s) {
    if (!mesh.species_mobile(s)) continue;
    rep[s] = s;
    for (int r = 0; r < s; ++r)
      if (rep[r] == r && same_operator(r, s)) {
        rep[s] = r;
        break;
      }
  }

  std::vector<std::pair<int, int>> work;
  for (int i = 0; i < mesh.voxel_count(); ++i)
    for (int s = 0; s < ns; ++s)
      if (rep[s] == s) work.emplace_back(i, s);

  std::vector<DiffusionTable> built(work.size());
  std::vector<char> failed(work.size(), 0);
  const int cap = std::max(1, mesh.voxel_count());
  for_each_index(policy, static_cast<int>(work.size()), [&](int k) {
    const auto [i, s] = work[k];
    int radius = params.hop_radius;
    for (;;) {
      built[k] = build_table(mesh, i, s, params.dt, radius, params.poisson_tol);
      if (built[k].residual <= params.table_tol) break;
      std::vector<int> local(mesh.voxel_count(), -1);
      if (hop_ball(mesh, i, s, radius, local).whole_component || radius >= cap) {
        failed[k] = 1;
        break;
      }
      radius = std::min(2 * radius, cap);
    }
  });
  for (std::size_t k = 0; k < work.size(); ++k)
    if (failed[k])
      throw NumericError("diffusion table residual above tolerance at full radius (voxel " +
                         std::to_string(work[k].first) + ")");

  std::vector<DiffusionTable> tables;
  for (std::size_t k = 0; k < work.size(); ++k)
    for (int s = 0; s < ns; ++s)
      if (rep[s] == work[k].second) {
        tables.push_back(built[k]);
        tables.back().species = s;
      }
  return TableSet(params, mesh_hash(mesh), mesh.voxel_count(), mesh.species_count(), std::move(tables));
}

// ------------------------------------------------------------ sampling step

void dfsp_diffusion_step(StateMatrix& x, const MeshGraph& mesh, const TableSet& tables, const StepContext& ctx,
                         ExecPolicy policy) {
  const int nv = x.voxels();
  const int ns = x.species();
  if (tables.voxels() != nv || tables.species() != ns) throw ConfigurationError("diffusion tables do not match state");
  std::vector<int> mobile;
  for (int s = 0; s < ns; ++s)
    if (mesh.species_mobile(s)) mobile.push_back(s);
  for (int i = 0; i < nv; ++i)
    for (int s : mobile)
      if (x(i, s) > 0 && !tables.find(i, s))
        throw ConfigurationError("missing diffusion table for voxel " + std::to_string(i) + ", species " +
                                 std::to_string(s));

  const int nbuf = policy == ExecPolicy::serial ? 1 : std::max(1, max_threads());
  std::vector<std::vector<Count>> moved(nbuf, std::vector<Count>(static_cast<std::size_t>(nv) * ns, 0));

  for_each_index(policy, nv, [&](int i) {
    auto& out = moved[policy == ExecPolicy::serial ? 0 : thread_id()];
    Rng rng = make_stream({ctx.seed, ctx.trajectory, ctx.step, static_cast<std::uint64_t>(i), Phase::diffusion});
    for (int s : mobile) {
      Count n = x(i, s);
      if (n == 0) continue;
      const auto& t = *tables.find(i, s);
      const std::size_t m = t.support.size();
      if (n <= kPerMoleculeLimit) {
        for (Count c = 0; c < n; ++c) {
          const double u = rng.uniform() * static_cast<double>(m);
          std::size_t k = std::min(static_cast<std::size_t>(u), m - 1);
          if (u - static_cast<double>(k) >= t.alias_cut[k]) k = static_cast<std::size_t>(t.alias[k]);
          ++out[static_cast<std::size_t>(t.support[k]) * ns + s];
        }
        continue;
      }
      double remaining_mass = 1.0;
      for (std::size_t k = 0; k < m && n > 0; ++k) {
        const double w = weight(t, k);
        Count c = n;
        if (k + 1 < m && remaining_mass > 0.0) {
          const double p = std::clamp(w / remaining_mass, 0.0, 1.0);
          if (p < 1.0) c = std::binomial_distribution<Count>(n, p)(rng);
        }
        out[static_cast<std::size_t>(t.support[k]) * ns + s] += c;
        n -= c;
        remaining_mass -= w;
      }
    }
  });

  for (int s : mobile)
    for (int i = 0; i < nv; ++i) x(i, s) = 0;
  for (const auto& buf : moved)
    for (std::size_t k = 0; k < buf.size(); ++k) x.data()[k] += buf[k];
}

// -------------------------------------------------------------------- cache

std::shared_ptr<const TableSet> TableCache::get(const MeshGraph& mesh, const TableParams& params, ExecPolicy policy) {
  const Key key{std::llround(std::log(params.dt) * 1e12), params.hop_radius,
                std::llround(std::log(params.table_tol) * 1e9)};
  std::lock_guard lock(mu_);
  ++clock_;
  if (auto it = entries_.find(key); it != entries_.end()) {
    it->second.first = clock_;
    ++hits_;
    return it->second.second;
  }
  auto tables = std::make_shared<const TableSet>(build_tables(mesh, params, policy));
  ++builds_;
  if (entries_.size() >= capacity_) {
    auto oldest = std::min_element(entries_.begin(), entries_.end(),
                                   [](const auto& a, const auto& b) { return a.second.first < b.second.first; });
    entries_.erase(oldest);
  }
  entries_.emplace(key, std::make_pair(clock_, tables));
  return tables;
}

std::size_t TableCache::builds() const {
  std::lock_guard lock(mu_);
  return builds_;
}

std::size_t TableCache::hits() const {
  std::lock_guard lock(mu_);
  return hits_;
}

std::size_t TableCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

// ---------------------------------------------------------------- table I/O

namespace {

constexpr char kMagic[8] = {'R', 'D', 'M', 'E', 'D', 'F', 'S', 'P'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw ConfigurationError("truncated diffusion table file");
  return v;
}

}  // namespace

void save_tables(const std::string& path, const TableSet& tables) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigurationError("cannot open '" + path + "' for writing");
  os.write(kMagic, sizeof kMagic);
  put(os, kVersion);
  put(os, tables.mesh_hash());
  const auto& p = tables.params();
  put(os, p.dt);
  put(os, static_cast<std::int32_t>(p.hop_radius));
  put(os, p.table_tol);
  put(os, p.poisson_tol);
  put(os, static_cast<std::int32_t>(tables.voxels()));
  put(os, static_cast<std::int32_t>(tables.species()));
  put(os, static_cast<std::uint64_t>(tables.tables().size()));
  for (const auto& t : tables.tables()) {
    put(os, static_cast<std::int32_t>(t.origin));
    put(os, static_cast<std::int32_t>(t.species));
    put(os, static_cast<std::int32_t>(t.hop_radius));
    put(os, static_cast<std::uint64_t>(t.support.size()));
    for (std::size_t k = 0; k < t.support.size(); ++k) {
      put(os, static_cast<std::int32_t>(t.support[k]));
      put(os, t.prob[k]);
    }
  }
  if (!os) throw ConfigurationError("failed writing '" + path + "'");
}

TableSet load_tables(const std::string& path, const MeshGraph& mesh) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigurationError("cannot open '" + path + "'");
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof magic) != 0) throw ConfigurationError("not a diffusion table file");
  if (get<std::uint32_t>(is) != kVersion) throw ConfigurationError("unsupported diffusion table version");
  const auto hash = get<std::uint64_t>(is);
  if (hash != mesh_hash(mesh)) throw ConfigurationError("diffusion tables were built for a different mesh");
  TableParams p;
  p.dt = get<double>(is);
  p.hop_radius = get<std::int32_t>(is);
  p.table_tol = get<double>(is);
  p.poisson_tol = get<double>(is);
  const int nv = get<std::int32_t>(is);
  const int ns = get<std::int32_t>(is);
  const auto count = get<std::uint64_t>(is);
  std::vector<DiffusionTable> tables(count);
  for (auto& t : tables) {
    t.origin = get<std::int32_t>(is);
    t.species = get<std::int32_t>(is);
    t.hop_radius = get<std::int32_t>(is);
    const auto m = get<std::uint64_t>(is);
    for (std::uint64_t k = 0; k < m; ++k) {
      const int v = get<std::int32_t>(is);
      if (v < 0 || v >= nv) throw ConfigurationError("diffusion table support out of range");
      t.support.push_back(v);
      t.prob.push_back(get<double>(is));
    }
    finish_table(t);
  }
  return TableSet(p, hash, nv, ns, std::move(tables));
}

}  // namespace rdme
