#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <optional>
#include <string>
#include <vector>

#include "rdme/model.hpp"
#include "rdme/parallel.hpp"
#include "rdme/rng.hpp"

namespace rdme {

/// Single-molecule occupancy distribution after dt for a molecule of
/// `species` starting in `origin`. `support` is sorted by descending
/// probability; `cdf` includes the residual, which is credited to the origin.
struct DiffusionTable {
  int origin = 0;
  int species = 0;
  int hop_radius = 0;
  std::vector<int> support;
  std::vector<double> prob;
  double residual = 0.0;  // 1 - sum(prob): absorbed plus Poisson-tail mass
  std::vector<double> cdf;
  // Walker alias table over the same weights, for O(1) draws.
  std::vector<double> alias_cut;
  std::vector<int> alias;
};

struct TableParams {
  double dt = 0.0;
  int hop_radius = 3;
  double table_tol = 5e-3;
  double poisson_tol = 1e-12;
};

class TableSet {
 public:
  TableSet(TableParams params, std::uint64_t mesh_hash, int voxels, int species, std::vector<DiffusionTable> tables);

  const TableParams& params() const { return params_; }
  std::uint64_t mesh_hash() const { return mesh_hash_; }
  int voxels() const { return voxels_; }
  int species() const { return species_; }
  // nullptr when no table exists for (origin, species).
  const DiffusionTable* find(int origin, int species) const;
  const std::vector<DiffusionTable>& tables() const { return tables_; }
  double max_residual() const;

  friend bool operator==(const TableSet& a, const TableSet& b);

 private:
  TableParams params_;
  std::uint64_t mesh_hash_ = 0;
  int voxels_ = 0;
  int species_ = 0;
  std::vector<DiffusionTable> tables_;
  std::vector<int> slot_;
};

std::uint64_t mesh_hash(const MeshGraph& mesh);

// Uniformization of the single-molecule generator restricted to the
// hop-radius neighbourhood of `origin`, with an absorbing exterior.
DiffusionTable build_table(const MeshGraph& mesh, int origin, int species, double dt, int hop_radius,
                           double poisson_tol);

// Tables for every (voxel, mobile species). A table whose residual exceeds
// table_tol is rebuilt at doubled radius until it reaches the whole
// component, where only the Poisson tail remains.
TableSet build_tables(const MeshGraph& mesh, const TableParams& params, ExecPolicy policy = ExecPolicy::parallel);

struct StepContext {
  std::uint64_t seed = 0;
  std::uint64_t trajectory = 0;
  std::uint64_t step = 0;
};

// Moves every molecule of every mobile species to a destination drawn from
// its origin table. Counts up to this size are sampled molecule by
// molecule; larger ones by binomial splitting over the support.
inline constexpr Count kPerMoleculeLimit = 24;
void dfsp_diffusion_step(StateMatrix& x, const MeshGraph& mesh, const TableSet& tables, const StepContext& ctx,
                         ExecPolicy policy = ExecPolicy::parallel);

/// Keeps table sets keyed by (dt quantized to 1e-12 relative, hop radius,
/// tolerance) so revisited step sizes reuse their tables. Safe to share
/// between threads.
class TableCache {
 public:
  explicit TableCache(std::size_t capacity = 32) : capacity_(capacity) {}

  std::shared_ptr<const TableSet> get(const MeshGraph& mesh, const TableParams& params, ExecPolicy policy);
  std::size_t builds() const;
  std::size_t hits() const;
  std::size_t size() const;

 private:
  using Key = std::tuple<std::int64_t, int, std::int64_t>;
  std::size_t capacity_;
  mutable std::mutex mu_;
  std::map<Key, std::pair<std::uint64_t, std::shared_ptr<const TableSet>>> entries_;
  std::uint64_t clock_ = 0;
  std::size_t builds_ = 0;
  std::size_t hits_ = 0;
};

void save_tables(const std::string& path, const TableSet& tables);
// Throws ConfigurationError when the file was built for a different mesh.
TableSet load_tables(const std::string& path, const MeshGraph& mesh);

}  // namespace rdme
