#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rdme {

using Count = std::int64_t;

struct SpeciesSet {
  std::vector<std::string> names;
  std::vector<double> gamma;  // diffusion constants, length^2 / time

  SpeciesSet() = default;
  SpeciesSet(std::vector<std::string> n, std::vector<double> g);

  int size() const { return static_cast<int>(names.size()); }
  std::optional<int> index_of(const std::string& name) const;
};

enum class PropensityKind { mass_action, tabulated };

struct Reactant {
  int species = 0;
  int order = 1;
};

/// A reaction channel. Mass action uses the falling-factorial product of
/// its reactants; the tabulated kind looks `table[x_driver]` up instead and
/// uses `reactants` only to gate on availability.
struct Reaction {
  std::string name;
  std::vector<int> stoichiometry;  // change vector n_r, length N_s
  std::vector<Reactant> reactants;
  double rate_constant = 0.0;
  PropensityKind kind = PropensityKind::mass_action;
  int driver = -1;
  std::vector<double> table;
  std::vector<int> voxels;  // empty: active everywhere

  int order() const;
  bool depends_on(int species) const;
};

struct DiffusionEdge {
  int from = 0;
  int to = 0;
  int species = 0;
  double rate = 0.0;  // d_ijs, 1/time
};

/// Voxels plus directed per-species jump edges. Immutable once built; the
/// adjacency is kept sorted by (from, species, to) with a CSR offset table
/// so out- and in-neighbour scans are O(degree).
class MeshGraph {
 public:
  MeshGraph() = default;
  MeshGraph(std::vector<double> volumes, std::vector<DiffusionEdge> edges, int species_count);

  int voxel_count() const { return static_cast<int>(volumes_.size()); }
  int species_count() const { return species_count_; }
  std::span<const double> volumes() const { return volumes_; }
  double volume(int i) const { return volumes_[i]; }

  std::span<const DiffusionEdge> edges() const { return edges_; }
  std::span<const DiffusionEdge> out_edges(int voxel, int species) const {
    const std::size_t slot = static_cast<std::size_t>(voxel) * species_count_ + species;
    return {edges_.data() + out_offset_[slot], out_offset_[slot + 1] - out_offset_[slot]};
  }
  // In-edges are stored as indices into edges().
  std::span<const int> in_edges(int voxel, int species) const {
    const std::size_t slot = static_cast<std::size_t>(voxel) * species_count_ + species;
    return {in_index_.data() + in_offset_[slot], in_offset_[slot + 1] - in_offset_[slot]};
  }

  // Sum of d_ijs over j.
  double out_rate(int voxel, int species) const { return out_rate_[voxel * species_count_ + species]; }
  bool species_mobile(int species) const { return mobile_[species] != 0; }

  // Number of unordered voxel pairs joined by at least one edge.
  int connection_count() const { return connections_; }
  // Hop diameter of the largest connected component, over all species' edges.
  int hop_diameter() const;
  std::vector<std::vector<int>> neighbours() const;

  // Removes every edge of `species` that touches a voxel outside `allowed`.
  MeshGraph restricted(int species, const std::vector<int>& allowed) const;

 private:
  std::vector<double> volumes_;
  std::vector<DiffusionEdge> edges_;
  int species_count_ = 0;
  std::vector<std::size_t> out_offset_;
  std::vector<int> in_index_;
  std::vector<std::size_t> in_offset_;
  std::vector<double> out_rate_;
  std::vector<char> mobile_;
  int connections_ = 0;
};

MeshGraph build_cartesian_mesh(std::span<const int> dims, double h, const SpeciesSet& species);
// Voxels on the outer surface of a Cartesian grid.
std::vector<int> cartesian_boundary_voxels(std::span<const int> dims);

/// N_v x N_s copy numbers, row-major by voxel.
class StateMatrix {
 public:
  StateMatrix() = default;
  StateMatrix(int voxels, int species, Count fill = 0)
      : nv_(voxels), ns_(species), data_(static_cast<std::size_t>(voxels) * species, fill) {}
  StateMatrix(int voxels, int species, std::vector<Count> data);

  int voxels() const { return nv_; }
  int species() const { return ns_; }

  Count& operator()(int i, int s) { return data_[static_cast<std::size_t>(i) * ns_ + s]; }
  Count operator()(int i, int s) const { return data_[static_cast<std::size_t>(i) * ns_ + s]; }
  std::span<Count> row(int i) { return {data_.data() + static_cast<std::size_t>(i) * ns_, static_cast<std::size_t>(ns_)}; }
  std::span<const Count> row(int i) const {
    return {data_.data() + static_cast<std::size_t>(i) * ns_, static_cast<std::size_t>(ns_)};
  }
  std::span<const Count> data() const { return data_; }
  std::span<Count> data() { return data_; }

  Count species_total(int s) const;
  Count total() const;
  bool nonnegative() const;

  friend bool operator==(const StateMatrix&, const StateMatrix&) = default;

 private:
  int nv_ = 0;
  int ns_ = 0;
  std::vector<Count> data_;
};

// In-place updates with strong exception guarantee.
void apply_reaction(StateMatrix& x, int voxel, const Reaction& r);
void apply_diffusion_jump(StateMatrix& x, const DiffusionEdge& e);

/// The complete simulation problem. Rate constants are resolved per voxel
/// at construction: inactive voxels get 0 and bimolecular constants are
/// divided by the voxel volume so propensities are in copy-number units.
class ModelSystem {
 public:
  ModelSystem(SpeciesSet species, std::vector<Reaction> reactions, MeshGraph mesh, StateMatrix initial,
              double end_time, double output_interval);

  const SpeciesSet& species() const { return species_; }
  const std::vector<Reaction>& reactions() const { return reactions_; }
  const MeshGraph& mesh() const { return mesh_; }
  const StateMatrix& initial_state() const { return initial_; }
  double end_time() const { return end_time_; }
  double output_interval() const { return output_interval_; }

  int voxel_count() const { return mesh_.voxel_count(); }
  int species_count() const { return species_.size(); }
  int reaction_count() const { return static_cast<int>(reactions_.size()); }

  double rate(int voxel, int reaction) const { return k_eff_[static_cast<std::size_t>(reaction) * voxel_count() + voxel]; }

  std::vector<double> sample_times() const;
  ModelSystem with_initial_state(StateMatrix x) const;
  ModelSystem with_end_time(double end_time, double output_interval) const;

 private:
  SpeciesSet species_;
  std::vector<Reaction> reactions_;
  MeshGraph mesh_;
  StateMatrix initial_;
  double end_time_;
  double output_interval_;
  std::vector<double> k_eff_;
};

}  // namespace rdme
