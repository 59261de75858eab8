#pragma once

#include <span>
#include <vector>

#include "rdme/model.hpp"

namespace rdme {

/// Dense N_v x N_s real field (reaction drift, error estimates).
struct Field {
  int voxels = 0;
  int species = 0;
  std::vector<double> values;

  Field() = default;
  Field(int nv, int ns, double fill = 0.0) : voxels(nv), species(ns), values(static_cast<std::size_t>(nv) * ns, fill) {}

  double& operator()(int i, int s) { return values[static_cast<std::size_t>(i) * species + s]; }
  double operator()(int i, int s) const { return values[static_cast<std::size_t>(i) * species + s]; }
};

// Propensity of `r` with effective constant `k`, evaluated on `row` with
// `shift` added to species `shifted` (pass shifted = -1 for no probe).
// Rows with any negative entry have propensity 0.
double evaluate(std::span<const Count> row, const Reaction& r, double k, int shifted = -1, Count shift = 0);

inline double propensity(const ModelSystem& m, int voxel, int r, std::span<const Count> row, int shifted = -1,
                         Count shift = 0) {
  return evaluate(row, m.reactions()[r], m.rate(voxel, r), shifted, shift);
}

double total_reaction_rate(const ModelSystem& m, const StateMatrix& x);  // a_0
double total_diffusion_rate(const MeshGraph& mesh, const StateMatrix& x);  // d_0

// a_ir(x_i - e_s) - a_ir(x_i) and a_ir(x_i + e_s) - a_ir(x_i).
double delta_a_minus(const ModelSystem& m, int voxel, int r, int s, const StateMatrix& x);
double delta_a_plus(const ModelSystem& m, int voxel, int r, int s, const StateMatrix& x);

// R(x)_is = sum_r n_rs a_ir(x_i).
Field reaction_rate_field(const ModelSystem& m, const StateMatrix& x);

// sigma_irs' = da-(x_is') * x_is' * sum_j d_ijs' + da+ * sum_j d_jis' x_js'
double sigma(const ModelSystem& m, int voxel, int r, int s, const StateMatrix& x);

}  // namespace rdme
