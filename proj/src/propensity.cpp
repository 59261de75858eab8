#include "rdme/propensity.hpp"

#include <algorithm>

namespace rdme {

double evaluate(std::span<const Count> row, const Reaction& r, double k, int shifted, Count shift) {
  if (k == 0.0) return 0.0;
  auto at = [&](int s) { return row[s] + (s == shifted ? shift : 0); };
  for (int s = 0; s < static_cast<int>(row.size()); ++s)
    if (at(s) < 0) return 0.0;

  if (r.kind == PropensityKind::tabulated) {
    for (const auto& re : r.reactants)
      if (at(re.species) < re.order) return 0.0;
    const auto n = static_cast<std::size_t>(at(r.driver));
    return k * r.table[std::min(n, r.table.size() - 1)];
  }

  double a = k;
  for (const auto& re : r.reactants) {
    const Count n = at(re.species);
    for (int o = 0; o < re.order; ++o) a *= static_cast<double>(n - o);
  }
  return a > 0.0 ? a : 0.0;
}

double total_reaction_rate(const ModelSystem& m, const StateMatrix& x) {
  double a0 = 0.0;
  for (int i = 0; i < m.voxel_count(); ++i)
    for (int r = 0; r < m.reaction_count(); ++r) a0 += propensity(m, i, r, x.row(i));
  return a0;
}

double total_diffusion_rate(const MeshGraph& mesh, const StateMatrix& x) {
  double d0 = 0.0;
  for (const auto& e : mesh.edges()) d0 += e.rate * static_cast<double>(x(e.from, e.species));
  return d0;
}

double delta_a_minus(const ModelSystem& m, int voxel, int r, int s, const StateMatrix& x) {
  const auto row = x.row(voxel);
  return propensity(m, voxel, r, row, s, -1) - propensity(m, voxel, r, row);
}

double delta_a_plus(const ModelSystem& m, int voxel, int r, int s, const StateMatrix& x) {
  const auto row = x.row(voxel);
  return propensity(m, voxel, r, row, s, +1) - propensity(m, voxel, r, row);
}

Field reaction_rate_field(const ModelSystem& m, const StateMatrix& x) {
  Field R(m.voxel_count(), m.species_count());
  for (int i = 0; i < m.voxel_count(); ++i)
    for (int r = 0; r < m.reaction_count(); ++r) {
      const double a = propensity(m, i, r, x.row(i));
      if (a == 0.0) continue;
      const auto& n = m.reactions()[r].stoichiometry;
      for (int s = 0; s < m.species_count(); ++s) R(i, s) += n[s] * a;
    }
  return R;
}

double sigma(const ModelSystem& m, int voxel, int r, int s, const StateMatrix& x) {
  const auto& mesh = m.mesh();
  double inflow = 0.0;
  for (int k : mesh.in_edges(voxel, s)) {
    const auto& e = mesh.edges()[k];
    inflow += e.rate * static_cast<double>(x(e.from, s));
  }
  const double outflow = static_cast<double>(x(voxel, s)) * mesh.out_rate(voxel, s);
  double value = 0.0;
  if (outflow != 0.0) value += delta_a_minus(m, voxel, r, s, x) * outflow;
  if (inflow != 0.0) value += delta_a_plus(m, voxel, r, s, x) * inflow;
  return value;
}

}  // namespace rdme
