#pragma once

#include <vector>

#include "rdme/model.hpp"

namespace testing_helpers {

using namespace rdme;

inline Reaction mass_action(std::string name, double k, std::vector<Reactant> reactants, std::vector<int> stoich,
                            std::vector<int> voxels = {}) {
  Reaction r;
  r.name = std::move(name);
  r.rate_constant = k;
  r.reactants = std::move(reactants);
  r.stoichiometry = std::move(stoich);
  r.voxels = std::move(voxels);
  return r;
}

// Chain of `n` unit-volume voxels with rate d both ways for every species.
inline MeshGraph chain(int n, int species, double d, std::vector<double> volumes = {}) {
  std::vector<DiffusionEdge> edges;
  for (int s = 0; s < species; ++s)
    for (int i = 0; i + 1 < n; ++i) {
      edges.push_back({i, i + 1, s, d});
      edges.push_back({i + 1, i, s, d});
    }
  if (volumes.empty()) volumes.assign(n, 1.0);
  return MeshGraph(std::move(volumes), std::move(edges), species);
}

inline ModelSystem make_model(std::vector<std::string> names, std::vector<Reaction> reactions, MeshGraph mesh,
                              std::vector<Count> x0, double end_time = 1.0, double interval = 1.0) {
  const int ns = static_cast<int>(names.size());
  SpeciesSet sp(std::move(names), std::vector<double>(ns, 0.0));
  const int nv = mesh.voxel_count();
  return ModelSystem(std::move(sp), std::move(reactions), std::move(mesh), StateMatrix(nv, ns, std::move(x0)),
                     end_time, interval);
}

// Two unit voxels, d = 1 both ways, A -> 0 with rate 1 in voxel 0 only.
inline ModelSystem hetero_degrade(std::vector<Count> x0 = {3, 2}) {
  return make_model({"A"}, {mass_action("deg", 1.0, {{0, 1}}, {-1}, {0})}, chain(2, 1, 1.0), std::move(x0));
}

}  // namespace testing_helpers
