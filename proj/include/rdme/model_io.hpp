#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "rdme/controller.hpp"
#include "rdme/model.hpp"

namespace rdme {

/// A model plus the run settings stored alongside it.
struct ModelFile {
  ModelSystem model;
  std::uint64_t seed = 0;
  double dt = 0.01;  // fixed split step
  ControllerConfig controller;
  int hop_radius = 3;
  double table_tol = 5e-3;
};

// Throws ModelError with the offending key path on schema violations.
ModelFile parse_model(const nlohmann::json& doc);
ModelFile parse_model_text(const std::string& text);
ModelFile load_model_file(const std::string& path);

// Builtin templates by name; "mincde-3d-cartesian:n" picks the resolution
// of the 4n x n x n rod.
std::vector<std::string> builtin_names();
bool is_builtin(const std::string& name);
nlohmann::json builtin_json(const std::string& name);
ModelFile builtin_model(const std::string& name);
// A path to an existing file, else a builtin name.
ModelFile resolve_model(const std::string& spec);

// State file: CSV with header voxel,species,count; missing entries are 0.
StateMatrix load_state_csv(const std::string& path, const ModelSystem& m);

}  // namespace rdme
