#include "rdme/model_io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>

#include "rdme/errors.hpp"

namespace rdme {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ModelError(path + ": " + what);
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& path) {
  if (!j.is_object()) fail(path, "must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; }))
      fail(path + "." + it.key(), "unknown key");
}

double number(const json& j, const char* key, const std::string& path, std::optional<double> fallback = {}) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    fail(path + "." + key, "required");
  }
  const auto& v = j.at(key);
  if (!v.is_number()) fail(path + "." + key, "must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(path + "." + key, "must be finite");
  return d;
}

long long integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "must be an integer");
  return v.get<long long>();
}

int species_ref(const json& v, const SpeciesSet& sp, const std::string& path) {
  if (v.is_string()) {
    const auto s = sp.index_of(v.get<std::string>());
    if (!s) fail(path, "unknown species '" + v.get<std::string>() + "'");
    return *s;
  }
  const auto k = integer(v, path);
  if (k < 0 || k >= sp.size()) fail(path, "species index out of range");
  return static_cast<int>(k);
}

struct MeshSpec {
  std::vector<int> dims;  // empty for graph meshes
  double h = 1.0;
  std::optional<double> volume;
  int voxels = 0;
};

std::vector<int> voxel_list(const json& v, const MeshSpec& mesh, const std::string& path) {
  if (v.is_string()) {
    if (v.get<std::string>() != "boundary") fail(path, "expected \"boundary\" or a voxel list");
    if (mesh.dims.empty()) fail(path, "\"boundary\" needs a Cartesian mesh");
    return cartesian_boundary_voxels(mesh.dims);
  }
  if (!v.is_array()) fail(path, "expected \"boundary\" or a voxel list");
  std::vector<int> out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const auto i = integer(v[k], path + "[" + std::to_string(k) + "]");
    if (i < 0 || i >= mesh.voxels) fail(path, "voxel index out of range");
    out.push_back(static_cast<int>(i));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

MeshSpec mesh_spec(const json& j) {
  check_keys(j, {"cartesian", "graph"}, "mesh");
  if (j.size() != 1) fail("mesh", "needs exactly one of cartesian or graph");
  MeshSpec m;
  if (j.contains("cartesian")) {
    const auto& c = j.at("cartesian");
    check_keys(c, {"dims", "h", "volume"}, "mesh.cartesian");
    if (!c.contains("dims") || !c.at("dims").is_array() || c.at("dims").empty() || c.at("dims").size() > 3)
      fail("mesh.cartesian.dims", "must be an array of 1 to 3 sizes");
    m.voxels = 1;
    for (const auto& d : c.at("dims")) {
      const auto n = integer(d, "mesh.cartesian.dims");
      if (n < 1 || n > 1'000'000) fail("mesh.cartesian.dims", "sizes must be >= 1");
      m.dims.push_back(static_cast<int>(n));
      m.voxels *= static_cast<int>(n);
    }
    m.h = number(c, "h", "mesh.cartesian");
    if (!(m.h > 0.0)) fail("mesh.cartesian.h", "must be positive");
    if (c.contains("volume")) {
      m.volume = number(c, "volume", "mesh.cartesian");
      if (!(*m.volume > 0.0)) fail("mesh.cartesian.volume", "must be positive");
    }
  } else {
    const auto& g = j.at("graph");
    check_keys(g, {"volumes", "edges"}, "mesh.graph");
    if (!g.contains("volumes") || !g.at("volumes").is_array() || g.at("volumes").empty())
      fail("mesh.graph.volumes", "must be a non-empty array");
    m.voxels = static_cast<int>(g.at("volumes").size());
  }
  return m;
}

MeshGraph build_mesh(const json& j, const MeshSpec& spec, const SpeciesSet& sp) {
  try {
    if (!spec.dims.empty()) {
      MeshGraph base = build_cartesian_mesh(spec.dims, spec.h, sp);
      if (!spec.volume) return base;
      std::vector<DiffusionEdge> edges(base.edges().begin(), base.edges().end());
      return MeshGraph(std::vector<double>(spec.voxels, *spec.volume), std::move(edges), sp.size());
    }
    const auto& g = j.at("graph");
    std::vector<double> volumes;
    for (std::size_t k = 0; k < g.at("volumes").size(); ++k) {
      const auto& v = g.at("volumes")[k];
      if (!v.is_number()) fail("mesh.graph.volumes[" + std::to_string(k) + "]", "must be a number");
      volumes.push_back(v.get<double>());
    }
    std::vector<DiffusionEdge> edges;
    if (g.contains("edges")) {
      const auto& es = g.at("edges");
      if (!es.is_array()) fail("mesh.graph.edges", "must be an array");
      for (std::size_t k = 0; k < es.size(); ++k) {
        const std::string p = "mesh.graph.edges[" + std::to_string(k) + "]";
        const auto& e = es[k];
        if (!e.is_array() || e.size() != 4) fail(p, "must be [from, to, species, rate]");
        DiffusionEdge d;
        d.from = static_cast<int>(integer(e[0], p));
        d.to = static_cast<int>(integer(e[1], p));
        d.species = species_ref(e[2], sp, p);
        if (!e[3].is_number()) fail(p, "rate must be a number");
        d.rate = e[3].get<double>();
        edges.push_back(d);
      }
    }
    return MeshGraph(std::move(volumes), std::move(edges), sp.size());
  } catch (const InvalidArgument& e) {
    fail("mesh", e.what());
  }
}

std::map<int, int> species_counts(const json& j, const SpeciesSet& sp, const std::string& path) {
  if (!j.is_object()) fail(path, "must be an object of species: count");
  std::map<int, int> out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto s = sp.index_of(it.key());
    if (!s) fail(path + "." + it.key(), "unknown species");
    const auto n = integer(it.value(), path + "." + it.key());
    if (n < 0 || n > 1000) fail(path + "." + it.key(), "must be a small non-negative integer");
    out[*s] = static_cast<int>(n);
  }
  return out;
}

}  // namespace

ModelFile parse_model(const json& doc) {
  check_keys(doc, {"species", "reactions", "mesh", "simulation", "controller", "dfsp", "description"}, "model");
  if (!doc.contains("species") || !doc.at("species").is_array() || doc.at("species").empty())
    fail("species", "must be a non-empty array");
  if (!doc.contains("mesh")) fail("mesh", "required");
  if (!doc.contains("simulation")) fail("simulation", "required");

  const MeshSpec spec = mesh_spec(doc.at("mesh"));

  // Species.
  std::vector<std::string> names;
  std::vector<double> gamma;
  const auto& js = doc.at("species");
  for (std::size_t k = 0; k < js.size(); ++k) {
    const std::string p = "species[" + std::to_string(k) + "]";
    check_keys(js[k], {"name", "gamma", "initial", "diffusion_voxels"}, p);
    if (!js[k].contains("name") || !js[k].at("name").is_string()) fail(p + ".name", "must be a string");
    names.push_back(js[k].at("name").get<std::string>());
    gamma.push_back(number(js[k], "gamma", p, 0.0));
    if (gamma.back() < 0.0) fail(p + ".gamma", "must be >= 0");
  }
  SpeciesSet species;
  try {
    species = SpeciesSet(names, gamma);
  } catch (const InvalidArgument& e) {
    fail("species", e.what());
  }

  MeshGraph mesh = build_mesh(doc.at("mesh"), spec, species);
  StateMatrix x0(spec.voxels, species.size());
  for (std::size_t k = 0; k < js.size(); ++k) {
    const std::string p = "species[" + std::to_string(k) + "]";
    const int s = static_cast<int>(k);
    if (js[k].contains("diffusion_voxels"))
      mesh = mesh.restricted(s, voxel_list(js[k].at("diffusion_voxels"), spec, p + ".diffusion_voxels"));
    if (!js[k].contains("initial")) continue;
    const auto& init = js[k].at("initial");
    if (init.is_number_integer()) {
      const auto n = integer(init, p + ".initial");
      if (n < 0) fail(p + ".initial", "must be >= 0");
      for (int i = 0; i < spec.voxels; ++i) x0(i, s) = n;
    } else if (init.is_array()) {
      if (static_cast<int>(init.size()) != spec.voxels) fail(p + ".initial", "needs one count per voxel");
      for (int i = 0; i < spec.voxels; ++i) {
        const auto n = integer(init[i], p + ".initial");
        if (n < 0) fail(p + ".initial", "counts must be >= 0");
        x0(i, s) = n;
      }
    } else if (init.is_object()) {
      check_keys(init, {"total", "voxels"}, p + ".initial");
      if (!init.contains("total")) fail(p + ".initial.total", "required");
      const auto total = integer(init.at("total"), p + ".initial.total");
      if (total < 0) fail(p + ".initial.total", "must be >= 0");
      std::vector<int> where;
      if (init.contains("voxels")) {
        where = voxel_list(init.at("voxels"), spec, p + ".initial.voxels");
      } else {
        where.resize(spec.voxels);
        std::iota(where.begin(), where.end(), 0);
      }
      if (where.empty()) fail(p + ".initial.voxels", "must not be empty");
      const auto n = static_cast<Count>(where.size());
      for (Count c = 0; c < n; ++c) x0(where[c], s) = total / n + (c < total % n ? 1 : 0);
    } else {
      fail(p + ".initial", "must be an integer, a per-voxel array or {\"total\": N}");
    }
  }

  // Reactions.
  std::vector<Reaction> reactions;
  if (doc.contains("reactions")) {
    const auto& jr = doc.at("reactions");
    if (!jr.is_array()) fail("reactions", "must be an array");
    for (std::size_t k = 0; k < jr.size(); ++k) {
      const std::string p = "reactions[" + std::to_string(k) + "]";
      const auto& r = jr[k];
      check_keys(r, {"name", "rate", "reactants", "products", "stoichiometry", "voxels", "propensity"}, p);
      Reaction rx;
      rx.name = r.contains("name") && r.at("name").is_string() ? r.at("name").get<std::string>() : "r" + std::to_string(k);
      rx.rate_constant = number(r, "rate", p);
      if (rx.rate_constant < 0.0) fail(p + ".rate", "must be >= 0");
      const auto reactants = r.contains("reactants") ? species_counts(r.at("reactants"), species, p + ".reactants")
                                                     : std::map<int, int>{};
      for (const auto& [s, n] : reactants)
        if (n > 0) rx.reactants.push_back({s, n});
      rx.stoichiometry.assign(species.size(), 0);
      if (r.contains("stoichiometry")) {
        if (r.contains("products")) fail(p, "give products or stoichiometry, not both");
        const auto& st = r.at("stoichiometry");
        if (!st.is_object()) fail(p + ".stoichiometry", "must be an object of species: change");
        for (auto it = st.begin(); it != st.end(); ++it) {
          const auto s = species.index_of(it.key());
          if (!s) fail(p + ".stoichiometry." + it.key(), "unknown species");
          rx.stoichiometry[*s] = static_cast<int>(integer(it.value(), p + ".stoichiometry." + it.key()));
        }
      } else {
        const auto products = r.contains("products") ? species_counts(r.at("products"), species, p + ".products")
                                                     : std::map<int, int>{};
        for (const auto& [s, n] : products) rx.stoichiometry[s] += n;
        for (const auto& [s, n] : reactants) rx.stoichiometry[s] -= n;
      }
      if (r.contains("voxels")) {
        rx.voxels = voxel_list(r.at("voxels"), spec, p + ".voxels");
        if (rx.voxels.empty()) fail(p + ".voxels", "must not be empty");
      }
      if (r.contains("propensity")) {
        const auto& pr = r.at("propensity");
        check_keys(pr, {"table", "driver"}, p + ".propensity");
        if (!pr.contains("table") || !pr.at("table").is_array()) fail(p + ".propensity.table", "must be an array");
        if (!pr.contains("driver")) fail(p + ".propensity.driver", "required");
        rx.kind = PropensityKind::tabulated;
        rx.driver = species_ref(pr.at("driver"), species, p + ".propensity.driver");
        for (const auto& v : pr.at("table")) {
          if (!v.is_number()) fail(p + ".propensity.table", "entries must be numbers");
          rx.table.push_back(v.get<double>());
        }
      }
      reactions.push_back(std::move(rx));
    }
  }

  // Simulation settings.
  const auto& sim = doc.at("simulation");
  check_keys(sim, {"end_time", "output_interval", "seed", "dt"}, "simulation");
  const double end_time = number(sim, "end_time", "simulation");
  const double interval = number(sim, "output_interval", "simulation", end_time);
  std::uint64_t seed = 0;
  if (sim.contains("seed")) {
    const auto& v = sim.at("seed");
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      fail("simulation.seed", "must be a non-negative integer");
    seed = sim.at("seed").get<std::uint64_t>();
  }
  const double dt = number(sim, "dt", "simulation", std::min(0.01, end_time));
  if (!(dt > 0.0)) fail("simulation.dt", "must be positive");

  ControllerConfig ctrl;
  ctrl.epsilon = {0.05};
  ctrl.dt_max = end_time;
  if (doc.contains("controller")) {
    const auto& c = doc.at("controller");
    check_keys(c, {"epsilon", "stride", "safety", "dt_min", "dt_max", "dt_init", "snap_grid"}, "controller");
    if (c.contains("epsilon")) {
      const auto& e = c.at("epsilon");
      if (e.is_number()) {
        ctrl.epsilon = {e.get<double>()};
      } else if (e.is_object()) {
        ctrl.epsilon.assign(species.size(), 0.05);
        for (auto it = e.begin(); it != e.end(); ++it) {
          const auto s = species.index_of(it.key());
          if (!s) fail("controller.epsilon." + it.key(), "unknown species");
          if (!it.value().is_number()) fail("controller.epsilon." + it.key(), "must be a number");
          ctrl.epsilon[*s] = it.value().get<double>();
        }
      } else {
        fail("controller.epsilon", "must be a number or a per-species object");
      }
    }
    if (c.contains("stride")) ctrl.stride = static_cast<int>(integer(c.at("stride"), "controller.stride"));
    ctrl.safety = number(c, "safety", "controller", ctrl.safety);
    ctrl.dt_min = number(c, "dt_min", "controller", ctrl.dt_min);
    ctrl.dt_max = number(c, "dt_max", "controller", ctrl.dt_max);
    ctrl.dt_init = number(c, "dt_init", "controller", ctrl.dt_init);
    if (c.contains("snap_grid")) {
      if (!c.at("snap_grid").is_boolean()) fail("controller.snap_grid", "must be a boolean");
      ctrl.snap_grid = c.at("snap_grid").get<bool>();
    }
  }
  try {
    ctrl.validate(species.size());
  } catch (const InvalidArgument& e) {
    fail("controller", e.what());
  }

  int radius = 3;
  double table_tol = 5e-3;
  if (doc.contains("dfsp")) {
    const auto& d = doc.at("dfsp");
    check_keys(d, {"hop_radius", "table_tol"}, "dfsp");
    if (d.contains("hop_radius")) radius = static_cast<int>(integer(d.at("hop_radius"), "dfsp.hop_radius"));
    table_tol = number(d, "table_tol", "dfsp", table_tol);
    if (radius < 1) fail("dfsp.hop_radius", "must be >= 1");
    if (!(table_tol > 0.0 && table_tol < 1.0)) fail("dfsp.table_tol", "must lie in (0, 1)");
  }

  try {
    ModelSystem model(std::move(species), std::move(reactions), std::move(mesh), std::move(x0), end_time, interval);
    return ModelFile{std::move(model), seed, dt, ctrl, radius, table_tol};
  } catch (const InvalidArgument& e) {
    throw ModelError(std::string("model: ") + e.what());
  }
}

ModelFile parse_model_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw ModelError("parse error at line " + std::to_string(line) + ": " + e.what());
  }
  return parse_model(doc);
}

ModelFile load_model_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ModelError("cannot open model file '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  try {
    return parse_model_text(ss.str());
  } catch (const ModelError& e) {
    throw ModelError(path + ": " + e.what());
  }
}

// ------------------------------------------------------------ templates

namespace {

json mincde_reactions(double attach_rate, const json& membrane) {
  auto with_voxels = [&](json r) {
    if (!membrane.is_null()) r["voxels"] = membrane;
    return r;
  };
  json rs = json::array();
  rs.push_back(with_voxels({{"name", "attach"}, {"rate", attach_rate},
                            {"reactants", {{"MinD_c_atp", 1}}}, {"products", {{"MinD_m", 1}}}}));
  rs.push_back(with_voxels({{"name", "recruit"}, {"rate", 0.01494},
                            {"reactants", {{"MinD_c_atp", 1}, {"MinD_m", 1}}}, {"products", {{"MinD_m", 2}}}}));
  rs.push_back(with_voxels({{"name", "bind_E"}, {"rate", 0.0923},
                            {"reactants", {{"MinE", 1}, {"MinD_m", 1}}}, {"products", {{"MinDE", 1}}}}));
  rs.push_back(with_voxels({{"name", "release"}, {"rate", 0.7},
                            {"reactants", {{"MinDE", 1}}}, {"products", {{"MinD_c_adp", 1}, {"MinE", 1}}}}));
  rs.push_back({{"name", "exchange"}, {"rate", 0.5},
                {"reactants", {{"MinD_c_adp", 1}}}, {"products", {{"MinD_c_atp", 1}}}});
  return rs;
}

json mincde_species(const json& membrane, Count n_d, Count n_e) {
  json sp = json::array();
  auto add = [&](const char* name, double gamma, Count total, bool on_membrane) {
    json s = {{"name", name}, {"gamma", gamma}, {"initial", {{"total", total}}}};
    if (on_membrane && !membrane.is_null()) {
      s["diffusion_voxels"] = membrane;
      s["initial"]["voxels"] = membrane;
    }
    sp.push_back(s);
  };
  add("MinD_c_atp", 2.5, n_d, false);
  add("MinD_c_adp", 2.5, 0, false);
  add("MinE", 2.5, n_e, false);
  add("MinD_m", 0.01, 0, true);
  add("MinDE", 0.01, 0, true);
  return sp;
}

}  // namespace

std::vector<std::string> builtin_names() {
  return {"birth-death-1v", "annihilation-2v", "hetero-degrade-2v", "mincde-1d", "mincde-3d-cartesian"};
}

bool is_builtin(const std::string& name) {
  const auto base = name.substr(0, name.find(':'));
  const auto names = builtin_names();
  return std::find(names.begin(), names.end(), base) != names.end();
}

json builtin_json(const std::string& name) {
  const auto colon = name.find(':');
  const auto base = name.substr(0, colon);
  if (colon != std::string::npos && base != "mincde-3d-cartesian")
    throw ModelError("builtin '" + base + "' takes no resolution suffix");

  if (base == "birth-death-1v")
    return json::parse(R"({
      "species": [{"name": "X", "gamma": 0.0, "initial": 0}],
      "reactions": [
        {"name": "birth", "rate": 10.0, "products": {"X": 1}},
        {"name": "death", "rate": 1.0, "reactants": {"X": 1}}],
      "mesh": {"cartesian": {"dims": [1], "h": 1.0}},
      "simulation": {"end_time": 10.0, "output_interval": 1.0, "seed": 1, "dt": 0.01}})");

  if (base == "annihilation-2v")
    return json::parse(R"({
      "species": [{"name": "A", "gamma": 1.0, "initial": [4, 2]},
                  {"name": "B", "gamma": 1.0, "initial": [1, 3]}],
      "reactions": [{"name": "annihilate", "rate": 1.0, "reactants": {"A": 1, "B": 1}}],
      "mesh": {"cartesian": {"dims": [2], "h": 1.0}},
      "simulation": {"end_time": 1.0, "output_interval": 0.1, "seed": 1, "dt": 0.01}})");

  if (base == "hetero-degrade-2v")
    return json::parse(R"({
      "species": [{"name": "A", "gamma": 1.0, "initial": [3, 2]}],
      "reactions": [{"name": "degrade", "rate": 1.0, "reactants": {"A": 1}, "voxels": [0]}],
      "mesh": {"cartesian": {"dims": [2], "h": 1.0}},
      "simulation": {"end_time": 1.0, "output_interval": 0.1, "seed": 1, "dt": 0.01}})");

  const json controller = {{"epsilon", 0.05}, {"stride", 10}, {"safety", 0.9},
                           {"dt_min", 1e-4},  {"dt_max", 1.0}, {"dt_init", 0.01}, {"snap_grid", true}};

  if (base == "mincde-1d") {
    // 4 um rod of radius 0.5 um in 40 slices; every slice touches the
    // membrane, so attachment uses kd * surface / volume = kd * 2 / r.
    const double h = 0.1, radius = 0.5, kd = 0.0125;
    json doc;
    doc["species"] = mincde_species(nullptr, 4000, 1040);
    doc["reactions"] = mincde_reactions(kd * 2.0 / radius, nullptr);
    doc["mesh"] = {{"cartesian", {{"dims", {40}}, {"h", h}, {"volume", std::numbers::pi * radius * radius * h}}}};
    doc["simulation"] = {{"end_time", 200.0}, {"output_interval", 1.0}, {"seed", 1}, {"dt", 0.01}};
    doc["controller"] = controller;
    doc["dfsp"] = {{"hop_radius", 3}, {"table_tol", 5e-3}};
    return doc;
  }

  if (base == "mincde-3d-cartesian") {
    int n = 5;
    if (colon != std::string::npos) {
      try {
        n = std::stoi(name.substr(colon + 1));
      } catch (const std::exception&) {
        throw ModelError("bad resolution in '" + name + "'");
      }
      if (n < 2 || n > 40) throw ModelError("mincde-3d-cartesian resolution must be in [2, 40]");
    }
    // 4 x 1 x 1 um rod; the outer voxel layer is the membrane.
    const double h = 1.0 / n, kd = 0.0125;
    json doc;
    doc["species"] = mincde_species("boundary", 4000, 1040);
    doc["reactions"] = mincde_reactions(kd / h, "boundary");
    doc["mesh"] = {{"cartesian", {{"dims", {4 * n, n, n}}, {"h", h}}}};
    doc["simulation"] = {{"end_time", 20.0}, {"output_interval", 1.0}, {"seed", 1}, {"dt", 0.01}};
    doc["controller"] = controller;
    doc["dfsp"] = {{"hop_radius", 3}, {"table_tol", 5e-3}};
    return doc;
  }
  throw ModelError("unknown builtin model '" + name + "'");
}

ModelFile builtin_model(const std::string& name) { return parse_model(builtin_json(name)); }

ModelFile resolve_model(const std::string& spec) {
  if (std::filesystem::is_regular_file(spec)) return load_model_file(spec);
  if (is_builtin(spec)) return builtin_model(spec);
  throw ModelError("'" + spec + "' is neither a model file nor a builtin model");
}

StateMatrix load_state_csv(const std::string& path, const ModelSystem& m) {
  std::ifstream is(path);
  if (!is) throw ModelError("cannot open state file '" + path + "'");
  std::string line;
  if (!std::getline(is, line) || line != "voxel,species,count")
    throw ModelError(path + ": expected header voxel,species,count");
  StateMatrix x(m.voxel_count(), m.species_count());
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string v, s, c;
    if (!std::getline(ss, v, ',') || !std::getline(ss, s, ',') || !std::getline(ss, c))
      throw ModelError(path + ":" + std::to_string(lineno) + ": expected three fields");
    try {
      const int i = std::stoi(v);
      const auto sp = m.species().index_of(s);
      const Count n = std::stoll(c);
      if (i < 0 || i >= m.voxel_count() || !sp || n < 0) throw std::out_of_range("field");
      x(i, *sp) = n;
    } catch (const std::exception&) {
      throw ModelError(path + ":" + std::to_string(lineno) + ": bad voxel, species or count");
    }
  }
  return x;
}

}  // namespace rdme
