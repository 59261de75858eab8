#include "rdme/trajectory.hpp"

#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "rdme/errors.hpp"

namespace rdme {

std::vector<double> StepDiagnostics::accepted_dt(bool include_truncated) const {
  std::vector<double> out;
  for (const auto& s : steps)
    if (s.accepted && (include_truncated || !s.truncated)) out.push_back(s.dt);
  return out;
}

std::vector<double> StepDiagnostics::windowed_dt(int window) const {
  const auto raw = accepted_dt(true);
  std::vector<double> out(raw.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < raw.size(); ++k) {
    acc += raw[k];
    if (k >= static_cast<std::size_t>(window)) acc -= raw[k - window];
    out[k] = acc / static_cast<double>(std::min<std::size_t>(k + 1, window));
  }
  return out;
}

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_trajectory_header(std::ostream& os) { os << "trajectory,time,voxel,species,count\n"; }

void write_trajectory_csv(std::ostream& os, const Trajectory& t, const SpeciesSet& species) {
  for (std::size_t k = 0; k < t.times.size(); ++k) {
    const auto& x = t.snapshots[k];
    const std::string time = fmt_double(t.times[k]);
    for (int i = 0; i < x.voxels(); ++i)
      for (int s = 0; s < x.species(); ++s)
        os << t.index << ',' << time << ',' << i << ',' << species.names[s] << ',' << x(i, s) << '\n';
  }
}

std::vector<Trajectory> read_trajectories_csv(std::istream& is, const SpeciesSet& species, int voxels) {
  std::string line;
  if (!std::getline(is, line) || line != "trajectory,time,voxel,species,count")
    throw ConfigurationError("trajectory CSV has an unexpected header");
  std::map<std::uint64_t, Trajectory> by_index;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string f[5];
    for (int c = 0; c < 5; ++c)
      if (!std::getline(ss, f[c], ',')) throw ConfigurationError("short CSV row at line " + std::to_string(lineno));
    const std::uint64_t idx = std::stoull(f[0]);
    const double time = std::stod(f[1]);
    const int voxel = std::stoi(f[2]);
    const auto s = species.index_of(f[3]);
    if (!s || voxel < 0 || voxel >= voxels)
      throw ConfigurationError("bad voxel or species at line " + std::to_string(lineno));
    auto& t = by_index[idx];
    t.index = idx;
    if (t.times.empty() || t.times.back() != time) {
      t.times.push_back(time);
      t.snapshots.emplace_back(voxels, species.size());
    }
    t.snapshots.back()(voxel, *s) = std::stoll(f[4]);
  }
  std::vector<Trajectory> out;
  for (auto& [k, t] : by_index) out.push_back(std::move(t));
  return out;
}

void write_diagnostics_csv(std::ostream& os, const StepDiagnostics& d, const SpeciesSet& species) {
  os << "t,dt,accepted,estimated,truncated,infeasible,table_residual,dt_window10";
  for (const auto& n : species.names) os << ",eta_" << n;
  os << '\n';
  const auto window = d.windowed_dt(10);
  std::size_t accepted = 0;
  for (const auto& s : d.steps) {
    os << fmt_double(s.t) << ',' << fmt_double(s.dt) << ',' << s.accepted << ',' << s.estimated << ','
       << s.truncated << ',' << s.infeasible << ',' << fmt_double(s.table_residual) << ',';
    if (s.accepted) os << fmt_double(window[accepted++]);
    for (int k = 0; k < species.size(); ++k) {
      os << ',';
      if (static_cast<std::size_t>(k) < s.eta.size()) os << fmt_double(s.eta[k]);
    }
    os << '\n';
  }
}

}  // namespace rdme
