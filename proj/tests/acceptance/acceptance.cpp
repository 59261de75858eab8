// Acceptance criteria A1..A10. Usage: acceptance [A1 ... A10]; no ids runs all.
// Exit status: 0 all pass, 1 any failure, 77 when the only non-pass is a skip.

#include <boost/math/distributions/chi_squared.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "rdme/driver.hpp"
#include "rdme/error_estimator.hpp"
#include "rdme/exact_solvers.hpp"
#include "rdme/oracle.hpp"
#include "rdme/parallel.hpp"
#include "rdme/split_stepper.hpp"

using namespace rdme;

namespace {

enum class Verdict { pass, fail, skip };

struct Result {
  Verdict verdict = Verdict::pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ------------------------------------------------------------ random systems

struct SmallSystem {
  ModelSystem model;
  std::vector<Count> caps;
};

// <= 3 voxels, <= 2 species, <= 3 reactions of orders 0..2, caps <= 8.
// Every state two transitions from x0 stays inside the caps, so truncation
// does not touch the commutator.
SmallSystem random_system(std::mt19937_64& gen) {
  std::uniform_int_distribution<int> nv_d(1, 3), ns_d(1, 2), nr_d(1, 3), order_d(0, 2), coin(0, 1);
  std::uniform_real_distribution<double> rate_d(0.2, 2.0), vol_d(0.5, 2.0);
  const int nv = nv_d(gen), ns = ns_d(gen);
  std::uniform_int_distribution<int> species_d(0, ns - 1), voxel_d(0, nv - 1);

  std::vector<Reaction> reactions;
  const int nr = nr_d(gen);
  while (static_cast<int>(reactions.size()) < nr) {
    Reaction r;
    r.name = "r" + std::to_string(reactions.size());
    r.rate_constant = rate_d(gen);
    r.stoichiometry.assign(ns, 0);
    std::map<int, int> reactants;
    const int order = order_d(gen);
    for (int k = 0; k < order; ++k) ++reactants[species_d(gen)];
    for (const auto& [s, n] : reactants) {
      r.reactants.push_back({s, n});
      r.stoichiometry[s] -= n;
    }
    const int products = std::uniform_int_distribution<int>(0, order == 0 ? 2 : 1)(gen);
    for (int k = 0; k < products; ++k) ++r.stoichiometry[species_d(gen)];
    if (std::all_of(r.stoichiometry.begin(), r.stoichiometry.end(), [](int v) { return v == 0; })) continue;
    if (nv > 1 && coin(gen)) r.voxels = {voxel_d(gen)};
    reactions.push_back(std::move(r));
  }

  std::vector<DiffusionEdge> edges;
  for (int s = 0; s < ns; ++s)
    for (int i = 0; i < nv; ++i)
      for (int j = 0; j < nv; ++j)
        if (i != j && (std::abs(i - j) == 1 || coin(gen)) && (s == 0 || coin(gen)))
          edges.push_back({i, j, s, rate_d(gen)});
  std::vector<double> volumes(nv);
  for (auto& v : volumes) v = vol_d(gen);

  std::vector<Count> x0(static_cast<std::size_t>(nv) * ns), caps(x0.size());
  for (std::size_t k = 0; k < x0.size(); ++k) {
    x0[k] = std::uniform_int_distribution<Count>(0, 5)(gen);
    caps[k] = x0[k] + 3;
  }
  std::vector<std::string> names;
  for (int s = 0; s < ns; ++s) names.push_back(std::string(1, static_cast<char>('A' + s)));
  SpeciesSet sp(names, std::vector<double>(ns, 1.0));
  ModelSystem m(std::move(sp), std::move(reactions), MeshGraph(std::move(volumes), std::move(edges), ns),
                StateMatrix(nv, ns, std::move(x0)), 1.0, 1.0);
  return {std::move(m), std::move(caps)};
}

std::vector<SmallSystem> random_suite(int count) {
  std::mt19937_64 gen(20240611);
  std::vector<SmallSystem> out;
  while (static_cast<int>(out.size()) < count) {
    auto s = random_system(gen);
    // Systems whose operators commute at x0 (uniform linear decay, say)
    // leave only round-off, which has no meaningful relative error.
    const auto x0 = s.model.initial_state();
    double largest = 0.0;
    for (const auto& [y, v] : commutator_pdf_error(x0, s.model, 0.1).by_state(x0, s.model))
      largest = std::max(largest, std::abs(v));
    if (largest < 1e-12) continue;
    out.push_back(std::move(s));
  }
  return out;
}

constexpr int kSuiteSize = 24;

// ---------------------------------------------------------------- criteria

Result a1() {
  const auto t0 = std::chrono::steady_clock::now();
  const double dt = 0.1;
  double worst = 0.0;
  std::size_t entries = 0;
  for (const auto& sys : random_suite(kSuiteSize)) {
    const auto& m = sys.model;
    const auto x0 = m.initial_state();
    const oracle::TruncatedStateSpace space(m.voxel_count(), m.species_count(), sys.caps);
    const auto g = oracle::build_generators(m, space);
    const auto c = oracle::commutator_apply(g, oracle::point_mass(space, x0), dt);
    const double scale = c.cwiseAbs().maxCoeff();
    Eigen::VectorXd mine = Eigen::VectorXd::Zero(c.size());
    for (const auto& [state, v] : commutator_pdf_error(x0, m, dt).by_state(x0, m)) {
      if (!space.contains(state)) return {Verdict::fail, "closed form reaches a state outside the oracle space"};
      mine(static_cast<Eigen::Index>(space.index(state))) += v;
    }
    worst = std::max(worst, (mine - c).cwiseAbs().maxCoeff() / scale);
    for (Eigen::Index k = 0; k < c.size(); ++k) entries += c(k) != 0.0;
  }
  const bool ok = worst <= 1e-12;
  return {ok ? Verdict::pass : Verdict::fail,
          fmt("%d systems, %zu nonzero entries, max |closed form - oracle| / max|oracle| = %.2e (tol 1e-12), %.1f s",
              kSuiteSize, entries, worst, seconds_since(t0))};
}

Result a2() {
  const auto t0 = std::chrono::steady_clock::now();
  const double dt = 0.1;
  double worst_mean = 0.0, worst_m2 = 0.0;
  for (const auto& sys : random_suite(kSuiteSize)) {
    const auto& m = sys.model;
    const auto x0 = m.initial_state();
    const oracle::TruncatedStateSpace space(m.voxel_count(), m.species_count(), sys.caps);
    const auto g = oracle::build_generators(m, space);
    const auto mo = oracle::moments(space, oracle::commutator_apply(g, oracle::point_mass(space, x0), dt));
    const auto est = estimate_error(x0, m, dt, ExecPolicy::serial);
    double s1 = 0.0, s2 = 0.0, d1 = 0.0, d2 = 0.0;
    for (std::size_t k = 0; k < est.mean.values.size(); ++k) {
      s1 = std::max(s1, std::abs(mo.mean.values[k]));
      s2 = std::max(s2, std::abs(mo.second.values[k]));
      d1 = std::max(d1, std::abs(est.mean.values[k] - mo.mean.values[k]));
      d2 = std::max(d2, std::abs(est.second_moment.values[k] - mo.second.values[k]));
    }
    worst_mean = std::max(worst_mean, s1 > 0 ? d1 / s1 : d1);
    worst_m2 = std::max(worst_m2, s2 > 0 ? d2 / s2 : d2);
  }
  const bool ok = worst_mean <= 1e-10 && worst_m2 <= 1e-10;
  return {ok ? Verdict::pass : Verdict::fail,
          fmt("%d systems, max rel err mean %.2e, second moment %.2e (tol 1e-10), %.1f s", kSuiteSize, worst_mean,
              worst_m2, seconds_since(t0))};
}

Result a3() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<double> dts{0.02, 0.01, 0.005, 0.0025};
  bool ok = true;
  std::string detail;
  for (const char* name : {"hetero-degrade-2v", "annihilation-2v"}) {
    const auto mf = builtin_model(name);
    const auto c = converge_local(mf.model, mf.model.initial_state(), dts);
    double boundary = 0.0;
    for (const auto& r : c.rows) boundary = std::max(boundary, r.boundary_mass);
    const bool pass = c.true_slope >= 1.9 && c.true_slope <= 2.1 && c.residual_slope >= 2.7 &&
                      c.residual_slope <= 3.3 && boundary < 1e-10;
    ok = ok && pass;
    detail += fmt("%s true slope %.3f, residual slope %.3f, boundary mass %.1e; ", name, c.true_slope,
                  c.residual_slope, boundary);
  }
  detail += fmt("bounds [1.9, 2.1] and [2.7, 3.3], %.1f s", seconds_since(t0));
  return {ok ? Verdict::pass : Verdict::fail, detail};
}

Result a4() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<double> dts{0.05, 0.025, 0.0125, 0.00625, 0.003125};
  bool ok = true;
  std::string detail;
  for (const char* name : {"hetero-degrade-2v", "annihilation-2v"}) {
    const auto mf = builtin_model(name);
    const auto& x0 = mf.model.initial_state();
    const auto caps = oracle_caps(mf.model, x0, 6);
    const oracle::TruncatedStateSpace space(mf.model.voxel_count(), mf.model.species_count(), caps);
    const auto c = converge_global(mf.model, x0, 1.0, dts, caps);
    const bool pass = space.size() <= 10000 && c.slope >= 0.9 && c.slope <= 1.1;
    ok = ok && pass;
    detail += fmt("%s (%zu states) slope %.3f; ", name, space.size(), c.slope);
  }
  detail += fmt("T = 1, dt 0.05 to 0.003125, bounds [0.9, 1.1], %.1f s", seconds_since(t0));
  return {ok ? Verdict::pass : Verdict::fail, detail};
}

Result a5() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::pair<std::string, MeshGraph>> meshes;
  const SpeciesSet one({"A"}, {1.0});
  meshes.emplace_back("line-50", build_cartesian_mesh(std::vector<int>{50}, 1.0, one));
  meshes.emplace_back("grid-7x7", build_cartesian_mesh(std::vector<int>{7, 7}, 0.5, one));
  meshes.emplace_back("box-5x3x3", build_cartesian_mesh(std::vector<int>{5, 3, 3}, 0.2, SpeciesSet({"A"}, {0.3})));
  {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> rate(0.1, 3.0);
    std::vector<DiffusionEdge> edges;
    for (int i = 0; i < 30; ++i)
      for (int j = 0; j < 30; ++j)
        if (i != j && (std::abs(i - j) == 1 || std::uniform_int_distribution<int>(0, 9)(gen) == 0))
          edges.push_back({i, j, 0, rate(gen)});
    meshes.emplace_back("random-30", MeshGraph(std::vector<double>(30, 1.0), std::move(edges), 1));
  }
  double worst = 0.0;
  for (const auto& [name, mesh] : meshes) {
    const int n = mesh.voxel_count();
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
    for (const auto& e : mesh.edges()) {
      Q(e.to, e.from) += e.rate;
      Q(e.from, e.from) -= e.rate;
    }
    for (double dt : {0.01, 0.1, 1.0}) {
      const Eigen::MatrixXd E = (dt * Q).exp();
      for (int origin = 0; origin < n; ++origin) {
        const auto t = build_table(mesh, origin, 0, dt, n, 1e-12);
        Eigen::VectorXd col = Eigen::VectorXd::Zero(n);
        for (std::size_t k = 0; k < t.support.size(); ++k) col(t.support[k]) += t.prob[k];
        col(origin) += t.residual;
        worst = std::max(worst, (col - E.col(origin)).lpNorm<1>());
      }
    }
  }
  double analytic = 0.0;
  for (double d : {0.3, 1.0, 4.0})
    for (double dt : {0.001, 0.1, 2.0}) {
      const MeshGraph two({1.0, 1.0}, {{0, 1, 0, d}, {1, 0, 0, d}}, 1);
      const auto t = build_table(two, 0, 0, dt, 1, 1e-14);
      double stay = t.residual, move = 0.0;
      for (std::size_t k = 0; k < t.support.size(); ++k) (t.support[k] == 0 ? stay : move) += t.prob[k];
      analytic = std::max({analytic, std::abs(stay - (1 + std::exp(-2 * d * dt)) / 2),
                           std::abs(move - (1 - std::exp(-2 * d * dt)) / 2)});
    }
  const bool ok = worst <= 1e-10 && analytic <= 1e-12;
  return {ok ? Verdict::pass : Verdict::fail,
          fmt("max l1 vs dense exponential %.2e (tol 1e-10) over 4 meshes <= 50 voxels; two-voxel analytic max err "
              "%.2e (tol 1e-12), %.1f s",
              worst, analytic, seconds_since(t0))};
}

Result a6() {
  const auto t0 = std::chrono::steady_clock::now();
  const int reps = 100000;
  // Two voxels, birth 2 and death 1 in each, d = 1 both ways, start empty.
  auto reaction = [](const char* name, double k, std::vector<Reactant> r, int n) {
    Reaction rx;
    rx.name = name;
    rx.rate_constant = k;
    rx.reactants = std::move(r);
    rx.stoichiometry = {n};
    return rx;
  };
  const ModelSystem bd(SpeciesSet({"A"}, {1.0}), {reaction("birth", 2.0, {}, 1), reaction("death", 1.0, {{0, 1}}, -1)},
                       MeshGraph({1.0, 1.0}, {{0, 1, 0, 1.0}, {1, 0, 0, 1.0}}, 1), StateMatrix(2, 1), 1.0, 1.0);
  const Count cap = 15;
  const oracle::TruncatedStateSpace space(2, 1, cap);
  const auto g = oracle::build_generators(bd, space);
  const auto p = oracle::expm_apply(g.M + g.D, 1.0, oracle::point_mass(space, bd.initial_state()), 1e-14);
  std::vector<std::vector<double>> exact(2, std::vector<double>(cap + 1, 0.0));
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    const auto x = space.state(static_cast<std::size_t>(k));
    for (int i = 0; i < 2; ++i) exact[i][x(i, 0)] += p(k);
  }
  std::vector<std::vector<double>> hist(2, std::vector<double>(cap + 2, 0.0));
  const std::vector<double> at{1.0};
  for (int r = 0; r < reps; ++r) {
    Rng rng = make_stream({101, static_cast<std::uint64_t>(r), 0, 0, Phase::nsm});
    const auto t = nsm_run(bd, rng, at);
    for (int i = 0; i < 2; ++i) hist[i][std::min<Count>(t.snapshots[0](i, 0), cap + 1)] += 1.0;
  }
  double tv = 0.0;
  for (int i = 0; i < 2; ++i) {
    double d = hist[i][cap + 1] / reps;
    for (Count k = 0; k <= cap; ++k) d += std::abs(hist[i][k] / reps - exact[i][k]);
    tv = std::max(tv, 0.5 * d);
  }
  const double boundary = oracle::boundary_mass(g, p);

  // One voxel: NSM against the direct method.
  const auto mf = builtin_model("birth-death-1v");
  const auto m1 = mf.model.with_end_time(1.0, 1.0);
  std::map<Count, std::pair<double, double>> counts;
  for (int r = 0; r < reps; ++r) {
    Rng a = make_stream({202, static_cast<std::uint64_t>(r), 0, 0, Phase::nsm});
    const auto t = nsm_run(m1, a, at);
    counts[t.snapshots[0](0, 0)].first += 1.0;
    Rng b = make_stream({303, static_cast<std::uint64_t>(r), 0, 0, Phase::reaction});
    std::vector<Count> row(m1.initial_state().data().begin(), m1.initial_state().data().end());
    ssa_reaction_window(row, m1, 0, 1.0, b);
    counts[row[0]].second += 1.0;
  }
  // Pool sparse tails so every bin holds at least 10 samples.
  std::vector<std::pair<double, double>> bins;
  std::pair<double, double> acc{0, 0};
  for (const auto& [k, c] : counts) {
    acc.first += c.first;
    acc.second += c.second;
    if (acc.first + acc.second >= 10) {
      bins.push_back(acc);
      acc = {0, 0};
    }
  }
  if (acc.first + acc.second > 0) {
    if (bins.empty()) bins.push_back(acc);
    else {
      bins.back().first += acc.first;
      bins.back().second += acc.second;
    }
  }
  double chi2 = 0.0;
  for (const auto& [a, b] : bins) chi2 += (a - b) * (a - b) / (a + b);
  const int dof = static_cast<int>(bins.size()) - 1;
  const double pval = boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), chi2));

  const bool ok = tv <= 0.01 && pval > 0.001 && boundary < 1e-10;
  return {ok ? Verdict::pass : Verdict::fail,
          fmt("two-voxel NSM marginal TV %.4f (tol 0.01, oracle boundary mass %.1e); one-voxel NSM vs direct method "
              "chi2 %.1f on %d dof, p = %.3f (need > 0.001); %d runs each, %.1f s",
              tv, boundary, chi2, dof, pval, reps, seconds_since(t0))};
}

Result a7() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::string> failures;
  std::mt19937_64 gen(99);
  int diffusion_checks = 0;

  // Diffusion sub-steps conserve every species total.
  for (int trial = 0; trial < 60; ++trial) {
    const int nx = std::uniform_int_distribution<int>(1, 6)(gen), ny = std::uniform_int_distribution<int>(1, 4)(gen);
    const SpeciesSet sp({"A", "B", "C"}, {std::uniform_real_distribution<double>(0.01, 3.0)(gen), 0.0, 0.5});
    const auto mesh = build_cartesian_mesh(std::vector<int>{nx, ny}, 0.5, sp);
    StateMatrix x(mesh.voxel_count(), 3);
    for (auto& v : x.data()) v = std::uniform_int_distribution<Count>(0, trial % 2 ? 200 : 10)(gen);
    const ModelSystem m(sp, {}, mesh, x, 1.0, 1.0);
    const double dt = std::uniform_real_distribution<double>(0.01, 2.0)(gen);
    TableParams params;
    params.dt = dt;
    const auto tables = build_tables(mesh, params);
    StateMatrix a = x, b = x;
    Rng rng(trial);
    diffusion_ssa_window(a, m, dt, rng);
    dfsp_diffusion_step(b, mesh, tables, {5, 0, static_cast<std::uint64_t>(trial)});
    for (int s = 0; s < 3; ++s)
      if (a.species_total(s) != x.species_total(s) || b.species_total(s) != x.species_total(s))
        failures.push_back("diffusion changed a species total");
    for (int i = 0; i < x.voxels(); ++i)
      if (a(i, 1) != x(i, 1) || b(i, 1) != x(i, 1)) failures.push_back("immobile species moved");
    if (!a.nonnegative() || !b.nonnegative()) failures.push_back("negative count after diffusion");
    ++diffusion_checks;
  }

  // No negative populations after any sub-step, for every solver.
  std::size_t snapshots = 0;
  for (const char* name : {"annihilation-2v", "hetero-degrade-2v", "birth-death-1v", "mincde-3d-cartesian:2"}) {
    const auto mf = builtin_model(name);
    for (Solver s : {Solver::nsm, Solver::split_exact, Solver::split_dfsp, Solver::adaptive_exact, Solver::adaptive_dfsp}) {
      const auto e = run_ensemble(mf, s, 4, 17);
      for (const auto& t : e.trajectories)
        for (const auto& x : t.snapshots) {
          ++snapshots;
          if (!x.nonnegative()) failures.push_back(std::string("negative count in ") + name);
        }
    }
    // Sub-step by sub-step on the split propagators.
    for (Propagator p : {Propagator::exact_ssa, Propagator::dfsp}) {
      SplitConfig cfg;
      cfg.propagator = p;
      auto prop = make_propagator(mf.model, cfg);
      StateMatrix x = mf.model.initial_state();
      for (std::uint64_t k = 0; k < 50; ++k) {
        prop->apply(x, 0.05, {3, 0, k}, ExecPolicy::parallel);
        if (!x.nonnegative()) failures.push_back("negative count after diffusion sub-step");
        reaction_substep(x, mf.model, 0.05, {3, 0, k}, ExecPolicy::parallel);
        if (!x.nonnegative()) failures.push_back("negative count after reaction sub-step");
      }
    }
  }

  // Reachable-state deltas sum to zero and scale exactly with dt^2.
  double worst_sum = 0.0;
  int homogeneity_breaks = 0;
  for (const auto& sys : random_suite(kSuiteSize)) {
    const auto& m = sys.model;
    const auto x = m.initial_state();
    const auto d = commutator_pdf_error(x, m, 0.1);
    worst_sum = std::max(worst_sum, std::abs(d.sum()) / d.max_abs());
    const auto e = estimate_error(x, m, 0.1, ExecPolicy::serial);
    for (double c : {2.0, 0.5, 4.0}) {
      const auto dc = commutator_pdf_error(x, m, c * 0.1);
      for (const auto& [k, v] : d.values()) homogeneity_breaks += dc.at(k) != c * c * v;
      homogeneity_breaks += dc.size() != d.size();
      const auto ec = estimate_error(x, m, c * 0.1, ExecPolicy::serial);
      for (std::size_t k = 0; k < e.mean.values.size(); ++k) {
        homogeneity_breaks += ec.mean.values[k] != c * c * e.mean.values[k];
        homogeneity_breaks += ec.second_moment.values[k] != c * c * e.second_moment.values[k];
        homogeneity_breaks += ec.variance.values[k] != c * c * e.variance.values[k];
      }
    }
  }
  if (worst_sum > 1e-12) failures.push_back(fmt("delta sum %.2e", worst_sum));
  if (homogeneity_breaks) failures.push_back(fmt("%d dt^2 homogeneity mismatches", homogeneity_breaks));

  const std::string summary =
      fmt("%d diffusion conservation trials, %zu solver snapshots nonnegative checks, max |sum delta| / max|delta| "
          "%.1e, dt^2 homogeneity at c = 2, 1/2, 4 exact with %d mismatches, %.1f s",
          diffusion_checks, snapshots, worst_sum, homogeneity_breaks, seconds_since(t0));
  if (!failures.empty()) return {Verdict::fail, failures.front() + "; " + summary};
  return {Verdict::pass, summary};
}

Result a8() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto mf = builtin_model("mincde-1d");
  auto cfg = split_config(mf, Solver::adaptive_dfsp);
  const auto t = run_split(mf.model, cfg, mf.seed, 0, mf.model.sample_times());
  const auto& d = t.diagnostics;
  int violations = 0, estimated = 0, streak = 0, worst_streak = 0;
  for (const auto& s : d.steps) {
    if (!s.accepted) {
      worst_streak = std::max(worst_streak, ++streak);
      continue;
    }
    streak = 0;
    if (!s.estimated) continue;
    ++estimated;
    for (int sp = 0; sp < mf.model.species_count(); ++sp)
      if (s.eta[sp] > cfg.controller.tolerance(sp)) ++violations;
  }
  const auto dts = d.accepted_dt();
  double mean = 0.0, sq = 0.0;
  for (double h : dts) mean += h;
  mean /= static_cast<double>(dts.size());
  for (double h : dts) sq += (h - mean) * (h - mean);
  const double cv = std::sqrt(sq / static_cast<double>(dts.size())) / mean;
  const bool finished = !t.times.empty() && t.times.back() == mf.model.end_time();
  const bool ok = violations == 0 && cv > 0.05 && finished && d.infeasible_warnings == 0;
  return {ok ? Verdict::pass : Verdict::fail,
          fmt("%zu steps, %d estimated, %d eta > eps violations, accepted-dt CV %.3f (need > 0.05), %d rejections "
              "(longest run %d), %d floor acceptances, reached T = %g, %.1f s",
              d.steps.size(), estimated, violations, cv, d.rejections, worst_streak, d.infeasible_warnings,
              t.times.empty() ? 0.0 : t.times.back(), seconds_since(t0))};
}

double time_run(const ModelFile& mf, Solver s) {
  const auto t0 = std::chrono::steady_clock::now();
  run_single(mf, s, mf.seed, 0, ExecPolicy::parallel);
  return seconds_since(t0);
}

Result a9() {
  const auto small = builtin_model("mincde-3d-cartesian:5");
  const double nsm = time_run(small, Solver::nsm);
  const double dfsp = time_run(small, Solver::adaptive_dfsp);
  const bool faster = dfsp < nsm;
  std::string detail = fmt("%d voxels, T = %g: adaptive split-dfsp %.2f s vs NSM %.2f s (%.2fx)",
                           small.model.voxel_count(), small.model.end_time(), dfsp, nsm, nsm / dfsp);
  if (!faster) return {Verdict::fail, detail};

  const unsigned hw = std::thread::hardware_concurrency();
  if (hw < 4)
    return {Verdict::skip, detail + fmt("; thread speedup part needs 4 hardware threads, this host has %u", hw)};
  const auto big = builtin_model("mincde-3d-cartesian:7");
  const int restore = max_threads();
  set_threads(1);
  const double one = time_run(big, Solver::adaptive_dfsp);
  set_threads(4);
  const double four = time_run(big, Solver::adaptive_dfsp);
  set_threads(restore);
  const double speedup = one / four;
  detail += fmt("; %d voxels: 1 thread %.2f s, 4 threads %.2f s, speedup %.2f (need >= 1.5)",
                big.model.voxel_count(), one, four, speedup);
  return {speedup >= 1.5 ? Verdict::pass : Verdict::fail, detail};
}

Result a10() {
  const auto t0 = std::chrono::steady_clock::now();
  struct Case {
    const char* model;
    Solver solver;
    std::size_t n;
    double end_time;
  };
  const std::vector<Case> cases{{"mincde-3d-cartesian:3", Solver::adaptive_dfsp, 1, 5.0},
                                {"mincde-3d-cartesian:3", Solver::split_exact, 1, 2.0},
                                {"mincde-1d", Solver::adaptive_dfsp, 3, 20.0},
                                {"annihilation-2v", Solver::nsm, 8, 0.0},
                                {"hetero-degrade-2v", Solver::split_dfsp, 8, 0.0}};
  const int restore = max_threads();
  int identical = 0;
  std::size_t bytes = 0;
  std::string mismatch;
  for (const auto& c : cases) {
    auto mf = builtin_model(c.model);
    if (c.end_time > 0.0) mf.model = mf.model.with_end_time(c.end_time, c.end_time / 5);
    std::string out[2];
    for (int k = 0; k < 2; ++k) {
      set_threads(k == 0 ? 1 : 4);
      std::ostringstream os;
      write_ensemble_csv(os, run_ensemble(mf, c.solver, c.n, 1234), mf.model.species());
      out[k] = os.str();
    }
    bytes += out[0].size();
    if (out[0] == out[1] && !out[0].empty())
      ++identical;
    else if (mismatch.empty())
      mismatch = std::string(c.model) + " " + solver_name(c.solver);
  }
  set_threads(restore);
  const bool ok = identical == static_cast<int>(cases.size());
  return {ok ? Verdict::pass : Verdict::fail,
          fmt("%d of %zu model/solver cases byte-identical at 1 and 4 threads (%zu bytes each)%s, %.1f s", identical,
              cases.size(), bytes, mismatch.empty() ? "" : ("; first mismatch " + mismatch).c_str(),
              seconds_since(t0))};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Result()>>> all{
      {"A1", a1}, {"A2", a2}, {"A3", a3}, {"A4", a4}, {"A5", a5},
      {"A6", a6}, {"A7", a7}, {"A8", a8}, {"A9", a9}, {"A10", a10}};
  std::vector<std::string> wanted(argv + 1, argv + argc);
  if (wanted.empty())
    for (const auto& [id, fn] : all) wanted.push_back(id);

  bool failed = false, skipped = false;
  for (const auto& id : wanted) {
    auto it = std::find_if(all.begin(), all.end(), [&](const auto& p) { return p.first == id; });
    if (it == all.end()) {
      std::fprintf(stderr, "unknown criterion '%s'\n", id.c_str());
      return 2;
    }
    Result r;
    try {
      r = it->second();
    } catch (const std::exception& e) {
      r = {Verdict::fail, std::string("exception: ") + e.what()};
    }
    const char* tag = r.verdict == Verdict::pass ? "PASS" : r.verdict == Verdict::fail ? "FAIL" : "SKIP";
    std::printf("%s %s %s\n", id.c_str(), tag, r.detail.c_str());
    std::fflush(stdout);
    failed = failed || r.verdict == Verdict::fail;
    skipped = skipped || r.verdict == Verdict::skip;
  }
  if (failed) return 1;
  return skipped ? 77 : 0;
}
