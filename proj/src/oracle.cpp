#include "rdme/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "rdme/errors.hpp"

namespace rdme::oracle {

TruncatedStateSpace::TruncatedStateSpace(int voxels, int species, std::vector<Count> caps, std::size_t ceiling)
    : nv_(voxels), ns_(species), caps_(std::move(caps)) {
  if (caps_.size() != static_cast<std::size_t>(nv_) * ns_) throw InvalidArgument("one cap per (voxel, species)");
  stride_.resize(caps_.size());
  for (std::size_t k = 0; k < caps_.size(); ++k) {
    if (caps_[k] < 0) throw InvalidArgument("state caps must be >= 0");
    stride_[k] = size_;
    const auto radix = static_cast<std::size_t>(caps_[k] + 1);
    if (size_ > ceiling / radix) throw NumericError("truncated state space exceeds the oracle ceiling");
    size_ *= radix;
  }
  if (size_ > ceiling) throw NumericError("truncated state space exceeds the oracle ceiling");
}

TruncatedStateSpace::TruncatedStateSpace(int voxels, int species, Count cap, std::size_t ceiling)
    : TruncatedStateSpace(voxels, species, std::vector<Count>(static_cast<std::size_t>(voxels) * species, cap),
                          ceiling) {}

bool TruncatedStateSpace::contains(std::span<const Count> state) const {
  for (std::size_t k = 0; k < caps_.size(); ++k)
    if (state[k] < 0 || state[k] > caps_[k]) return false;
  return true;
}

std::size_t TruncatedStateSpace::index(std::span<const Count> state) const {
  std::size_t idx = 0;
  for (std::size_t k = 0; k < caps_.size(); ++k) idx += static_cast<std::size_t>(state[k]) * stride_[k];
  return idx;
}

StateMatrix TruncatedStateSpace::state(std::size_t index) const {
  StateMatrix x(nv_, ns_);
  auto data = x.data();
  for (std::size_t k = 0; k < caps_.size(); ++k) {
    const auto radix = static_cast<std::size_t>(caps_[k] + 1);
    data[k] = static_cast<Count>(index % radix);
    index /= radix;
  }
  return x;
}

Generators build_generators(const ModelSystem& m, const TruncatedStateSpace& space) {
  if (space.voxels() != m.voxel_count() || space.species() != m.species_count())
    throw InvalidArgument("state space does not match the model");
  using Triplet = Eigen::Triplet<double, std::int64_t>;
  std::vector<Triplet> tm, td;
  const int ns = m.species_count();
  const auto n = static_cast<std::int64_t>(space.size());
  std::vector<Count> y;
  std::vector<char> clipped(static_cast<std::size_t>(n), 0);

  for (std::int64_t col = 0; col < n; ++col) {
    const StateMatrix x = space.state(static_cast<std::size_t>(col));
    double out_m = 0.0, out_d = 0.0;
    for (int i = 0; i < m.voxel_count(); ++i)
      for (int r = 0; r < m.reaction_count(); ++r) {
        const double a = propensity(m, i, r, x.row(i));
        if (a == 0.0) continue;
        y.assign(x.data().begin(), x.data().end());
        const auto& stoich = m.reactions()[r].stoichiometry;
        for (int s = 0; s < ns; ++s) y[static_cast<std::size_t>(i) * ns + s] += stoich[s];
        if (!space.contains(y)) {
          clipped[static_cast<std::size_t>(col)] = 1;
          continue;
        }
        const auto row = static_cast<std::int64_t>(space.index(y));
        if (row == col) continue;  // zero net change
        tm.emplace_back(row, col, a);
        out_m += a;
      }
    for (const auto& e : m.mesh().edges()) {
      const Count c = x(e.from, e.species);
      if (c == 0) continue;
      if (x(e.to, e.species) >= space.cap(e.to, e.species)) {
        clipped[static_cast<std::size_t>(col)] = 1;
        continue;
      }
      y.assign(x.data().begin(), x.data().end());
      --y[static_cast<std::size_t>(e.from) * ns + e.species];
      ++y[static_cast<std::size_t>(e.to) * ns + e.species];
      const double rate = e.rate * static_cast<double>(c);
      td.emplace_back(static_cast<std::int64_t>(space.index(y)), col, rate);
      out_d += rate;
    }
    if (out_m != 0.0) tm.emplace_back(col, col, -out_m);
    if (out_d != 0.0) td.emplace_back(col, col, -out_d);
  }
  Generators g{SparseMatrix(n, n), SparseMatrix(n, n), std::move(clipped)};
  g.M.setFromTriplets(tm.begin(), tm.end());
  g.D.setFromTriplets(td.begin(), td.end());
  return g;
}

Vector expm_apply(const SparseMatrix& A, double t, const Vector& v, double tol) {
  if (t < 0.0) throw InvalidArgument("expm_apply needs t >= 0");
  if (t == 0.0) return v;
  double lambda = 0.0;
  for (std::int64_t j = 0; j < A.outerSize(); ++j) lambda = std::max(lambda, -A.coeff(j, j));
  if (lambda == 0.0) return v;
  const double q_total = lambda * t;
  const int steps = std::max(1, static_cast<int>(std::ceil(q_total / 8.0)));
  const double q = q_total / steps;
  const double tail = std::max(tol / steps, 1e-15);

  Vector result = v;
  for (int step = 0; step < steps; ++step) {
    Vector term = result;
    double w = std::exp(-q);
    double cum = w;
    Vector acc = w * term;
    for (int k = 1; 1.0 - cum > tail; ++k) {
      term += (A * term) / lambda;
      w *= q / k;
      cum += w;
      acc += w * term;
      if (k > 100000) throw NumericError("uniformization did not converge");
    }
    result = acc;
  }
  return result;
}

Vector point_mass(const TruncatedStateSpace& space, const StateMatrix& x) {
  if (!space.contains(x.data())) throw InvalidArgument("state lies outside the truncated space");
  Vector v = Vector::Zero(static_cast<Eigen::Index>(space.size()));
  v(static_cast<Eigen::Index>(space.index(x.data()))) = 1.0;
  return v;
}

Moments moments(const TruncatedStateSpace& space, const Vector& p) {
  Moments mo{Field(space.voxels(), space.species()), Field(space.voxels(), space.species()),
             Field(space.voxels(), space.species())};
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    if (p(k) == 0.0) continue;
    const auto x = space.state(static_cast<std::size_t>(k));
    for (int i = 0; i < space.voxels(); ++i)
      for (int s = 0; s < space.species(); ++s) {
        const double c = static_cast<double>(x(i, s));
        mo.mean(i, s) += c * p(k);
        mo.second(i, s) += c * c * p(k);
      }
  }
  for (std::size_t k = 0; k < mo.mean.values.size(); ++k)
    mo.variance.values[k] = mo.second.values[k] - mo.mean.values[k] * mo.mean.values[k];
  return mo;
}

double boundary_mass(const Generators& g, const Vector& p) {
  double mass = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k)
    if (g.clipped[static_cast<std::size_t>(k)]) mass += std::abs(p(k));
  return mass;
}

LocalErrorTruth exact_local_error(const Generators& g, const TruncatedStateSpace& space, const StateMatrix& x0,
                                  double dt, double tol) {
  const Vector delta = point_mass(space, x0);
  const SparseMatrix full = g.M + g.D;
  const Vector exact = expm_apply(full, dt, delta, tol);
  const Vector split = expm_apply(g.M, dt, expm_apply(g.D, dt, delta, tol), tol);
  LocalErrorTruth out;
  out.pdf_error = exact - split;
  // Moments of the difference vector directly, so the O(dt^2) signal is
  // not lost to cancellation between two O(1) moments.
  const auto diff = moments(space, out.pdf_error);
  out.mean = diff.mean;
  out.second_moment = diff.second;
  const auto me = moments(space, exact);
  const auto ms = moments(space, split);
  out.variance = Field(space.voxels(), space.species());
  for (std::size_t k = 0; k < out.variance.values.size(); ++k)
    out.variance.values[k] = me.variance.values[k] - ms.variance.values[k];
  out.boundary_mass = std::max(boundary_mass(g, exact), boundary_mass(g, split));
  return out;
}

Vector commutator_apply(const Generators& g, const Vector& v, double dt) {
  Vector c = g.D * (g.M * v) - g.M * (g.D * v);
  if (dt != 0.0) c *= 0.5 * dt * dt;
  return c;
}

GlobalMeans global_means(const Generators& g, const TruncatedStateSpace& space, const StateMatrix& x0, double T,
                         double dt, double tol) {
  const Vector delta = point_mass(space, x0);
  const SparseMatrix full = g.M + g.D;
  const Vector exact = expm_apply(full, T, delta, tol);
  const long steps = std::lround(T / dt);
  if (steps < 1 || std::abs(steps * dt - T) > 1e-9 * T) throw InvalidArgument("T must be a multiple of dt");
  Vector split = delta;
  for (long k = 0; k < steps; ++k) split = expm_apply(g.M, dt, expm_apply(g.D, dt, split, tol), tol);
  return {moments(space, exact).mean, moments(space, split).mean};
}

}  // namespace rdme::oracle
