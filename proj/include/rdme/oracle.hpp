#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <vector>

#include "rdme/model.hpp"
#include "rdme/propensity.hpp"

namespace rdme::oracle {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, std::int64_t>;
using Vector = Eigen::VectorXd;

inline constexpr std::size_t kDefaultCeiling = 2'000'000;

/// Every state with 0 <= x_is <= cap_is, enumerated in mixed radix.
class TruncatedStateSpace {
 public:
  TruncatedStateSpace(int voxels, int species, std::vector<Count> caps, std::size_t ceiling = kDefaultCeiling);
  // Uniform cap for every (voxel, species).
  TruncatedStateSpace(int voxels, int species, Count cap, std::size_t ceiling = kDefaultCeiling);

  std::size_t size() const { return size_; }
  int voxels() const { return nv_; }
  int species() const { return ns_; }
  Count cap(int i, int s) const { return caps_[static_cast<std::size_t>(i) * ns_ + s]; }

  bool contains(std::span<const Count> state) const;
  std::size_t index(std::span<const Count> state) const;
  StateMatrix state(std::size_t index) const;

 private:
  int nv_, ns_;
  std::vector<Count> caps_;
  std::vector<std::size_t> stride_;
  std::size_t size_ = 1;
};

struct Generators {
  SparseMatrix M;  // reactions
  SparseMatrix D;  // diffusion
  std::vector<char> clipped;  // per state: some transition out of it was dropped
};

// Column j is the out-flow of state j. Transitions that would leave the
// truncated space are dropped with their diagonal term, so every column
// sums to zero.
Generators build_generators(const ModelSystem& m, const TruncatedStateSpace& space);

// exp(tA) v by uniformization with Poisson tail <= tol.
Vector expm_apply(const SparseMatrix& A, double t, const Vector& v, double tol = 1e-12);

Vector point_mass(const TruncatedStateSpace& space, const StateMatrix& x);

struct Moments {
  Field mean;
  Field second;
  Field variance;
};
Moments moments(const TruncatedStateSpace& space, const Vector& p);
// Probability mass on states whose dynamics the truncation changed.
double boundary_mass(const Generators& g, const Vector& p);

struct LocalErrorTruth {
  Vector pdf_error;  // exp(dt(M+D)) d - exp(dt M) exp(dt D) d
  Field mean;
  Field second_moment;
  Field variance;
  double boundary_mass = 0.0;
};

LocalErrorTruth exact_local_error(const Generators& g, const TruncatedStateSpace& space, const StateMatrix& x0,
                                  double dt, double tol = 1e-12);

// (DM - MD) v, optionally scaled by dt^2/2.
Vector commutator_apply(const Generators& g, const Vector& v, double dt = 0.0);

// Means of the exact and Lie-Trotter split solutions at time T.
struct GlobalMeans {
  Field exact;
  Field split;
};
GlobalMeans global_means(const Generators& g, const TruncatedStateSpace& space, const StateMatrix& x0, double T,
                         double dt, double tol = 1e-12);

}  // namespace rdme::oracle
