#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace rdme {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// xoshiro256** engine. Satisfies UniformRandomBitGenerator so it can
/// drive the <random> distributions.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on (0, 1].
  double uniform() { return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53; }

  // Exponential waiting time by inverse CDF.
  double exponential(double rate) { return -std::log(uniform()) / rate; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

enum class Phase : std::uint64_t { nsm = 1, reaction = 2, diffusion = 3, ensemble = 4, bench = 5 };

/// Identifies an independent random substream. Every random draw in the
/// engine comes from a stream keyed by where it happens, so trajectories
/// do not depend on how work is scheduled across threads.
struct StreamKey {
  std::uint64_t seed = 0;
  std::uint64_t trajectory = 0;
  std::uint64_t step = 0;
  std::uint64_t voxel = 0;
  Phase phase = Phase::nsm;
};

inline std::uint64_t stream_hash(const StreamKey& k) {
  std::uint64_t h = k.seed;
  std::uint64_t acc = splitmix64(h);
  for (std::uint64_t part : {k.trajectory, k.step, k.voxel, static_cast<std::uint64_t>(k.phase)}) {
    std::uint64_t mix = acc ^ (part * 0xd6e8feb86659fd93ULL);
    acc = splitmix64(mix);
  }
  return acc;
}

inline Rng make_stream(const StreamKey& k) { return Rng(stream_hash(k)); }

}  // namespace rdme
