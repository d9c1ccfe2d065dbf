#pragma once

#include <cstdint>
#include <cmath>
#include <random>

namespace spcrl {

// Seed mixing (splitmix64). Used to derive independent named streams from one
// master seed so that e.g. adding an extra eval rollout never shifts the
// training sample sequence.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream_tag) {
  return mix64(mix64(master) ^ mix64(stream_tag));
}

// Stream tags for the harness. Fixed constants, part of the reproducibility
// contract: a given (seed, tag) pair always yields the same sample sequence.
namespace stream {
constexpr std::uint64_t context = 1;
constexpr std::uint64_t policy_init = 2;
constexpr std::uint64_t rollout = 3;
constexpr std::uint64_t eval = 4;
constexpr std::uint64_t shuffle = 5;
}  // namespace stream

// mt19937_64 with hand-rolled uniform/normal transforms. The standard
// distributions are implementation-defined, which would break byte-identical
// output across toolchains; Box-Muller over a fixed bit-to-double mapping is
// stable everywhere.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : gen_(mix64(seed)) {}
  RngStream(std::uint64_t master, std::uint64_t stream_tag)
      : gen_(derive_seed(master, stream_tag)) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Inclusive integer range.
  int uniform_int(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next_u64() % span);
  }

  // Standard normal via Box-Muller; the paired sample is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 == 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double std_dev) { return mean + std_dev * normal(); }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace spcrl
