#pragma once

#include <cstdint>
#include <random>

namespace domeport {

// Identifier written into outputs so sweeps can be reproduced elsewhere.
inline constexpr const char* kRngAlgorithm = "mt19937_64+splitmix64-split+box-muller/v1";

uint64_t SplitMix64(uint64_t x);

// Seed of child stream `stream` derived from `seed`. Parallel and serial runs
// draw identical numbers when every work item owns its child stream.
uint64_t SplitSeed(uint64_t seed, uint64_t stream);

// Portable generator: the standard engine is fully specified, the
// distributions are implemented here.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t NextU64() { return engine_(); }
  // Uniform in [0, 1).
  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double Uniform(double low, double high) {
    return low + (high - low) * Uniform();
  }
  double Normal();
  double Normal(double mean, double sigma) { return mean + sigma * Normal(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace domeport
