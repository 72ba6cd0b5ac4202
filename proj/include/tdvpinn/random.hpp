#pragma once

#include <cstdint>
#include <random>

namespace tdvpinn {

/// Seeded generator with a portable uniform draw (53 random mantissa bits),
/// so sampled points do not depend on the standard library's distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace tdvpinn
