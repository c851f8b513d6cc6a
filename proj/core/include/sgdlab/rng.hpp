#pragma once

#include <cstdint>
#include <random>

namespace sgdlab {

/// SplitMix64 finalizer. Used to turn (master seed, run index) into
/// well-separated engine seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed of the stream owned by run `index`. Depends only on its arguments, so
/// the order in which runs are scheduled cannot change any draw.
std::uint64_t derive_stream_seed(std::uint64_t master_seed, std::uint64_t index) noexcept;

/// One independent random stream. Uniform variates are built directly from
/// the engine's bits (not std::uniform_real_distribution) so results are
/// identical across standard library implementations.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  static RngStream for_run(std::uint64_t master_seed, std::uint64_t index) {
    return RngStream(derive_stream_seed(master_seed, index));
  }

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace sgdlab
