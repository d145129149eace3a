#pragma once

#include <cstdint>
#include <random>

namespace fracheat {

/// SplitMix64 finaliser.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// One independent random stream. Wraps std::mt19937_64 and defines the
/// variate transforms explicitly so draws are reproducible bit-for-bit:
///   uniform()      = (engine() >> 11) * 2^-53            in [0, 1)
///   uniform_open() = ((engine() >> 11) + 0.5) * 2^-53    in (0, 1)
///   normal()       = sqrt(-2 ln u1) cos(2 pi u2)          (u1 open, u2 half-open)
///   exponential()  = -ln(u)                               (u open)
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  double uniform() noexcept;
  double uniform_open() noexcept;
  double normal() noexcept;
  double exponential() noexcept;

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Stream-derivation rule (part of the reproducibility contract):
///   key  = splitmix64(master ^ splitmix64(domain + 0x632BE59BD9B4E019))
///   seed = splitmix64(key + splitmix64(index + 1))
/// and the stream is RandomStream(seed). `domain` separates independent
/// ensembles drawn under one master seed (e.g. Z_t vs Z_1 samples).
RandomStream derive_stream(std::uint64_t master, std::uint64_t index,
                           std::uint64_t domain = 0) noexcept;

}  // namespace fracheat
