#include "fracheat/rng.hpp"

#include <cmath>
#include <numbers>

namespace fracheat {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

namespace {
constexpr double kTwoPow53Inv = 1.0 / 9007199254740992.0;
}

double RandomStream::uniform() noexcept {
  return static_cast<double>(engine_() >> 11) * kTwoPow53Inv;
}

double RandomStream::uniform_open() noexcept {
  return (static_cast<double>(engine_() >> 11) + 0.5) * kTwoPow53Inv;
}

double RandomStream::normal() noexcept {
  const double u1 = uniform_open();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double RandomStream::exponential() noexcept { return -std::log(uniform_open()); }

RandomStream derive_stream(std::uint64_t master, std::uint64_t index,
                           std::uint64_t domain) noexcept {
  const std::uint64_t key = splitmix64(master ^ splitmix64(domain + 0x632BE59BD9B4E019ULL));
  return RandomStream(splitmix64(key + splitmix64(index + 1)));
}

}  // namespace fracheat
