#pragma once

// Deterministic parallel Monte Carlo driver.
//
// Replicate i always draws from derive_stream(seed, i, domain). Replicates are
// grouped in fixed chunks of kChunkSize; each chunk is reduced sequentially
// and chunk results are merged in chunk order. The output is therefore
// bit-identical for a given seed whatever the worker count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

#include "fracheat/rng.hpp"

namespace fracheat {

inline constexpr std::size_t kChunkSize = 256;

struct McOptions {
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::uint64_t config_hash = 0;
};

/// Welford accumulator with Chan's pairwise merge.
struct RunningStats {
  std::size_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void push(double x) noexcept {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }

  void merge(const RunningStats& o) noexcept {
    if (o.count == 0) return;
    if (count == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(count);
    const double nb = static_cast<double>(o.count);
    const double n = na + nb;
    const double delta = o.mean - mean;
    mean += delta * (nb / n);
    m2 += o.m2 + delta * delta * (na * nb / n);
    count += o.count;
  }

  double variance() const noexcept {
    return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0;
  }
  double standard_error() const noexcept {
    return count > 1 ? std::sqrt(variance() / static_cast<double>(count)) : 0.0;
  }
};

/// Runs fn(i) for i in [0, n) on up to `workers` threads. fn must only touch
/// state owned by index i. The first exception thrown is rethrown.
template <class Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
  workers = std::max(1u, workers);
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n);
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned count = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  pool.reserve(count);
  for (unsigned w = 0; w < count; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/// Monte Carlo result record. rejected counts replicates dropped by an
/// estimator guard (overflow, window exit).
struct MCEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::size_t rejected = 0;
};

inline MCEstimate make_estimate(const RunningStats& s, const McOptions& opt,
                                std::size_t rejected = 0) {
  return MCEstimate{s.mean, s.standard_error(), s.count, opt.seed, opt.config_hash, rejected};
}

struct EnsembleResult {
  std::vector<RunningStats> stats;  // one per output slot
  std::size_t rejected = 0;
};

/// fn(RandomStream&, std::size_t index, std::span<double> out) -> bool.
/// Returning false rejects the replicate (counted, not averaged).
template <class Fn>
EnsembleResult run_ensemble(std::size_t n, std::size_t width, std::uint64_t seed,
                            std::uint64_t domain, unsigned workers, Fn&& fn) {
  const std::size_t chunks = (n + kChunkSize - 1) / kChunkSize;
  std::vector<EnsembleResult> partial(chunks);
  parallel_for(chunks, workers, [&](std::size_t c) {
    EnsembleResult& r = partial[c];
    r.stats.assign(width, RunningStats{});
    std::vector<double> out(width);
    const std::size_t end = std::min(n, (c + 1) * kChunkSize);
    for (std::size_t i = c * kChunkSize; i < end; ++i) {
      RandomStream rng = derive_stream(seed, i, domain);
      std::fill(out.begin(), out.end(), 0.0);
      if (!fn(rng, i, std::span<double>(out))) {
        ++r.rejected;
        continue;
      }
      for (std::size_t k = 0; k < width; ++k) r.stats[k].push(out[k]);
    }
  });
  EnsembleResult total;
  total.stats.assign(width, RunningStats{});
  for (const auto& r : partial) {
    for (std::size_t k = 0; k < width; ++k) total.stats[k].merge(r.stats[k]);
    total.rejected += r.rejected;
  }
  return total;
}

/// Collects fn(rng, i) for every replicate, in index order.
template <class Fn>
std::vector<double> collect_samples(std::size_t n, std::uint64_t seed, std::uint64_t domain,
                                    unsigned workers, Fn&& fn) {
  std::vector<double> out(n);
  const std::size_t chunks = (n + kChunkSize - 1) / kChunkSize;
  parallel_for(chunks, workers, [&](std::size_t c) {
    const std::size_t end = std::min(n, (c + 1) * kChunkSize);
    for (std::size_t i = c * kChunkSize; i < end; ++i) {
      RandomStream rng = derive_stream(seed, i, domain);
      out[i] = fn(rng, i);
    }
  });
  return out;
}

}  // namespace fracheat
