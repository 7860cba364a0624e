#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace heraldsim {

/// Shortest round-trip decimal form; identical bits give identical text.
inline std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed splitting rule: every random stream (synthesis event, bootstrap
/// resample, ...) gets splitmix64(splitmix64(master ^ tag) + index), so
/// results never depend on how work is divided among workers.
enum class SeedStream : std::uint64_t {
  kSynthesis = 0x53594e5448ULL,
  kBackground = 0x424b4752ULL,
  kBootstrap = 0x424f4f54ULL,
  kDirectSampling = 0x44495245ULL,
};

inline std::uint64_t derive_seed(std::uint64_t master, SeedStream stream, std::uint64_t index) {
  return splitmix64(splitmix64(master ^ static_cast<std::uint64_t>(stream)) + index);
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads, contiguous chunks per
/// thread. The first exception thrown by any worker is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(jobs == 0 ? 1 : jobs, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      fn(i);
    }
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        const std::size_t end = std::min(n, (w + 1) * chunk);
        for (std::size_t i = w * chunk; i < end; ++i) {
          fn(i);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) {
    t.join();
  }
  for (auto& e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }
}

}  // namespace heraldsim
