#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace curvflow {

/// Engine used for every random stream in the project.
using Rng = std::mt19937_64;

/// Independent stream for (seed, a, b, tag). Any change in one of the keys
/// produces an unrelated stream; the mapping is fixed across platforms.
Rng make_stream(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0,
                std::uint64_t tag = 0);

// Ziggurat normal; deterministic across standard libraries, unlike
// std::normal_distribution.
inline double standard_normal(Rng& rng) {
  boost::random::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

inline double uniform01(Rng& rng) {
  boost::random::uniform_01<double> dist;
  return dist(rng);
}

/// Fill with i.i.d. standard normals.
void fill_normal(Rng& rng, double* out, std::size_t count);

/// Stable 64-bit FNV-1a hash, used for config provenance.
std::uint64_t fnv1a64(const void* data, std::size_t size);

/// Number of worker threads: CURVFLOW_THREADS when set, else hardware.
unsigned worker_threads();

/// Calls body(i) for i in [0, count) on a worker pool. Each index runs exactly
/// once; callers write results into index-addressed slots.
template <class Body>
void parallel_for(std::size_t count, Body&& body);

}  // namespace curvflow

#include "curvflow/detail/parallel.hpp"
