#include "curvflow/random.hpp"

#include <cstdlib>
#include <string>
#include <thread>

namespace curvflow {

Rng make_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                std::uint64_t tag) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(seed), hi(seed), lo(a), hi(a),
                    lo(b),    hi(b),    lo(tag), hi(tag)};
  return Rng(seq);
}

void fill_normal(Rng& rng, double* out, std::size_t count) {
  boost::random::normal_distribution<double> dist(0.0, 1.0);
  for (std::size_t i = 0; i < count; ++i) out[i] = dist(rng);
}

std::uint64_t fnv1a64(const void* data, std::size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

unsigned worker_threads() {
  if (const char* env = std::getenv("CURVFLOW_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v >= 1) return static_cast<unsigned>(v);
    } catch (...) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace curvflow
