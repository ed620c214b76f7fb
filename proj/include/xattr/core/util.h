/*
 * Copyright 2026 The xattr Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Small numeric and scheduling helpers: portable seeded randomness,
// pairwise summation and an index-parallel loop.

#ifndef XATTR_CORE_UTIL_H_
#define XATTR_CORE_UTIL_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace xattr {

// Stable 64-bit FNV-1a; std::hash is not stable across toolchains.
std::uint64_t stable_hash(std::string_view text);

// Seed for per-instance randomness, independent of scheduling order.
inline std::uint64_t instance_seed(std::uint64_t seed, std::string_view id) {
  return seed ^ stable_hash(id);
}

// mt19937_64 plus distribution code written out here, because the standard
// distributions are implementation-defined and would break bit-exact
// reproducibility across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, bound). bound must be > 0.
  std::size_t below(std::size_t bound);
  bool bernoulli(double p) { return uniform() < p; }
  // Standard normal via Box-Muller.
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[below(i)]);
    }
  }

  // Identity permutation of [0, n) shuffled.
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

// Pairwise (cascade) summation; result independent of thread scheduling.
double pairwise_sum(std::span<const double> values);
double pairwise_mean(std::span<const double> values);

// Worker count from XATTR_THREADS (default: hardware concurrency, min 1).
std::size_t configured_threads();

// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index is
// processed exactly once; results must be written to per-index slots.
// The first exception thrown by any worker is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  std::size_t threads = configured_threads());

}  // namespace xattr

#endif  // XATTR_CORE_UTIL_H_
