// Copyright 2026 The hefl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HEFL_RNG_HPP_
#define HEFL_RNG_HPP_

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace hefl {

/// Named, seedable randomness source. Every probabilistic operation in the
/// library draws from one of these so that runs replay bit-for-bit.
///
/// Derived draws (bounded integers, reals, normals) are implemented here
/// rather than through <random> distributions, whose outputs differ between
/// standard library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed, std::string name = "root")
      : name_(std::move(name)), seed_(seed), engine_(seed) {}

  const std::string& name() const { return name_; }
  uint64_t seed() const { return seed_; }

  uint64_t NextU64() { return engine_(); }

  /// Uniform in [0, bound). bound must be positive.
  uint64_t UniformBelow(uint64_t bound);

  /// Uniform in [0, 1).
  double UniformReal();

  /// Uniform in [lo, hi).
  double UniformReal(double lo, double hi) {
    return lo + (hi - lo) * UniformReal();
  }

  double Normal(double mean = 0.0, double stddev = 1.0);

  /// Independent child stream; the child seed depends only on this stream's
  /// seed and the label, never on how many values were drawn so far.
  Rng Fork(std::string_view label) const;

 private:
  std::string name_;
  uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace hefl

#endif  // HEFL_RNG_HPP_
