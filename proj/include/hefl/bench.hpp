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

#ifndef HEFL_BENCH_HPP_
#define HEFL_BENCH_HPP_

// Micro-benchmarks for the HE primitives, DHFA and the simulated ledger.
// Times are wall-clock medians and therefore machine-specific; the ledger
// suite is measured in simulation ticks and is deterministic.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace hefl::bench {

struct Options {
  size_t reps = 10;
  uint64_t seed = 1;
  /// Key size for he_ops and dhfa.
  unsigned key_bits = 512;
  /// Sweep for he_keygen.
  std::vector<unsigned> keygen_bits = {128, 256, 512, 1024, 2048};
  /// DHFA shape: parameter count, clients, and EC counts swept.
  size_t dhfa_width = 276;
  size_t dhfa_clients = 3;
  std::vector<size_t> dhfa_ecs = {2, 3, 7};
  /// Ledger sweep: tx sent per tick.
  std::vector<size_t> send_rates = {1, 2, 4, 6, 8, 10, 12, 15, 20, 30, 40};
  size_t ledger_ticks = 60;
  size_t batch_max_txs = 10;
};

struct Point {
  std::string name;   // measured quantity
  double x = 0;       // sweep coordinate (bits, P, send rate); 0 if none
  double median = 0;
  std::string unit;
  size_t reps = 0;
};

struct Report {
  std::string suite;
  std::vector<Point> points;

  /// Points named `name`, in sweep order.
  std::vector<Point> Series(const std::string& name) const;
  nlohmann::json ToJson() const;
  std::string ToCsv() const;
};

std::vector<std::string> SuiteNames();

/// Throws kInvalidArgument for an unknown suite.
Report RunSuite(const std::string& suite, const Options& options = {});

double Median(std::vector<double> v);

}  // namespace hefl::bench

#endif  // HEFL_BENCH_HPP_
