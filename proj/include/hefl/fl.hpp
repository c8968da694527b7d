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

#ifndef HEFL_FL_HPP_
#define HEFL_FL_HPP_

// Online federated traffic-flow learning around the GRU model: bounded
// sliding data windows, supervised pair extraction, one-step-ahead online
// inference, plaintext federated averaging, error metrics, and the traffic
// CSV / model export formats.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <istream>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hefl/gru.hpp"

namespace hefl::fl {

inline constexpr double kDefaultFlowCeiling = 1200.0;
inline constexpr int64_t kSlotMinutes = 5;

struct TrafficSample {
  int64_t minute = 0;  // minutes since the Unix epoch, multiple of 5
  std::string detector_id;
  double flow = 0.0;  // vehicles per 5 minutes
};

class DataWindow {
 public:
  explicit DataWindow(size_t max_size) : max_size_(max_size) {}

  size_t max_size() const { return max_size_; }
  size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const std::deque<TrafficSample>& samples() const { return samples_; }

  /// Flows of the latest `count` samples, oldest first.
  std::vector<double> LatestFlows(size_t count) const;

 private:
  friend DataWindow UpdateDataset(const DataWindow&,
                                  std::span<const TrafficSample>);
  size_t max_size_;
  std::deque<TrafficSample> samples_;
};

/// old + incoming, then drop the oldest until size <= max_size. Incoming must
/// be strictly after the window's last sample and strictly increasing.
DataWindow UpdateDataset(const DataWindow& old,
                         std::span<const TrafficSample> incoming);

/// Sliding (input_shape -> next) pairs, normalized by `ceiling`.
std::vector<Sample> SupervisedPairs(const DataWindow& window,
                                    size_t input_shape, double ceiling);

struct InferenceCurves {
  std::vector<double> base;
  std::vector<double> fed;
  std::vector<double> truth;
};

/// Rolls both models one step ahead over input_shape incoming samples,
/// sliding the prediction window after each observation. Outputs are in
/// flow units.
InferenceCurves OnlineInference(const GruModel& global, const GruModel& baseline,
                                const DataWindow& window,
                                std::span<const TrafficSample> incoming,
                                double ceiling = kDefaultFlowCeiling);

/// Elementwise arithmetic mean (equal client weights).
ParamVector PlaintextFedAvg(std::span<const ParamVector> vectors);

struct Metrics {
  double mae = 0.0;
  double mse = 0.0;
  double rmse = 0.0;
  double mape = 0.0;  // fraction, over truth > 0 only
  size_t mape_skipped = 0;
};

Metrics ComputeMetrics(std::span<const double> pred,
                       std::span<const double> truth);

// ---------------------------------------------------------------------------
// Formats

/// Parses `timestamp,detector_id,flow`. Timestamps are integer minutes or
/// ISO-8601 `YYYY-MM-DDTHH:MM[:SS][Z]` (UTC). Samples must sit on the 5-minute
/// grid, flows must be >= 0, and timestamps increase strictly per detector.
std::map<std::string, std::vector<TrafficSample>> ReadTrafficCsv(
    std::istream& in);

std::string WriteTrafficCsv(
    const std::map<std::string, std::vector<TrafficSample>>& streams);

int64_t ParseTimestamp(const std::string& text);

/// One decimal weight per line, canonical layout order.
std::string ExportParamsCsv(const ParamVector& params);
ParamVector ImportParamsCsv(std::istream& in);

/// Shortest round-trip decimal form.
std::string FormatDouble(double v);

}  // namespace hefl::fl

#endif  // HEFL_FL_HPP_
