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

#ifndef HEFL_SIM_HPP_
#define HEFL_SIM_HPP_

// Simulation driver: configuration, synthetic traffic, the per-round
// pipeline (collect -> infer -> train -> encrypt -> bottom-layer commit ->
// DHFA -> top-layer commit -> decrypt) and report export.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hefl/fl.hpp"
#include "hefl/phe.hpp"
#include "json.hpp"

namespace hefl::sim {

struct Peak {
  double slot = 0;    // center, in 5-minute slots from midnight
  double width = 1;   // standard deviation in slots
  double weight = 1;
};

struct DetectorProfile {
  std::string id;
  double offset = 0;     // added to the base level
  double phase = 0;      // peak shift in slots
  double magnitude = 1;  // multiplies the amplitude
};

struct SyntheticTrafficSpec {
  size_t period = 288;
  double base = 60;
  double amplitude = 400;
  std::vector<Peak> peaks = {{96, 14, 1.0}, {210, 20, 0.85}};
  double noise_std = 10;
  size_t days = 1;
  int64_t start_minute = 0;
  /// Explicit profiles; detectors not listed get seeded jitter below.
  std::vector<DetectorProfile> profiles;
  double offset_jitter = 20;
  double phase_jitter = 6;
  double magnitude_jitter = 0.15;
  /// Every detector replays the first detector's stream.
  bool identical = false;
};

SyntheticTrafficSpec SyntheticSpecFromJson(const nlohmann::json& j);
nlohmann::json ToJson(const SyntheticTrafficSpec& s);

/// period*days samples per detector, nonnegative, deterministic per seed.
std::map<std::string, std::vector<fl::TrafficSample>> GenerateSynthetic(
    const SyntheticTrafficSpec& spec, const std::vector<std::string>& detectors,
    uint64_t seed);

DetectorProfile ResolveProfile(const SyntheticTrafficSpec& spec,
                               const std::string& detector, uint64_t seed);

/// Stand-alone data generation: {"seed", "detectors", "synthetic"}.
/// Detectors default to the ids listed in synthetic.profiles.
struct GenDataRequest {
  uint64_t seed = 0;
  std::vector<std::string> detectors;
  SyntheticTrafficSpec spec;
};

GenDataRequest GenDataFromJson(const nlohmann::json& j,
                               std::optional<uint64_t> seed_override = std::nullopt);
GenDataRequest LoadGenData(const std::filesystem::path& path,
                           std::optional<uint64_t> seed_override = std::nullopt);

// ---------------------------------------------------------------------------

struct RegionConfig {
  std::string region_id;
  std::vector<std::string> detector_ids;
  size_t max_data_size = 24;
  size_t input_shape = 12;
  size_t epochs = 5;
  double learning_rate = 0.01;
  std::vector<size_t> hidden = {5, 5};
  double flow_ceiling = fl::kDefaultFlowCeiling;
  double dropout = 0;
};

struct DhfaConfig {
  size_t n_ecs = 3;
  unsigned key_bits = 512;
  uint64_t scale = phe::FixedPointCodec::kDefaultScale;
};

struct LedgerConfig {
  size_t peers = 4;
  size_t orderers = 1;
  size_t endorsement_threshold = 0;  // 0 = majority
  size_t batch_max_txs = 10;
  uint64_t batch_timeout_ticks = 1;
  uint64_t round_timeout_ticks = 0;  // 0 = wait for every client
};

struct Mute {
  std::string detector_id;
  int64_t round = 0;
};

struct DataSource {
  std::string kind = "synthetic";  // or "csv"
  SyntheticTrafficSpec synthetic;
  std::string csv_path;
};

struct SimulationConfig {
  uint64_t seed = 0;
  int64_t rounds = 10;
  std::string federation_id = "hefl";
  std::vector<RegionConfig> regions;
  DhfaConfig dhfa;
  LedgerConfig ledger;
  std::vector<Mute> mutes;
  DataSource data;

  /// One region of three detectors with the lightweight (5,5) model,
  /// 512-bit keys, 10 rounds.
  static SimulationConfig Defaults(uint64_t seed);
  /// Throws kConfig.
  void Validate() const;
};

/// Unknown keys and wrong types are config errors. `seed` is required
/// unless `seed_override` is given.
SimulationConfig ConfigFromJson(const nlohmann::json& j,
                                std::optional<uint64_t> seed_override = std::nullopt);
nlohmann::json ToJson(const SimulationConfig& c);

/// Reads a config file, or a run manifest (uses its "config" member).
SimulationConfig LoadConfig(const std::filesystem::path& path,
                            std::optional<uint64_t> seed_override = std::nullopt);

// ---------------------------------------------------------------------------

struct DetectorRound {
  std::string detector_id;
  fl::Metrics base;
  fl::Metrics fed;
  double train_loss_local = 0;  // mean over epochs
  double train_loss_base = 0;
  bool contributed = true;
};

struct RoundReport {
  int64_t round = 0;
  std::string region_id;
  std::vector<DetectorRound> detectors;
  size_t contributors = 0;
  bool timed_out = false;
  uint64_t bl_height = 0;
  uint64_t tl_height = 0;
  size_t finisher = 0;
  std::string dhfa_digest;
  double mean_train_loss = 0;
  double dhfa_wall_ms = 0;  // measured; never written to output files
};

struct CurveRow {
  int64_t round = 0;
  size_t step = 0;
  std::string detector_id;
  double truth = 0;
  double base = 0;
  double fed = 0;
};

/// Per (region, round, detector) vectors, kept only on request.
struct RoundTrace {
  int64_t round = 0;
  std::string region_id;
  std::map<std::string, fl::ParamVector> local;     // trained, pre-encryption
  std::map<std::string, fl::ParamVector> global;    // decrypted DHFA output
  std::map<std::string, fl::ParamVector> baseline;
};

struct RunOptions {
  bool keep_trace = false;
  /// false: skip encryption, ledger and DHFA; each client keeps its own
  /// local model (a no-federation replay).
  bool federate = true;
};

struct SimulationResult {
  std::vector<RoundReport> reports;
  std::vector<CurveRow> curves;
  std::map<std::string, std::string> chain_dumps;  // file stem -> JSON-lines
  std::map<std::string, fl::ParamVector> final_fed;
  std::map<std::string, fl::ParamVector> final_base;
  std::map<std::string, fl::ModelShape> shapes;     // per detector
  std::vector<RoundTrace> traces;
  std::map<std::string, phe::KeyPair> region_keys;  // in memory only
  std::map<std::string, phe::KeyPair> client_keys;
};

/// Errors raised inside a round carry "round <r>, region <id>: " in their
/// message and keep the original code.
SimulationResult RunSimulation(const SimulationConfig& config,
                               const RunOptions& options = {});

/// metrics.csv, curves.csv, rounds.csv, losses.csv, chains/*.jsonl,
/// models/*.csv, manifest.json. Returns the written relative paths.
std::vector<std::string> ExportReports(const SimulationConfig& config,
                                       const SimulationResult& result,
                                       const std::filesystem::path& out_dir);

std::string MetricsCsv(const SimulationResult& result);
std::string CurvesCsv(const SimulationResult& result);

// ---------------------------------------------------------------------------

/// Estimated DHFA milliseconds: W * (226 * (P - 1) + 230).
uint64_t ComplexityModelMs(uint64_t w, uint64_t p);

}  // namespace hefl::sim

#endif  // HEFL_SIM_HPP_
