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

#include "hefl/sim.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hefl/dhfa.hpp"
#include "hefl/error.hpp"
#include "hefl/ledger.hpp"

namespace hefl::sim {
namespace {

ErrorCode CodeOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kInvalidArgument;
}

TEST(Complexity, PublishedExamples) {
  EXPECT_EQ(ComplexityModelMs(276, 3), 188232u);
  EXPECT_EQ(ComplexityModelMs(1, 1), 230u);
  EXPECT_EQ(ComplexityModelMs(23001, 3), 15686682u);
}

TEST(Complexity, SweepMatchesExpandedForm) {
  // Expanded: W*(226P + 4).
  for (uint64_t w : {1u, 9u, 276u, 23001u, 1000000u}) {
    for (uint64_t p = 1; p <= 64; ++p) {
      EXPECT_EQ(ComplexityModelMs(w, p), w * (226 * p + 4));
    }
  }
  EXPECT_EQ(CodeOf([] { ComplexityModelMs(0, 3); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([] { ComplexityModelMs(UINT64_MAX, 5); }), ErrorCode::kDomain);
}

TEST(Synthetic, DeterministicAndNonNegative) {
  SyntheticTrafficSpec spec;
  spec.days = 2;
  spec.noise_std = 200;
  const auto a = GenerateSynthetic(spec, {"a", "b"}, 5);
  const auto b = GenerateSynthetic(spec, {"a", "b"}, 5);
  ASSERT_EQ(a.at("a").size(), 576u);
  for (const auto& id : {"a", "b"}) {
    for (size_t t = 0; t < 576; ++t) {
      EXPECT_EQ(a.at(id)[t].flow, b.at(id)[t].flow);
      EXPECT_GE(a.at(id)[t].flow, 0.0);
      EXPECT_EQ(a.at(id)[t].minute, static_cast<int64_t>(t) * 5);
    }
  }
  const auto c = GenerateSynthetic(spec, {"a", "b"}, 6);
  EXPECT_NE(a.at("a")[100].flow, c.at("a")[100].flow);
}

TEST(Synthetic, NoiselessIsPeriodic) {
  SyntheticTrafficSpec spec;
  spec.days = 3;
  spec.noise_std = 0;
  const auto s = GenerateSynthetic(spec, {"x"}, 9).at("x");
  for (size_t t = 0; t + 288 < s.size(); ++t) EXPECT_EQ(s[t].flow, s[t + 288].flow);
}

TEST(Synthetic, OffsetsShiftMeans) {
  SyntheticTrafficSpec spec;
  spec.amplitude = 400;
  spec.days = 7;
  spec.noise_std = 5;
  spec.profiles = {{"a", 0, 0, 1}, {"b", 50, 0, 1}, {"c", 120, 0, 1}};
  const auto s = GenerateSynthetic(spec, {"a", "b", "c"}, 3);
  auto mean = [](const std::vector<fl::TrafficSample>& v) {
    double m = 0;
    for (const auto& x : v) m += x.flow;
    return m / static_cast<double>(v.size());
  };
  EXPECT_NEAR(mean(s.at("b")) - mean(s.at("a")), 50, 0.5);
  EXPECT_NEAR(mean(s.at("c")) - mean(s.at("a")), 120, 1.2);
}

TEST(Synthetic, IdenticalDetectorsShareOneStream) {
  SyntheticTrafficSpec spec;
  spec.identical = true;
  const auto s = GenerateSynthetic(spec, {"p", "q"}, 1);
  for (size_t t = 0; t < 288; ++t) EXPECT_EQ(s.at("p")[t].flow, s.at("q")[t].flow);
}

TEST(Config, JsonRoundtripAndStrictness) {
  auto c = SimulationConfig::Defaults(17);
  auto j = ToJson(c);
  auto back = ConfigFromJson(j);
  EXPECT_EQ(ToJson(back), j);
  auto unknown = j;
  unknown["colour"] = "blue";
  EXPECT_EQ(CodeOf([&] { ConfigFromJson(unknown); }), ErrorCode::kConfig);
  auto no_seed = j;
  no_seed.erase("seed");
  EXPECT_EQ(CodeOf([&] { ConfigFromJson(no_seed); }), ErrorCode::kConfig);
  EXPECT_EQ(ConfigFromJson(no_seed, 99).seed, 99u);
  EXPECT_EQ(ConfigFromJson(j, 5).seed, 5u);
  auto neg = j;
  neg["regions"][0]["epochs"] = -1;
  EXPECT_EQ(CodeOf([&] { ConfigFromJson(neg); }), ErrorCode::kConfig);
  auto zero_rounds = j;
  zero_rounds["rounds"] = 0;
  EXPECT_EQ(CodeOf([&] { ConfigFromJson(zero_rounds); }), ErrorCode::kConfig);
  auto bad_mute = j;
  bad_mute["mutes"] = nlohmann::json::array({{{"detector_id", "ghost"}, {"round", 1}}});
  EXPECT_EQ(CodeOf([&] { ConfigFromJson(bad_mute); }), ErrorCode::kConfig);
  auto bad_bits = j;
  bad_bits["dhfa"]["key_bits"] = 300;
  EXPECT_EQ(CodeOf([&] { ConfigFromJson(bad_bits); }), ErrorCode::kConfig);
}

// Small, fast federated configuration.
SimulationConfig Small(uint64_t seed, size_t detectors = 3, int64_t rounds = 3) {
  auto c = SimulationConfig::Defaults(seed);
  c.rounds = rounds;
  c.dhfa.key_bits = 256;
  c.regions[0].detector_ids.clear();
  for (size_t i = 0; i < detectors; ++i) {
    c.regions[0].detector_ids.push_back("det-" + std::to_string(i));
  }
  return c;
}

class SmallRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    config_ = new SimulationConfig(Small(21));
    RunOptions opt;
    opt.keep_trace = true;
    result_ = new SimulationResult(RunSimulation(*config_, opt));
  }
  static void TearDownTestSuite() {
    delete result_;
    delete config_;
  }
  static SimulationConfig* config_;
  static SimulationResult* result_;
};
SimulationConfig* SmallRun::config_ = nullptr;
SimulationResult* SmallRun::result_ = nullptr;

TEST_F(SmallRun, ReportCardinality) {
  EXPECT_EQ(result_->reports.size(), 3u);
  std::istringstream metrics(MetricsCsv(*result_));
  std::string line;
  std::getline(metrics, line);
  EXPECT_EQ(line, "round,detector,model,mae,mse,rmse,mape");
  size_t rows = 0;
  while (std::getline(metrics, line)) ++rows;
  EXPECT_EQ(rows, 3u * 3u * 2u);
  EXPECT_EQ(result_->curves.size(), 3u * 3u * 12u);
  for (const auto& c : result_->curves) {
    EXPECT_GE(c.step, 1u);
    EXPECT_LE(c.step, 12u);
  }
}

TEST_F(SmallRun, GlobalConsistencyAndConservation) {
  const auto& keys = result_->region_keys.at("region-0");
  const auto blocks = ledger::ParseDump(result_->chain_dumps.at("bl-region-0"));
  for (const auto& trace : result_->traces) {
    const auto& first = trace.global.begin()->second;
    for (const auto& [id, g] : trace.global) EXPECT_EQ(g, first) << id;
    // Conservation: committed payload decrypts to the trained vector.
    for (const auto& b : blocks) {
      for (const auto& tx : b.txs) {
        const auto& u = tx.proposal.update;
        if (u.round_number != trace.round) continue;
        const auto cts = phe::DeserializeVector(u.model_parameters);
        const auto dec = dhfa::DecryptParams(keys.priv, keys.pub, cts, config_->dhfa.scale);
        const auto& local = trace.local.at(u.detector_id);
        ASSERT_EQ(dec.size(), local.size());
        for (size_t k = 0; k < dec.size(); ++k) {
          EXPECT_EQ(dec[k], std::nearbyint(local[k] * config_->dhfa.scale) / config_->dhfa.scale);
        }
      }
    }
    // The global model is the FedAvg of the local vectors.
    std::vector<fl::ParamVector> locals;
    for (const auto& [id, v] : trace.local) locals.push_back(v);
    const auto avg = fl::PlaintextFedAvg(locals);
    for (size_t k = 0; k < avg.size(); ++k) {
      EXPECT_LE(std::abs(first[k] - avg[k]), 1.0 / config_->dhfa.scale);
    }
  }
}

TEST_F(SmallRun, LedgerCompleteness) {
  for (const auto& [stem, dump] : result_->chain_dumps) {
    EXPECT_TRUE(ledger::VerifyDump(dump, nullptr).ok) << stem;
    ledger::HmacSigner signer(config_->seed);
    EXPECT_TRUE(ledger::VerifyDump(dump, &signer).ok) << stem;
  }
  const auto bl = ledger::ParseDump(result_->chain_dumps.at("bl-region-0"));
  const auto tl = ledger::ParseDump(result_->chain_dumps.at("tl"));
  std::map<int64_t, size_t> per_round_bl, per_round_tl;
  for (const auto& b : bl) for (const auto& tx : b.txs) per_round_bl[tx.proposal.update.round_number]++;
  for (const auto& b : tl) {
    for (const auto& tx : b.txs) {
      per_round_tl[tx.proposal.update.round_number]++;
      EXPECT_EQ(tx.proposal.update.detector_id, "DHFA");
    }
  }
  for (int64_t r = 1; r <= 3; ++r) {
    EXPECT_EQ(per_round_bl[r], 3u);
    EXPECT_EQ(per_round_tl[r], 1u);
  }
}

TEST_F(SmallRun, BaselineIsolation) {
  RunOptions opt;
  opt.federate = false;
  const auto replay = RunSimulation(*config_, opt);
  for (const auto& [id, params] : result_->final_base) {
    EXPECT_EQ(replay.final_base.at(id), params) << id;
  }
}

TEST_F(SmallRun, Deterministic) {
  const auto again = RunSimulation(*config_);
  EXPECT_EQ(MetricsCsv(again), MetricsCsv(*result_));
  EXPECT_EQ(CurvesCsv(again), CurvesCsv(*result_));
  EXPECT_EQ(again.chain_dumps, result_->chain_dumps);
}

TEST_F(SmallRun, ExportAndManifestReplay) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "hefl_sim_test_a";
  const fs::path dir2 = fs::temp_directory_path() / "hefl_sim_test_b";
  fs::remove_all(dir);
  fs::remove_all(dir2);
  const auto files = ExportReports(*config_, *result_, dir);
  EXPECT_NE(std::find(files.begin(), files.end(), "chains/tl.jsonl"), files.end());
  const auto cfg = LoadConfig(dir / "manifest.json");
  ExportReports(cfg, RunSimulation(cfg), dir2);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  for (const auto& f : files) EXPECT_EQ(slurp(dir / f), slurp(dir2 / f)) << f;
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST(Simulation, IdenticalClientsAverageToThemselves) {
  auto c = Small(4, 7, 3);
  c.data.synthetic.identical = true;
  RunOptions opt;
  opt.keep_trace = true;
  const auto res = RunSimulation(c, opt);
  const double unit = 1.0 / static_cast<double>(c.dhfa.scale);
  double worst_curve = 0;
  for (const auto& t : res.traces) {
    const auto& local0 = t.local.begin()->second;
    for (const auto& [id, local] : t.local) EXPECT_EQ(local, local0);
    for (const auto& [id, g] : t.global) {
      for (size_t k = 0; k < g.size(); ++k) EXPECT_LE(std::abs(g[k] - local0[k]), unit);
    }
  }
  for (const auto& row : res.curves) {
    worst_curve = std::max(worst_curve, std::abs(row.fed - row.base) / fl::kDefaultFlowCeiling);
  }
  std::cout << "max |FED - BASE| (normalized): " << worst_curve << "\n";
  EXPECT_LE(worst_curve, unit);
}

TEST(Simulation, MutedClientTimeoutPath) {
  auto c = Small(8, 7, 3);
  c.ledger.round_timeout_ticks = 4;
  c.mutes = {{"det-3", 2}};
  const auto res = RunSimulation(c);
  ASSERT_EQ(res.reports.size(), 3u);
  EXPECT_EQ(res.reports[0].contributors, 7u);
  EXPECT_FALSE(res.reports[0].timed_out);
  EXPECT_EQ(res.reports[1].contributors, 6u);
  EXPECT_TRUE(res.reports[1].timed_out);
  EXPECT_EQ(res.reports[2].contributors, 7u);
  // Everyone, the muted client included, holds the same global model.
  const auto& first = res.final_fed.begin()->second;
  for (const auto& [id, g] : res.final_fed) EXPECT_EQ(g, first);

  c.ledger.round_timeout_ticks = 0;
  try {
    RunSimulation(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIncomplete);
    EXPECT_NE(std::string(e.what()).find("round 2"), std::string::npos);
  }
}

TEST(Simulation, CsvDataSource) {
  namespace fs = std::filesystem;
  const fs::path csv = fs::temp_directory_path() / "hefl_sim_test.csv";
  SyntheticTrafficSpec spec;
  {
    std::ofstream out(csv);
    out << fl::WriteTrafficCsv(GenerateSynthetic(spec, {"det-0", "det-1"}, 3));
  }
  auto c = Small(2, 2, 2);
  c.data.kind = "csv";
  c.data.csv_path = csv.string();
  const auto res = RunSimulation(c);
  EXPECT_EQ(res.reports.size(), 2u);
  c.regions[0].detector_ids.push_back("det-9");
  EXPECT_EQ(CodeOf([&] { RunSimulation(c); }), ErrorCode::kConfig);
  fs::remove(csv);
}

}  // namespace
}  // namespace hefl::sim
