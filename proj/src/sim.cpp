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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "hefl/dhfa.hpp"
#include "hefl/digest.hpp"
#include "hefl/error.hpp"
#include "hefl/gru.hpp"
#include "hefl/keydist.hpp"
#include "hefl/ledger.hpp"
#include "hefl/rng.hpp"

namespace hefl::sim {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Synthetic traffic

DetectorProfile ResolveProfile(const SyntheticTrafficSpec& spec,
                               const std::string& detector, uint64_t seed) {
  for (const auto& p : spec.profiles) {
    if (p.id == detector) return p;
  }
  Rng rng = Rng(seed, "synthetic").Fork("profile/" + detector);
  DetectorProfile p;
  p.id = detector;
  p.offset = rng.UniformReal(-spec.offset_jitter, spec.offset_jitter);
  p.phase = rng.UniformReal(-spec.phase_jitter, spec.phase_jitter);
  p.magnitude = 1.0 + rng.UniformReal(-spec.magnitude_jitter, spec.magnitude_jitter);
  return p;
}

namespace {

double Shape(const SyntheticTrafficSpec& spec, const DetectorProfile& prof,
             size_t slot) {
  const double period = static_cast<double>(spec.period);
  double bumps = 0;
  for (const auto& peak : spec.peaks) {
    double d = std::fmod(static_cast<double>(slot) - peak.slot - prof.phase, period);
    if (d < -period / 2) d += period;
    if (d > period / 2) d -= period;
    bumps += peak.weight * std::exp(-0.5 * (d / peak.width) * (d / peak.width));
  }
  return spec.base + prof.offset + prof.magnitude * spec.amplitude * bumps;
}

}  // namespace

std::map<std::string, std::vector<fl::TrafficSample>> GenerateSynthetic(
    const SyntheticTrafficSpec& spec, const std::vector<std::string>& detectors,
    uint64_t seed) {
  if (spec.days < 1) Fail(ErrorCode::kInvalidArgument, "days must be >= 1");
  std::map<std::string, std::vector<fl::TrafficSample>> out;
  if (detectors.empty()) return out;
  const size_t total = spec.period * spec.days;
  const std::string& lead = detectors.front();
  for (const auto& id : detectors) {
    const std::string& source = spec.identical ? lead : id;
    const DetectorProfile prof = ResolveProfile(spec, source, seed);
    Rng noise = Rng(seed, "synthetic").Fork("noise/" + source);
    auto& stream = out[id];
    stream.reserve(total);
    for (size_t t = 0; t < total; ++t) {
      double flow = Shape(spec, prof, t % spec.period);
      if (spec.noise_std > 0) flow += noise.Normal(0.0, spec.noise_std);
      stream.push_back({spec.start_minute + static_cast<int64_t>(t) * fl::kSlotMinutes, id,
                        std::max(0.0, flow)});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Simulation

namespace {

struct Client {
  std::string id;
  phe::KeyPair keys;
  fl::DataWindow window;
  fl::GruModel global;    // latest federated model
  fl::GruModel baseline;  // never federated
  std::vector<fl::TrafficSample> stream;
};

struct Region {
  const RegionConfig* cfg = nullptr;
  fl::ModelShape shape;
  phe::KeyPair region_key;
  dhfa::DhfaGroup group;
  std::vector<Client> clients;
  std::unique_ptr<ledger::Chain> bl;
};

// Region decryption key distributed to the ECs through the two-party
// line protocol between the key authority and the regional edge node.
phe::KeyShareSet DistributeRegionKey(const phe::KeyPair& region, size_t n_ecs,
                                     unsigned key_bits, const std::string& region_id,
                                     Rng& rng) {
  Rng setup_rng = rng.Fork("keydist-setup");
  const auto setup = keydist::Setup(key_bits, setup_rng);
  Rng proto_rng = rng.Fork("keydist-protocol");
  for (int attempt = 0; attempt < 16; ++attempt) {
    const auto a = keydist::RandomCoordinate(setup.para, proto_rng);
    const auto b = keydist::RandomCoordinate(setup.para, proto_rng);
    if (a.x == b.x) continue;
    const auto blinding =
        keydist::GenerateBlinding(setup.para, keydist::kDefaultRounds, proto_rng);
    const auto out = keydist::RunSlopeProtocol(setup, a, b, blinding,
                                               "keydist/" + region_id, proto_rng);
    std::vector<std::string> ec_ids;
    for (size_t i = 0; i < n_ecs; ++i) ec_ids.push_back(region_id + "/ec-" + std::to_string(i));
    const auto ctx = keydist::MakeShareContext(region, ec_ids);
    std::vector<keydist::PartialPrivateKey> keys;
    for (const auto& id : ec_ids) keys.push_back(keydist::IssuePartialKeys(out.kac_line, id, ctx));
    return keydist::AssembleShareSet(ctx, keys);
  }
  Fail(ErrorCode::kGeneration, "could not draw distinct key-distribution coordinates");
}

std::map<std::string, std::vector<fl::TrafficSample>> LoadStreams(
    const SimulationConfig& config, size_t needed) {
  std::vector<std::string> all;
  for (const auto& r : config.regions) {
    all.insert(all.end(), r.detector_ids.begin(), r.detector_ids.end());
  }
  std::map<std::string, std::vector<fl::TrafficSample>> streams;
  if (config.data.kind == "csv") {
    std::ifstream in(config.data.csv_path);
    if (!in) Fail(ErrorCode::kConfig, "cannot open traffic CSV " + config.data.csv_path);
    streams = fl::ReadTrafficCsv(in);
  } else {
    SyntheticTrafficSpec spec = config.data.synthetic;
    const size_t days = (needed + spec.period - 1) / spec.period;
    spec.days = std::max(spec.days, days);
    streams = GenerateSynthetic(spec, all, config.seed);
  }
  for (const auto& id : all) {
    auto it = streams.find(id);
    const size_t have = it == streams.end() ? 0 : it->second.size();
    if (have < needed) {
      Fail(ErrorCode::kConfig, "detector " + id + " has " + std::to_string(have) +
                                   " samples; the run needs " + std::to_string(needed));
    }
  }
  return streams;
}

double Mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

template <typename F>
auto Tagged(int64_t round, const std::string& region, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const Error& e) {
    throw Error(e.code(), "round " + std::to_string(round) + ", region " + region + ": " + e.what());
  }
}

}  // namespace

SimulationResult RunSimulation(const SimulationConfig& config, const RunOptions& options) {
  config.Validate();
  SimulationResult result;
  Rng root(config.seed, "simulation");

  size_t needed = 0;
  for (const auto& r : config.regions) {
    needed = std::max(needed, r.max_data_size + static_cast<size_t>(config.rounds) * r.input_shape);
  }
  auto streams = LoadStreams(config, needed);

  auto signer = std::make_shared<ledger::HmacSigner>(config.seed);
  ledger::ChainConfig tl_cfg;
  tl_cfg.chain_id = "tl";
  tl_cfg.top_layer = true;
  tl_cfg.peers = config.ledger.peers;
  tl_cfg.orderers = config.ledger.orderers;
  tl_cfg.endorsement_threshold = config.ledger.endorsement_threshold;
  tl_cfg.batch = {config.ledger.batch_max_txs, config.ledger.batch_timeout_ticks};
  ledger::Chain tl(tl_cfg, signer);

  std::set<std::pair<std::string, int64_t>> muted;
  for (const auto& m : config.mutes) muted.insert({m.detector_id, m.round});

  std::vector<Region> regions;
  for (const auto& rc : config.regions) {
    Region reg;
    reg.cfg = &rc;
    reg.shape = fl::ModelShape::Stacked(rc.hidden, rc.input_shape);
    Rng region_rng = root.Fork("region/" + rc.region_id);
    if (options.federate) {
      Rng key_rng = region_rng.Fork("region-key");
      reg.region_key = phe::GenerateKeyPair(config.dhfa.key_bits, key_rng);
      reg.group.n_ecs = config.dhfa.n_ecs;
      reg.group.region_pk = reg.region_key.pub;
      reg.group.scale = config.dhfa.scale;
      reg.group.shares = Tagged(0, rc.region_id, [&] {
        return DistributeRegionKey(reg.region_key, config.dhfa.n_ecs, config.dhfa.key_bits,
                                   rc.region_id, region_rng);
      });
      result.region_keys[rc.region_id] = reg.region_key;
      ledger::ChainConfig bl_cfg = tl_cfg;
      bl_cfg.chain_id = "bl-" + rc.region_id;
      bl_cfg.top_layer = false;
      reg.bl = std::make_unique<ledger::Chain>(bl_cfg, signer);
      tl.RegisterClient("dhfa-" + rc.region_id);
    }
    Rng init_rng = region_rng.Fork("init");
    const fl::GruModel init = fl::GruModel::Random(reg.shape, init_rng);
    for (const auto& id : rc.detector_ids) {
      Client c{id, {}, fl::DataWindow(rc.max_data_size), init, init, streams.at(id)};
      if (options.federate) {
        Rng ck = region_rng.Fork("client-key/" + id);
        c.keys = phe::GenerateKeyPair(config.dhfa.key_bits, ck);
        result.client_keys[id] = c.keys;
        reg.bl->RegisterClient(id);
      }
      // Warm-up: fill the window before the first round.
      const std::span<const fl::TrafficSample> warm(c.stream.data(), rc.max_data_size);
      c.window = fl::UpdateDataset(c.window, warm);
      result.shapes[id] = reg.shape;
      reg.clients.push_back(std::move(c));
    }
    regions.push_back(std::move(reg));
  }

  uint64_t clock = 1;
  for (int64_t round = 1; round <= config.rounds; ++round) {
    for (auto& reg : regions) {
      const RegionConfig& rc = *reg.cfg;
      Tagged(round, rc.region_id, [&] {
        RoundReport report;
        report.round = round;
        report.region_id = rc.region_id;
        RoundTrace trace;
        trace.round = round;
        trace.region_id = rc.region_id;
        const size_t p = rc.input_shape;
        const size_t offset = rc.max_data_size + static_cast<size_t>(round - 1) * p;
        std::map<std::string, fl::ParamVector> local;
        std::vector<double> losses;

        for (auto& c : reg.clients) {
          const std::span<const fl::TrafficSample> incoming(c.stream.data() + offset, p);
          const auto curves =
              fl::OnlineInference(c.global, c.baseline, c.window, incoming, rc.flow_ceiling);
          DetectorRound dr;
          dr.detector_id = c.id;
          dr.fed = fl::ComputeMetrics(curves.fed, curves.truth);
          dr.base = fl::ComputeMetrics(curves.base, curves.truth);
          for (size_t s = 0; s < p; ++s) {
            result.curves.push_back(
                {round, s + 1, c.id, curves.truth[s], curves.base[s], curves.fed[s]});
          }
          c.window = fl::UpdateDataset(c.window, incoming);
          const auto pairs = fl::SupervisedPairs(c.window, p, rc.flow_ceiling);
          fl::TrainOptions opt;
          opt.epochs = rc.epochs;
          opt.learning_rate = rc.learning_rate;
          opt.dropout = rc.dropout;
          const std::string tag = std::to_string(round) + "/" + c.id;
          opt.dropout_seed = root.Fork("dropout/local/" + tag).NextU64();
          const auto trained = c.global.Train(pairs, opt);
          opt.dropout_seed = root.Fork("dropout/base/" + tag).NextU64();
          const auto base = c.baseline.Train(pairs, opt);
          c.baseline = fl::GruModel(reg.shape, base.params);
          dr.train_loss_local = Mean(trained.epoch_loss);
          dr.train_loss_base = Mean(base.epoch_loss);
          dr.contributed = !muted.count({c.id, round});
          losses.push_back(dr.train_loss_local);
          local[c.id] = trained.params;
          report.detectors.push_back(dr);
        }
        report.mean_train_loss = Mean(losses);

        if (!options.federate) {
          for (auto& c : reg.clients) c.global = fl::GruModel(reg.shape, local[c.id]);
        } else {
          // Encrypt and submit to the regional chain.
          const uint64_t start = clock;
          const uint64_t arrive = start + 1;
          size_t arrived = 0;
          for (auto& c : reg.clients) {
            if (muted.count({c.id, round})) continue;
            Rng enc_rng = root.Fork("encrypt/" + std::to_string(round) + "/" + c.id);
            const auto cts = dhfa::EncryptParams(reg.region_key.pub, local[c.id],
                                                 config.dhfa.scale, enc_rng);
            ledger::ModelUpdate u{config.federation_id, rc.region_id, c.id, round,
                                  phe::SerializeVector(cts)};
            ledger::EndorsementReport er;
            const auto res = reg.bl->Submit(c.id, std::move(u), arrive, &er);
            if (!res.accepted) Fail(ErrorCode::kValidation, "update from " + c.id + " rejected: " + res.reason);
            ++arrived;
          }
          const size_t expected = reg.clients.size();
          if (arrived < expected && config.ledger.round_timeout_ticks == 0) {
            Fail(ErrorCode::kIncomplete, std::to_string(expected - arrived) +
                                             " client(s) silent and no round timeout configured");
          }
          ledger::RoundTimeout timeout{start, config.ledger.round_timeout_ticks, false};
          uint64_t t = arrive;
          for (;;) {
            reg.bl->Tick(t);
            timeout.Advance(t);
            if (reg.bl->pending() == 0 && (arrived == expected || timeout.fired)) break;
            ++t;
          }
          const auto read = ledger::ReadRoundUpdates(*reg.bl, config.federation_id, round,
                                                     expected, &timeout);
          report.timed_out = read.timed_out;
          report.contributors = read.updates.size();
          report.bl_height = reg.bl->blocks().back().height;
          if (read.updates.empty()) Fail(ErrorCode::kIncomplete, "no updates reached the chain");

          std::vector<dhfa::CtVector> enc;
          std::vector<size_t> order;  // client index per recipient slot
          dhfa::DhfaGroup group = reg.group;
          group.client_keys.clear();
          group.extra_recipients.clear();
          std::set<std::string> contributed;
          for (const auto& u : read.updates) {
            enc.push_back(phe::DeserializeVector(u.model_parameters));
            for (size_t i = 0; i < reg.clients.size(); ++i) {
              if (reg.clients[i].id == u.detector_id) {
                order.push_back(i);
                group.client_keys.push_back(reg.clients[i].keys.pub);
              }
            }
            contributed.insert(u.detector_id);
          }
          for (size_t i = 0; i < reg.clients.size(); ++i) {
            if (contributed.count(reg.clients[i].id)) continue;
            order.push_back(i);
            group.extra_recipients.push_back(reg.clients[i].keys.pub);
          }
          Rng dhfa_rng = root.Fork("dhfa/" + std::to_string(round) + "/" + rc.region_id);
          const auto t0 = std::chrono::steady_clock::now();
          const auto out = dhfa::RunDhfa(group, enc, dhfa_rng);
          report.dhfa_wall_ms =
              std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
          report.finisher = out.finisher;
          report.dhfa_digest = out.transcript.Digest();

          ledger::GlobalRecord rec;
          rec.region_id = rc.region_id;
          rec.round = round;
          rec.bl_chain_id = "bl-" + rc.region_id;
          rec.bl_height = report.bl_height;
          rec.dhfa_digest = report.dhfa_digest;
          for (const auto& o : out.outputs) rec.outputs.push_back(phe::SerializeVector(o));
          const auto block = ledger::CommitGlobal(tl, "dhfa-" + rc.region_id, rec, t + 1);
          report.tl_height = block.height;
          clock = t + 2;

          for (size_t slot = 0; slot < order.size(); ++slot) {
            Client& c = reg.clients[order[slot]];
            const auto params = dhfa::DecryptParams(c.keys.priv, c.keys.pub, out.outputs[slot],
                                                    config.dhfa.scale);
            c.global = fl::GruModel(reg.shape, params);
          }
        }
        if (options.keep_trace) {
          for (auto& c : reg.clients) {
            trace.local[c.id] = local[c.id];
            trace.global[c.id] = c.global.params();
            trace.baseline[c.id] = c.baseline.params();
          }
          result.traces.push_back(std::move(trace));
        }
        result.reports.push_back(std::move(report));
      });
    }
  }

  for (const auto& reg : regions) {
    for (const auto& c : reg.clients) {
      result.final_fed[c.id] = c.global.params();
      result.final_base[c.id] = c.baseline.params();
    }
    if (reg.bl) result.chain_dumps["bl-" + reg.cfg->region_id] = reg.bl->Dump();
  }
  if (options.federate) result.chain_dumps["tl"] = tl.Dump();
  return result;
}

// ---------------------------------------------------------------------------
// Export

std::string MetricsCsv(const SimulationResult& result) {
  using fl::FormatDouble;
  std::string out = "round,detector,model,mae,mse,rmse,mape\n";
  for (const auto& r : result.reports) {
    for (const auto& d : r.detectors) {
      for (const auto& [name, m] : {std::pair{"BASE", d.base}, std::pair{"FED", d.fed}}) {
        out += std::to_string(r.round) + "," + d.detector_id + "," + name + "," +
               FormatDouble(m.mae) + "," + FormatDouble(m.mse) + "," + FormatDouble(m.rmse) +
               "," + FormatDouble(m.mape) + "\n";
      }
    }
  }
  return out;
}

std::string CurvesCsv(const SimulationResult& result) {
  using fl::FormatDouble;
  std::string out = "round,step,detector,true,base,fed\n";
  for (const auto& c : result.curves) {
    out += std::to_string(c.round) + "," + std::to_string(c.step) + "," + c.detector_id + "," +
           FormatDouble(c.truth) + "," + FormatDouble(c.base) + "," + FormatDouble(c.fed) + "\n";
  }
  return out;
}

namespace {

std::string RoundsCsv(const SimulationResult& result) {
  std::string out =
      "round,region,contributors,timed_out,bl_height,tl_height,finisher,mean_train_loss,dhfa_digest\n";
  for (const auto& r : result.reports) {
    out += std::to_string(r.round) + "," + r.region_id + "," + std::to_string(r.contributors) +
           "," + (r.timed_out ? "1" : "0") + "," + std::to_string(r.bl_height) + "," +
           std::to_string(r.tl_height) + "," + std::to_string(r.finisher) + "," +
           fl::FormatDouble(r.mean_train_loss) + "," + r.dhfa_digest + "\n";
  }
  return out;
}

std::string LossesCsv(const SimulationResult& result) {
  std::string out = "round,detector,model,loss\n";
  for (const auto& r : result.reports) {
    for (const auto& d : r.detectors) {
      out += std::to_string(r.round) + "," + d.detector_id + ",BASE," +
             fl::FormatDouble(d.train_loss_base) + "\n";
      out += std::to_string(r.round) + "," + d.detector_id + ",FED," +
             fl::FormatDouble(d.train_loss_local) + "\n";
    }
  }
  return out;
}

void WriteFile(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) Fail(ErrorCode::kIo, "write failed for " + path.string());
}

}  // namespace

std::vector<std::string> ExportReports(const SimulationConfig& config,
                                       const SimulationResult& result,
                                       const std::filesystem::path& out_dir) {
  std::map<std::string, std::string> files;
  files["metrics.csv"] = MetricsCsv(result);
  files["curves.csv"] = CurvesCsv(result);
  files["rounds.csv"] = RoundsCsv(result);
  files["losses.csv"] = LossesCsv(result);
  for (const auto& [stem, dump] : result.chain_dumps) files["chains/" + stem + ".jsonl"] = dump;
  for (const auto& [id, params] : result.final_fed) {
    files["models/" + id + ".fed.csv"] = fl::ExportParamsCsv(params);
  }
  for (const auto& [id, params] : result.final_base) {
    files["models/" + id + ".base.csv"] = fl::ExportParamsCsv(params);
  }
  json shapes = json::object();
  for (const auto& [id, shape] : result.shapes) shapes[id] = fl::ToJson(shape);
  files["models/shapes.json"] = shapes.dump(2) + "\n";

  json digests = json::object();
  std::vector<std::string> written;
  for (const auto& [name, text] : files) {
    WriteFile(out_dir / name, text);
    digests[name] = Sha256Hex(text);
    written.push_back(name);
  }
  const json manifest{{"config", ToJson(config)}, {"seed", config.seed}, {"files", digests}};
  WriteFile(out_dir / "manifest.json", manifest.dump(2) + "\n");
  written.push_back("manifest.json");
  return written;
}

}  // namespace hefl::sim
