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

#include "hefl/hefl.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <sstream>
#include <string>

#include "hefl/bench.hpp"
#include "hefl/dhfa.hpp"
#include "hefl/error.hpp"
#include "hefl/fl.hpp"
#include "hefl/gru.hpp"
#include "hefl/ledger.hpp"
#include "hefl/phe.hpp"
#include "hefl/sim.hpp"

struct hefl_keypair {
  hefl::phe::KeyPair kp;
};

struct hefl_config {
  hefl::sim::SimulationConfig config;
};

namespace {

thread_local std::string g_last_error;

hefl_status Fail(hefl_status s, std::string what) {
  g_last_error = std::move(what);
  return s;
}

// Runs `f`, translating exceptions into status codes.
template <typename F>
hefl_status Guard(F&& f) {
  g_last_error.clear();
  try {
    f();
    return HEFL_OK;
  } catch (const hefl::Error& e) {
    return Fail(static_cast<hefl_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return Fail(HEFL_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return Fail(HEFL_E_INTERNAL, e.what());
  }
}

char* Dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void Require(bool cond, const char* what) {
  if (!cond) throw hefl::Error(hefl::ErrorCode::kInvalidArgument, what);
}

std::string ReadFile(const char* path, hefl::ErrorCode code) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw hefl::Error(code, std::string("cannot open ") + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json Summary(const hefl::sim::SimulationConfig& c,
                       const hefl::sim::SimulationResult& r,
                       const std::vector<std::string>& files) {
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& rep : r.reports) {
    rounds.push_back({{"round", rep.round},
                      {"region_id", rep.region_id},
                      {"contributors", rep.contributors},
                      {"timed_out", rep.timed_out},
                      {"bl_height", rep.bl_height},
                      {"tl_height", rep.tl_height},
                      {"mean_train_loss", rep.mean_train_loss},
                      {"dhfa_wall_ms", rep.dhfa_wall_ms}});
  }
  return {{"seed", c.seed}, {"rounds", rounds}, {"files", files}};
}

}  // namespace

extern "C" {

const char* hefl_version(void) { return "0.1.0"; }

const char* hefl_status_name(hefl_status status) {
  if (status == HEFL_OK) return "ok";
  if (status == HEFL_E_INTERNAL) return "internal";
  if (status >= HEFL_E_INVALID_ARGUMENT && status <= HEFL_E_PARSE) {
    return hefl::ErrorCodeName(static_cast<hefl::ErrorCode>(status));
  }
  return "unknown";
}

const char* hefl_last_error(void) { return g_last_error.c_str(); }

void hefl_string_free(char* s) { std::free(s); }

hefl_status hefl_keypair_generate(unsigned bits, uint64_t seed, hefl_keypair** out) {
  return Guard([&] {
    Require(out, "out is null");
    *out = nullptr;
    hefl::Rng rng(seed, "capi-keygen");
    auto* kp = new hefl_keypair{hefl::phe::GenerateKeyPair(bits, rng)};
    *out = kp;
  });
}

void hefl_keypair_free(hefl_keypair* kp) { delete kp; }

hefl_status hefl_keypair_public_json(const hefl_keypair* kp, char** out) {
  return Guard([&] {
    Require(kp && out, "null argument");
    *out = Dup(kp->kp.pub.Canonical());
  });
}

hefl_status hefl_encrypt_vector(const hefl_keypair* kp, const double* values,
                                size_t count, uint64_t seed, char** out) {
  return Guard([&] {
    Require(kp && out && (values || count == 0), "null argument");
    hefl::Rng rng(seed, "capi-encrypt");
    const auto cts = hefl::dhfa::EncryptParams(
        kp->kp.pub, std::span<const double>(values, count),
        hefl::phe::FixedPointCodec::kDefaultScale, rng);
    *out = Dup(hefl::phe::SerializeVector(cts));
  });
}

hefl_status hefl_decrypt_vector(const hefl_keypair* kp, const char* serialized,
                                double* out, size_t capacity, size_t* count) {
  return Guard([&] {
    Require(kp && serialized && count, "null argument");
    const auto cts = hefl::phe::DeserializeVector(serialized);
    const auto v = hefl::dhfa::DecryptParams(kp->kp.priv, kp->kp.pub, cts,
                                             hefl::phe::FixedPointCodec::kDefaultScale);
    *count = v.size();
    Require(out || capacity == 0, "out is null");
    for (size_t i = 0; i < v.size() && i < capacity; ++i) out[i] = v[i];
  });
}

hefl_status hefl_param_count(const size_t* hidden, size_t layers, int dense_output,
                             uint64_t* out) {
  return Guard([&] {
    Require(out && (hidden || layers == 0), "null argument");
    hefl::fl::ModelShape shape;
    shape.dense_output = dense_output != 0;
    size_t in = 1;
    for (size_t i = 0; i < layers; ++i) {
      shape.layers.push_back({hidden[i], in});
      in = hidden[i];
    }
    *out = hefl::fl::ParamCount(shape);
  });
}

hefl_status hefl_complexity_ms(uint64_t w, uint64_t p, uint64_t* out) {
  return Guard([&] {
    Require(out, "out is null");
    *out = hefl::sim::ComplexityModelMs(w, p);
  });
}

hefl_status hefl_config_load(const char* path, int has_seed, uint64_t seed,
                             hefl_config** out) {
  return Guard([&] {
    Require(path && out, "null argument");
    *out = nullptr;
    std::optional<uint64_t> override;
    if (has_seed) override = seed;
    *out = new hefl_config{hefl::sim::LoadConfig(path, override)};
  });
}

void hefl_config_free(hefl_config* cfg) { delete cfg; }

hefl_status hefl_config_json(const hefl_config* cfg, char** out) {
  return Guard([&] {
    Require(cfg && out, "null argument");
    *out = Dup(hefl::sim::ToJson(cfg->config).dump(2) + "\n");
  });
}

hefl_status hefl_simulate(const hefl_config* cfg, const char* out_dir, char** summary) {
  return Guard([&] {
    Require(cfg && out_dir, "null argument");
    const auto result = hefl::sim::RunSimulation(cfg->config);
    const auto files = hefl::sim::ExportReports(cfg->config, result, out_dir);
    if (summary) *summary = Dup(Summary(cfg->config, result, files).dump(2) + "\n");
  });
}

hefl_status hefl_bench(const char* suite, size_t reps, uint64_t seed, char** report) {
  return Guard([&] {
    Require(suite && report, "null argument");
    hefl::bench::Options o;
    if (reps) o.reps = reps;
    o.seed = seed;
    *report = Dup(hefl::bench::RunSuite(suite, o).ToJson().dump(2) + "\n");
  });
}

hefl_status hefl_verify_chain(const char* dump_path, int has_seed, uint64_t seed,
                              int* valid, char** report) {
  return Guard([&] {
    Require(dump_path && valid, "null argument");
    const std::string text = ReadFile(dump_path, hefl::ErrorCode::kIo);
    std::unique_ptr<hefl::ledger::HmacSigner> signer;
    if (has_seed) signer = std::make_unique<hefl::ledger::HmacSigner>(seed);
    const auto r = hefl::ledger::VerifyDump(text, signer.get());
    size_t blocks = 0;
    for (char c : text) blocks += c == '\n';
    *valid = r.ok ? 1 : 0;
    if (report) {
      *report = Dup(nlohmann::json{{"ok", r.ok},
                                   {"blocks", blocks},
                                   {"signatures_checked", has_seed != 0},
                                   {"height", r.height},
                                   {"reason", r.reason}}
                        .dump() +
                    "\n");
    }
  });
}

hefl_status hefl_gen_data(const char* spec_path, int has_seed, uint64_t seed, char** csv) {
  return Guard([&] {
    Require(spec_path && csv, "null argument");
    std::optional<uint64_t> override;
    if (has_seed) override = seed;
    const auto req = hefl::sim::LoadGenData(spec_path, override);
    *csv = Dup(hefl::fl::WriteTrafficCsv(
        hefl::sim::GenerateSynthetic(req.spec, req.detectors, req.seed)));
  });
}

}  // extern "C"
