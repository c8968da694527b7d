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

#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#include "hefl/error.hpp"
#include "hefl/sim.hpp"

namespace hefl::sim {

using nlohmann::json;

namespace {

template <typename T>
T Convert(const json& v, const std::string& where) {
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) Fail(ErrorCode::kConfig, where + ": expected a boolean");
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) Fail(ErrorCode::kConfig, where + ": expected an integer");
    if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned()) {
      Fail(ErrorCode::kConfig, where + ": must not be negative");
    }
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) Fail(ErrorCode::kConfig, where + ": expected a number");
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) Fail(ErrorCode::kConfig, where + ": expected a string");
  }
  try {
    return v.get<T>();
  } catch (const json::exception& e) {
    Fail(ErrorCode::kConfig, where + ": " + e.what());
  }
}

// Object reader that rejects keys nobody asked for.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) Fail(ErrorCode::kConfig, where_ + " must be an object");
  }

  bool Has(const char* key) const { return j_.contains(key); }

  template <typename T>
  void Opt(const char* key, T& out) {
    seen_.insert(key);
    if (j_.contains(key)) out = Convert<T>(j_.at(key), Path(key));
  }

  template <typename T>
  void Req(const char* key, T& out) {
    if (!j_.contains(key)) Fail(ErrorCode::kConfig, Path(key) + " is required");
    Opt(key, out);
  }

  template <typename T>
  void OptList(const char* key, std::vector<T>& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    const json& arr = j_.at(key);
    if (!arr.is_array()) Fail(ErrorCode::kConfig, Path(key) + " must be an array");
    out.clear();
    for (size_t i = 0; i < arr.size(); ++i) {
      out.push_back(Convert<T>(arr[i], Path(key) + "[" + std::to_string(i) + "]"));
    }
  }

  const json* Child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  std::string Path(const std::string& key) const { return where_ + "." + key; }

  void Done() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) Fail(ErrorCode::kConfig, "unknown key " + Path(k));
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

template <typename T, typename F>
std::vector<T> ReadArray(const json* arr, const std::string& where, F&& each) {
  std::vector<T> out;
  if (!arr) return out;
  if (!arr->is_array()) Fail(ErrorCode::kConfig, where + " must be an array");
  for (size_t i = 0; i < arr->size(); ++i) {
    out.push_back(each((*arr)[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

}  // namespace

SyntheticTrafficSpec SyntheticSpecFromJson(const json& j) {
  SyntheticTrafficSpec s;
  Reader r(j, "synthetic");
  r.Opt("period", s.period);
  r.Opt("base", s.base);
  r.Opt("amplitude", s.amplitude);
  if (const json* peaks = r.Child("peaks")) {
    s.peaks = ReadArray<Peak>(peaks, r.Path("peaks"), [](const json& p, const std::string& w) {
      Peak k;
      Reader pr(p, w);
      pr.Req("slot", k.slot);
      pr.Req("width", k.width);
      pr.Opt("weight", k.weight);
      pr.Done();
      return k;
    });
  }
  r.Opt("noise_std", s.noise_std);
  r.Opt("days", s.days);
  r.Opt("start_minute", s.start_minute);
  s.profiles = ReadArray<DetectorProfile>(
      r.Child("profiles"), r.Path("profiles"), [](const json& p, const std::string& w) {
        DetectorProfile d;
        Reader pr(p, w);
        pr.Req("id", d.id);
        pr.Opt("offset", d.offset);
        pr.Opt("phase", d.phase);
        pr.Opt("magnitude", d.magnitude);
        pr.Done();
        return d;
      });
  r.Opt("offset_jitter", s.offset_jitter);
  r.Opt("phase_jitter", s.phase_jitter);
  r.Opt("magnitude_jitter", s.magnitude_jitter);
  r.Opt("identical", s.identical);
  r.Done();
  if (s.period == 0) Fail(ErrorCode::kConfig, "synthetic.period must be >= 1");
  if (s.days == 0) Fail(ErrorCode::kConfig, "synthetic.days must be >= 1");
  if (s.noise_std < 0) Fail(ErrorCode::kConfig, "synthetic.noise_std must be >= 0");
  if (s.start_minute % fl::kSlotMinutes != 0) {
    Fail(ErrorCode::kConfig, "synthetic.start_minute must sit on the 5-minute grid");
  }
  for (const auto& p : s.peaks) {
    if (!(p.width > 0)) Fail(ErrorCode::kConfig, "synthetic peak width must be > 0");
  }
  return s;
}

json ToJson(const SyntheticTrafficSpec& s) {
  json peaks = json::array();
  for (const auto& p : s.peaks) {
    peaks.push_back({{"slot", p.slot}, {"width", p.width}, {"weight", p.weight}});
  }
  json profiles = json::array();
  for (const auto& p : s.profiles) {
    profiles.push_back({{"id", p.id}, {"offset", p.offset}, {"phase", p.phase},
                        {"magnitude", p.magnitude}});
  }
  return {{"period", s.period},
          {"base", s.base},
          {"amplitude", s.amplitude},
          {"peaks", peaks},
          {"noise_std", s.noise_std},
          {"days", s.days},
          {"start_minute", s.start_minute},
          {"profiles", profiles},
          {"offset_jitter", s.offset_jitter},
          {"phase_jitter", s.phase_jitter},
          {"magnitude_jitter", s.magnitude_jitter},
          {"identical", s.identical}};
}

SimulationConfig SimulationConfig::Defaults(uint64_t seed) {
  SimulationConfig c;
  c.seed = seed;
  RegionConfig r;
  r.region_id = "region-0";
  r.detector_ids = {"det-0", "det-1", "det-2"};
  c.regions.push_back(r);
  return c;
}

void SimulationConfig::Validate() const {
  auto bad = [](const std::string& what) { Fail(ErrorCode::kConfig, what); };
  if (rounds < 1) bad("rounds must be >= 1");
  if (regions.empty()) bad("at least one region is required");
  if (federation_id.empty()) bad("federation_id is empty");
  std::set<std::string> region_ids, detectors;
  for (const auto& r : regions) {
    if (r.region_id.empty()) bad("region_id is empty");
    if (!region_ids.insert(r.region_id).second) bad("duplicate region_id " + r.region_id);
    if (r.detector_ids.empty()) bad("region " + r.region_id + " has no detectors");
    for (const auto& d : r.detector_ids) {
      if (d.empty() || d.find(',') != std::string::npos || d.find('/') != std::string::npos) {
        bad("invalid detector id '" + d + "'");
      }
      if (!detectors.insert(d).second) bad("detector " + d + " appears twice");
    }
    if (r.input_shape < 1) bad("input_shape must be >= 1");
    if (r.max_data_size < r.input_shape + 1) bad("max_data_size must exceed input_shape");
    if (r.epochs < 1) bad("epochs must be >= 1");
    if (!(r.learning_rate > 0)) bad("learning_rate must be > 0");
    if (r.hidden.empty()) bad("hidden must list at least one layer");
    for (size_t h : r.hidden) {
      if (h == 0) bad("hidden sizes must be >= 1");
    }
    if (!(r.flow_ceiling > 0)) bad("flow_ceiling must be > 0");
    if (r.dropout < 0 || r.dropout >= 1) bad("dropout must be in [0, 1)");
  }
  if (dhfa.n_ecs < 2) bad("dhfa.n_ecs must be >= 2");
  if (!phe::IsAllowedKeyBits(dhfa.key_bits) || dhfa.key_bits < 128) {
    bad("dhfa.key_bits must be one of 128, 256, 512, 1024, 2048");
  }
  if (dhfa.scale < 2) bad("dhfa.scale must be >= 2");
  if (ledger.peers < 1) bad("ledger.peers must be >= 1");
  if (ledger.orderers < 1) bad("ledger.orderers must be >= 1");
  if (ledger.endorsement_threshold > ledger.peers) bad("endorsement_threshold exceeds peers");
  if (ledger.batch_max_txs < 1) bad("ledger.batch_max_txs must be >= 1");
  for (const auto& m : mutes) {
    if (!detectors.count(m.detector_id)) bad("mute names unknown detector " + m.detector_id);
    if (m.round < 1 || m.round > rounds) bad("mute round out of range");
  }
  if (data.kind == "csv") {
    if (data.csv_path.empty()) bad("data_source.path is required for csv");
  } else if (data.kind != "synthetic") {
    bad("data_source.kind must be synthetic or csv");
  }
}

SimulationConfig ConfigFromJson(const json& j, std::optional<uint64_t> seed_override) {
  SimulationConfig c;
  Reader r(j, "config");
  if (seed_override) {
    c.seed = *seed_override;
    r.Opt("seed", c.seed);
    c.seed = *seed_override;
  } else {
    r.Req("seed", c.seed);
  }
  r.Opt("rounds", c.rounds);
  r.Opt("federation_id", c.federation_id);
  const json* regions = r.Child("regions");
  if (!regions) Fail(ErrorCode::kConfig, "config.regions is required");
  c.regions = ReadArray<RegionConfig>(regions, "config.regions", [](const json& rj, const std::string& w) {
    RegionConfig rc;
    Reader rr(rj, w);
    rr.Req("region_id", rc.region_id);
    rr.OptList("detector_ids", rc.detector_ids);
    rr.Opt("max_data_size", rc.max_data_size);
    rr.Opt("input_shape", rc.input_shape);
    rr.Opt("epochs", rc.epochs);
    rr.Opt("learning_rate", rc.learning_rate);
    rr.OptList("hidden", rc.hidden);
    rr.Opt("flow_ceiling", rc.flow_ceiling);
    rr.Opt("dropout", rc.dropout);
    rr.Done();
    return rc;
  });
  if (const json* d = r.Child("dhfa")) {
    Reader dr(*d, "config.dhfa");
    dr.Opt("n_ecs", c.dhfa.n_ecs);
    dr.Opt("key_bits", c.dhfa.key_bits);
    dr.Opt("scale", c.dhfa.scale);
    dr.Done();
  }
  if (const json* l = r.Child("ledger")) {
    Reader lr(*l, "config.ledger");
    lr.Opt("peers", c.ledger.peers);
    lr.Opt("orderers", c.ledger.orderers);
    lr.Opt("endorsement_threshold", c.ledger.endorsement_threshold);
    lr.Opt("batch_max_txs", c.ledger.batch_max_txs);
    lr.Opt("batch_timeout_ticks", c.ledger.batch_timeout_ticks);
    lr.Opt("round_timeout_ticks", c.ledger.round_timeout_ticks);
    lr.Done();
  }
  c.mutes = ReadArray<Mute>(r.Child("mutes"), "config.mutes", [](const json& mj, const std::string& w) {
    Mute m;
    Reader mr(mj, w);
    mr.Req("detector_id", m.detector_id);
    mr.Req("round", m.round);
    mr.Done();
    return m;
  });
  if (const json* ds = r.Child("data_source")) {
    Reader dr(*ds, "config.data_source");
    dr.Opt("kind", c.data.kind);
    dr.Opt("path", c.data.csv_path);
    if (const json* syn = dr.Child("synthetic")) c.data.synthetic = SyntheticSpecFromJson(*syn);
    dr.Done();
  }
  r.Done();
  c.Validate();
  return c;
}

json ToJson(const SimulationConfig& c) {
  json regions = json::array();
  for (const auto& r : c.regions) {
    regions.push_back({{"region_id", r.region_id},
                       {"detector_ids", r.detector_ids},
                       {"max_data_size", r.max_data_size},
                       {"input_shape", r.input_shape},
                       {"epochs", r.epochs},
                       {"learning_rate", r.learning_rate},
                       {"hidden", r.hidden},
                       {"flow_ceiling", r.flow_ceiling},
                       {"dropout", r.dropout}});
  }
  json mutes = json::array();
  for (const auto& m : c.mutes) mutes.push_back({{"detector_id", m.detector_id}, {"round", m.round}});
  json data{{"kind", c.data.kind}, {"synthetic", ToJson(c.data.synthetic)}};
  if (c.data.kind == "csv") data["path"] = c.data.csv_path;
  return {{"seed", c.seed},
          {"rounds", c.rounds},
          {"federation_id", c.federation_id},
          {"regions", regions},
          {"dhfa", {{"n_ecs", c.dhfa.n_ecs}, {"key_bits", c.dhfa.key_bits}, {"scale", c.dhfa.scale}}},
          {"ledger",
           {{"peers", c.ledger.peers},
            {"orderers", c.ledger.orderers},
            {"endorsement_threshold", c.ledger.endorsement_threshold},
            {"batch_max_txs", c.ledger.batch_max_txs},
            {"batch_timeout_ticks", c.ledger.batch_timeout_ticks},
            {"round_timeout_ticks", c.ledger.round_timeout_ticks}}},
          {"mutes", mutes},
          {"data_source", data}};
}

namespace {

json ParseFile(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kConfig, std::string("cannot open ") + what + " " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    Fail(ErrorCode::kConfig, std::string(what) + " " + path.string() +
                                 " is not valid JSON: " + e.what());
  }
}

}  // namespace

SimulationConfig LoadConfig(const std::filesystem::path& path,
                            std::optional<uint64_t> seed_override) {
  json j = ParseFile(path, "config");
  // A run manifest carries the effective config under "config".
  if (j.is_object() && j.contains("config") && j.contains("files")) j = j.at("config");
  SimulationConfig c = ConfigFromJson(j, seed_override);
  if (c.data.kind == "csv") {
    const std::filesystem::path p(c.data.csv_path);
    if (p.is_relative()) c.data.csv_path = (path.parent_path() / p).string();
  }
  return c;
}

GenDataRequest GenDataFromJson(const json& j, std::optional<uint64_t> seed_override) {
  GenDataRequest g;
  Reader r(j, "gen-data");
  if (seed_override) {
    r.Opt("seed", g.seed);
    g.seed = *seed_override;
  } else {
    r.Req("seed", g.seed);
  }
  r.OptList("detectors", g.detectors);
  if (const json* syn = r.Child("synthetic")) g.spec = SyntheticSpecFromJson(*syn);
  r.Done();
  if (g.detectors.empty()) {
    for (const auto& p : g.spec.profiles) g.detectors.push_back(p.id);
  }
  if (g.detectors.empty()) Fail(ErrorCode::kConfig, "gen-data needs at least one detector");
  std::set<std::string> seen;
  for (const auto& d : g.detectors) {
    if (d.empty() || d.find(',') != std::string::npos) {
      Fail(ErrorCode::kConfig, "detector id '" + d + "' is empty or contains a comma");
    }
    if (!seen.insert(d).second) Fail(ErrorCode::kConfig, "duplicate detector id " + d);
  }
  return g;
}

GenDataRequest LoadGenData(const std::filesystem::path& path,
                           std::optional<uint64_t> seed_override) {
  return GenDataFromJson(ParseFile(path, "data spec"), seed_override);
}

uint64_t ComplexityModelMs(uint64_t w, uint64_t p) {
  if (w < 1 || p < 1) Fail(ErrorCode::kInvalidArgument, "W and P must be >= 1");
  const unsigned __int128 per = static_cast<unsigned __int128>(226) * (p - 1) + 230;
  const unsigned __int128 t = per * w;
  if (t > UINT64_MAX) Fail(ErrorCode::kDomain, "complexity estimate overflows 64 bits");
  return static_cast<uint64_t>(t);
}

}  // namespace hefl::sim
