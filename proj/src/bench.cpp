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

#include "hefl/bench.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>

#include "hefl/dhfa.hpp"
#include "hefl/error.hpp"
#include "hefl/fl.hpp"
#include "hefl/ledger.hpp"
#include "hefl/phe.hpp"
#include "hefl/rng.hpp"

namespace hefl::bench {
namespace {

using Clock = std::chrono::steady_clock;

template <typename F>
double TimeMs(F&& f) {
  const auto t0 = Clock::now();
  f();
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

template <typename F>
Point Measure(std::string name, double x, size_t reps, F&& f) {
  std::vector<double> ms;
  ms.reserve(reps);
  for (size_t r = 0; r < reps; ++r) ms.push_back(TimeMs([&] { f(r); }));
  return {std::move(name), x, Median(std::move(ms)), "ms", reps};
}

Report Keygen(const Options& o) {
  Report rep{"he_keygen", {}};
  Rng rng(o.seed, "bench-keygen");
  for (unsigned bits : o.keygen_bits) {
    rep.points.push_back(Measure("keygen", bits, o.reps,
                                 [&](size_t) { phe::GenerateKeyPair(bits, rng); }));
  }
  return rep;
}

Report HeOps(const Options& o) {
  Report rep{"he_ops", {}};
  Rng rng(o.seed, "bench-ops");
  const auto kp = phe::GenerateKeyPair(o.key_bits, rng);
  const auto shares = phe::SplitKey(kp.priv, kp.pub, 3, rng);
  const phe::FixedPointCodec codec(kp.pub.n);
  std::vector<phe::Ciphertext> cts;
  for (size_t r = 0; r < o.reps; ++r) {
    cts.push_back(phe::Encrypt(kp.pub, codec.Encode(rng.UniformReal(-1, 1)), rng));
  }
  const BigInt k = codec.Encode(0.37);
  const double x = o.key_bits;
  rep.points.push_back(Measure("encrypt", x, o.reps, [&](size_t r) {
    phe::Encrypt(kp.pub, codec.Encode(static_cast<double>(r)), rng);
  }));
  rep.points.push_back(Measure("add", x, o.reps, [&](size_t r) {
    phe::Add(kp.pub, cts[r], cts[(r + 1) % cts.size()]);
  }));
  rep.points.push_back(Measure("scalar_mul", x, o.reps, [&](size_t r) {
    phe::ScalarMul(kp.pub, cts[r], k);
  }));
  rep.points.push_back(Measure("decrypt", x, o.reps, [&](size_t r) {
    phe::Decrypt(kp.priv, kp.pub, cts[r]);
  }));
  rep.points.push_back(Measure("partial_decrypt", x, o.reps, [&](size_t r) {
    phe::PartialDecrypt(shares.Share(r % 3), kp.pub, cts[r]);
  }));
  return rep;
}

Report Dhfa(const Options& o) {
  Report rep{"dhfa", {}};
  for (size_t p : o.dhfa_ecs) {
    Rng rng(o.seed, "bench-dhfa-" + std::to_string(p));
    const auto keys = dhfa::MakeGroupKeys(o.key_bits, p, o.dhfa_clients, rng);
    std::vector<dhfa::CtVector> enc;
    for (size_t c = 0; c < o.dhfa_clients; ++c) {
      std::vector<double> params(o.dhfa_width);
      for (auto& v : params) v = rng.UniformReal(-1, 1);
      enc.push_back(dhfa::EncryptParams(keys.group.region_pk, params,
                                        keys.group.scale, rng));
    }
    rep.points.push_back(Measure("run_dhfa", static_cast<double>(p), o.reps,
                                 [&](size_t) { dhfa::RunDhfa(keys.group, enc, rng); }));
  }
  return rep;
}

// Sends `rate` tx per tick for `ticks` ticks, then drains. Throughput counts
// only txs committed inside the sending window.
struct LedgerRun {
  double throughput = 0;
  double latency = 0;
  double wall_ms_per_tx = 0;
};

LedgerRun RunLedger(size_t rate, const Options& o, const std::string& payload) {
  ledger::ChainConfig cfg;
  cfg.chain_id = "bench";
  cfg.batch.max_txs = o.batch_max_txs;
  cfg.batch.timeout_ticks = 1;
  ledger::Chain chain(cfg, std::make_shared<ledger::HmacSigner>(o.seed));
  size_t sent = 0;
  const double wall = TimeMs([&] {
    for (uint64_t t = 0; t < o.ledger_ticks; ++t) {
      for (size_t k = 0; k < rate; ++k, ++sent) {
        const std::string id = "d" + std::to_string(sent);
        chain.RegisterClient(id);
        const auto res = chain.Submit(id, {"bench", "r0", id, 1, payload}, t);
        if (!res.accepted) throw Error(ErrorCode::kProtocolAbort, "bench tx rejected: " + res.reason);
      }
      chain.Tick(t);
    }
    chain.Flush(o.ledger_ticks);
  });
  size_t in_window = 0;
  double latency = 0;
  size_t total = 0;
  for (const auto& b : chain.blocks()) {
    for (const auto& tx : b.txs) {
      if (b.tick < o.ledger_ticks) ++in_window;
      latency += static_cast<double>(b.tick - tx.arrival_tick);
      ++total;
    }
  }
  return {static_cast<double>(in_window) / static_cast<double>(o.ledger_ticks),
          total ? latency / static_cast<double>(total) : 0.0,
          sent ? wall / static_cast<double>(sent) : 0.0};
}

Report Ledger(const Options& o) {
  Report rep{"ledger", {}};
  Rng rng(o.seed, "bench-ledger");
  const auto kp = phe::GenerateKeyPair(128, rng);
  const std::vector<phe::Ciphertext> one = {phe::Encrypt(kp.pub, BigInt(1), rng)};
  const std::string payload = phe::SerializeVector(one);
  for (size_t rate : o.send_rates) {
    std::vector<double> tput, lat, wall;
    for (size_t r = 0; r < o.reps; ++r) {
      const auto run = RunLedger(rate, o, payload);
      tput.push_back(run.throughput);
      lat.push_back(run.latency);
      wall.push_back(run.wall_ms_per_tx);
    }
    const double x = static_cast<double>(rate);
    rep.points.push_back({"throughput", x, Median(tput), "tx/tick", o.reps});
    rep.points.push_back({"latency", x, Median(lat), "ticks", o.reps});
    rep.points.push_back({"wall_per_tx", x, Median(wall), "ms", o.reps});
  }
  return rep;
}

}  // namespace

double Median(std::vector<double> v) {
  if (v.empty()) throw Error(ErrorCode::kInvalidArgument, "median of nothing");
  std::sort(v.begin(), v.end());
  const size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::vector<Point> Report::Series(const std::string& name) const {
  std::vector<Point> out;
  for (const auto& p : points) {
    if (p.name == name) out.push_back(p);
  }
  return out;
}

nlohmann::json Report::ToJson() const {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : points) {
    pts.push_back({{"name", p.name}, {"x", p.x}, {"median", p.median},
                   {"unit", p.unit}, {"reps", p.reps}});
  }
  return {{"suite", suite}, {"points", pts}};
}

std::string Report::ToCsv() const {
  std::ostringstream os;
  os << "suite,name,x,median,unit,reps\n";
  for (const auto& p : points) {
    os << suite << ',' << p.name << ',' << fl::FormatDouble(p.x) << ','
       << fl::FormatDouble(p.median) << ',' << p.unit << ',' << p.reps << '\n';
  }
  return os.str();
}

std::vector<std::string> SuiteNames() { return {"he_keygen", "he_ops", "dhfa", "ledger"}; }

Report RunSuite(const std::string& suite, const Options& options) {
  if (options.reps == 0) throw Error(ErrorCode::kInvalidArgument, "reps must be >= 1");
  if (suite == "he_keygen") return Keygen(options);
  if (suite == "he_ops") return HeOps(options);
  if (suite == "dhfa") return Dhfa(options);
  if (suite == "ledger") return Ledger(options);
  throw Error(ErrorCode::kInvalidArgument, "unknown bench suite '" + suite + "'");
}

}  // namespace hefl::bench
