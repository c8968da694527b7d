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

// hefl command line. Talks to the core only through the C interface.
//
// Exit codes: 0 success, 2 configuration or usage error, 3 runtime abort.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "hefl/hefl.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

int Report(hefl_status s, int exit_code) {
  std::cerr << "hefl: " << hefl_status_name(s) << ": " << hefl_last_error() << "\n";
  return exit_code;
}

// Takes ownership of a string returned by the library.
std::string Take(char* s) {
  std::string out = s ? s : "";
  hefl_string_free(s);
  return out;
}

int Simulate(const std::string& config, const std::string& out,
             const std::optional<uint64_t>& seed) {
  hefl_config* cfg = nullptr;
  hefl_status s = hefl_config_load(config.c_str(), seed.has_value(), seed.value_or(0), &cfg);
  if (s != HEFL_OK) return Report(s, kExitConfig);
  char* summary = nullptr;
  s = hefl_simulate(cfg, out.c_str(), &summary);
  hefl_config_free(cfg);
  if (s != HEFL_OK) return Report(s, kExitRuntime);
  std::cout << Take(summary);
  return kExitOk;
}

int Bench(const std::string& suite, size_t reps, uint64_t seed) {
  char* report = nullptr;
  const hefl_status s = hefl_bench(suite.c_str(), reps, seed, &report);
  if (s != HEFL_OK) return Report(s, kExitRuntime);
  std::cout << Take(report);
  return kExitOk;
}

int Complexity(uint64_t w, uint64_t p) {
  uint64_t ms = 0;
  const hefl_status s = hefl_complexity_ms(w, p, &ms);
  if (s != HEFL_OK) return Report(s, kExitConfig);
  std::cout << ms << "\n";
  return kExitOk;
}

int Verify(const std::string& chain, const std::optional<uint64_t>& seed) {
  int valid = 0;
  char* report = nullptr;
  const hefl_status s =
      hefl_verify_chain(chain.c_str(), seed.has_value(), seed.value_or(0), &valid, &report);
  if (s != HEFL_OK) return Report(s, kExitConfig);
  std::cout << Take(report);
  return valid ? kExitOk : kExitRuntime;
}

int GenData(const std::string& spec, const std::string& out,
            const std::optional<uint64_t>& seed) {
  char* csv = nullptr;
  const hefl_status s = hefl_gen_data(spec.c_str(), seed.has_value(), seed.value_or(0), &csv);
  if (s != HEFL_OK) return Report(s, s == HEFL_E_CONFIG ? kExitConfig : kExitRuntime);
  const std::string text = Take(csv);
  if (out.empty()) {
    std::cout << text;
    return kExitOk;
  }
  std::ofstream f(out, std::ios::binary);
  if (!(f << text)) {
    std::cerr << "hefl: cannot write " << out << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Privacy-preserving federated traffic prediction simulator"};
  app.set_version_flag("--version", hefl_version());
  app.require_subcommand(1);

  std::optional<uint64_t> seed;
  std::string config, out, suite, chain, spec;
  uint64_t w = 0, p = 0;
  size_t reps = 0;
  uint64_t bench_seed = 1;

  auto* sim = app.add_subcommand("simulate", "Run the federated simulation");
  sim->add_option("--config", config, "Config or run manifest (JSON)")->required()->check(CLI::ExistingFile);
  sim->add_option("--out", out, "Output directory")->required();
  sim->add_option("--seed", seed, "Override the config seed");

  auto* bench = app.add_subcommand("bench", "Time HE, DHFA and ledger operations");
  bench->add_option("--suite", suite, "he_keygen, he_ops, dhfa or ledger")
      ->required()
      ->check(CLI::IsMember({"he_keygen", "he_ops", "dhfa", "ledger"}));
  bench->add_option("--reps", reps, "Repetitions per point (default 10)")->check(CLI::Range(1, 100000));
  bench->add_option("--seed", bench_seed, "RNG seed");

  auto* cx = app.add_subcommand("complexity", "Estimated DHFA milliseconds");
  cx->add_option("--w", w, "Parameter count W")->required()->check(CLI::PositiveNumber);
  cx->add_option("--p", p, "Participants P")->required()->check(CLI::PositiveNumber);

  auto* verify = app.add_subcommand("verify", "Re-verify a chain dump");
  verify->add_option("--chain", chain, "JSON-lines chain dump")->required()->check(CLI::ExistingFile);
  verify->add_option("--seed", seed, "Deployment seed; also checks signatures");

  auto* gen = app.add_subcommand("gen-data", "Write synthetic traffic CSV");
  gen->add_option("--spec", spec, "Data spec (JSON)")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", out, "Output file (default stdout)");
  gen->add_option("--seed", seed, "Override the spec seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (sim->parsed()) return Simulate(config, out, seed);
  if (bench->parsed()) return Bench(suite, reps, bench_seed);
  if (cx->parsed()) return Complexity(w, p);
  if (verify->parsed()) return Verify(chain, seed);
  return GenData(spec, out, seed);
}
