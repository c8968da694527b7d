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

#ifndef HEFL_DHFA_HPP_
#define HEFL_DHFA_HPP_

// Distributed homomorphic-encrypted federated averaging. A client
// coordinator masks each client's encrypted parameter vector, every edge
// computer (EC) partially decrypts the masked values, one randomly chosen
// finishing EC averages them in the masked plaintext domain, re-encrypts
// the average under each client's own key and strips the mask average.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "hefl/bigint.hpp"
#include "hefl/error.hpp"
#include "hefl/phe.hpp"
#include "hefl/rng.hpp"
#include "json.hpp"

namespace hefl::dhfa {

using hefl::BigInt;
using phe::Ciphertext;
using CtVector = std::vector<Ciphertext>;

struct DhfaGroup {
  size_t n_ecs = 0;
  phe::PublicKey region_pk;          // clients encrypt updates under this key
  phe::KeyShareSet shares;           // share i held by EC i
  std::vector<phe::PublicKey> client_keys;  // pk_1..pk_Nc, contributors
  /// Receive the average without contributing (clients cut off by a round
  /// timeout). Outputs for them follow the contributors' outputs.
  std::vector<phe::PublicKey> extra_recipients;
  uint64_t scale = phe::FixedPointCodec::kDefaultScale;
  std::set<size_t> offline_ecs;      // ECs that never answer

  size_t n_clients() const { return client_keys.size(); }
  std::vector<phe::PublicKey> Recipients() const;
  void Validate() const;
};

/// Throws an Error whose message carries the stage name.
class StageError : public Error {
 public:
  StageError(ErrorCode code, std::string stage, const std::string& what)
      : Error(code, "dhfa " + stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

// ---------------------------------------------------------------------------
// Transcript

struct Event {
  uint64_t seq = 0;
  std::string party;  // "coordinator", "ec<i>", "finisher", "client<i>"
  std::string step;
  std::string digest;  // SHA-256 over the canonical JSON of the value
  std::optional<std::vector<BigInt>> revealed;  // plaintexts this party saw
};

class Transcript {
 public:
  void Record(std::string party, std::string step, const nlohmann::json& value,
              std::optional<std::vector<BigInt>> revealed = std::nullopt);

  const std::vector<Event>& events() const { return events_; }
  std::string ToJsonLines() const;
  /// SHA-256 of the JSON-lines form.
  std::string Digest() const;

 private:
  std::vector<Event> events_;
};

// ---------------------------------------------------------------------------
// Stages

struct MaskedUpdate {
  size_t client_index = 0;
  CtVector masked;    // E(p + R)
  CtVector enc_mask;  // E(R), kept on the client side
};

/// Masks R in [0, n / (8 N_c)), with the last client's column adjusted so
/// that sum_k R_k = 0 mod (N_c * scale). All-zero when `zero` is set.
std::vector<std::vector<BigInt>> GenerateMasks(const DhfaGroup& group,
                                               size_t width, Rng& rng,
                                               bool zero = false);

std::vector<MaskedUpdate> ClientMask(const DhfaGroup& group,
                                     std::span<const CtVector> enc_params,
                                     const std::vector<std::vector<BigInt>>& masks,
                                     Rng& rng, Transcript* transcript = nullptr);

/// Partial decryption by every EC and combination; returns p + R (mod n)
/// per client.
std::vector<std::vector<BigInt>> EcPartialRound(
    const DhfaGroup& group, std::span<const MaskedUpdate> updates,
    Transcript* transcript = nullptr);

/// Signed (sum_i masked_i) / N_c per column, ties to even. Inputs are
/// residues mod `n`.
std::vector<BigInt> FinisherAverage(const BigInt& n,
                                    std::span<const std::vector<BigInt>> masked);

/// Coordinator side: E_pk_i(sum_k R_k / N_c) for each recipient i.
std::vector<CtVector> EncryptMaskAverages(
    const DhfaGroup& group, const std::vector<std::vector<BigInt>>& masks,
    Rng& rng);

/// E_pk_i(masked_avg) minus the supplied mask average, for each recipient i.
std::vector<CtVector> FinisherReencryptAndUnmask(
    const DhfaGroup& group, std::span<const BigInt> masked_avg,
    std::span<const CtVector> enc_mask_avgs, Rng& rng);

// ---------------------------------------------------------------------------
// Full protocol

struct RunOptions {
  bool zero_masks = false;
  /// Invoked once per client after every stage succeeded.
  std::function<void(size_t client, const CtVector&)> deliver;
  /// Test hook: replaces the coordinator's mask-average ciphertexts.
  std::function<void(std::vector<CtVector>&)> tamper_mask_avgs;
};

struct DhfaResult {
  std::vector<CtVector> outputs;  // outputs[i] under Recipients()[i]
  size_t finisher = 0;
  Transcript transcript;
};

DhfaResult RunDhfa(const DhfaGroup& group, std::span<const CtVector> enc_params,
                   Rng& rng, const RunOptions& options = {});

// ---------------------------------------------------------------------------
// Helpers

CtVector EncryptParams(const phe::PublicKey& pk, std::span<const double> params,
                       uint64_t scale, Rng& rng);
std::vector<double> DecryptParams(const phe::PrivateKey& sk,
                                  const phe::PublicKey& pk,
                                  std::span<const Ciphertext> cts,
                                  uint64_t scale);

/// Region key pair split across `n_ecs` shares plus fresh client key pairs.
struct GroupKeys {
  phe::KeyPair region;
  std::vector<phe::KeyPair> clients;
  DhfaGroup group;
};
GroupKeys MakeGroupKeys(unsigned key_bits, size_t n_ecs, size_t n_clients,
                        Rng& rng, uint64_t scale = phe::FixedPointCodec::kDefaultScale);

/// Events that revealed a plaintext equal to one of `secrets` (residues).
std::vector<uint64_t> AuditReveals(const Transcript& transcript,
                                   std::span<const BigInt> secrets);

}  // namespace hefl::dhfa

#endif  // HEFL_DHFA_HPP_
