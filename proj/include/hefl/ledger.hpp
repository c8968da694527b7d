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

#ifndef HEFL_LEDGER_HPP_
#define HEFL_LEDGER_HPP_

// In-process permissioned ledger: proposal -> peer endorsement -> ordering
// -> hash-linked blocks. Regional bottom-layer chains carry encrypted local
// models; the top-layer chain carries DHFA global records. Time is integer
// ticks supplied by the caller.

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "hefl/digest.hpp"
#include "json.hpp"

namespace hefl::ledger {

inline constexpr const char* kZeroHash =
    "0000000000000000000000000000000000000000000000000000000000000000";
inline constexpr const char* kGlobalDetector = "DHFA";

struct ModelUpdate {
  std::string federated_id;
  std::string location_id;
  std::string detector_id;
  int64_t round_number = 0;
  std::string model_parameters;  // serialized ciphertext vector or TL record

  std::tuple<std::string, std::string, int64_t> Key() const {
    return {federated_id, detector_id, round_number};
  }
  bool operator==(const ModelUpdate&) const = default;
};

nlohmann::json ToJson(const ModelUpdate& u);
ModelUpdate ModelUpdateFromJson(const nlohmann::json& j);

/// Simulation-grade signatures: HMAC-SHA256 with per-identity keys derived
/// from a deployment seed. Swap in a real scheme behind this interface.
class Signer {
 public:
  virtual ~Signer() = default;
  virtual std::string Sign(const std::string& identity,
                           std::string_view message) const = 0;
  virtual bool Verify(const std::string& identity, std::string_view message,
                      const std::string& signature) const = 0;
};

class HmacSigner : public Signer {
 public:
  explicit HmacSigner(uint64_t seed) : seed_(seed) {}
  std::string Sign(const std::string& identity,
                   std::string_view message) const override;
  bool Verify(const std::string& identity, std::string_view message,
              const std::string& signature) const override;

 private:
  const HmacSha256Key& KeyFor(const std::string& identity) const;

  uint64_t seed_;
  mutable std::mutex mu_;
  mutable std::map<std::string, HmacSha256Key> keys_;  // derived per identity
};

struct Proposal {
  std::string client_id;
  ModelUpdate update;
  uint64_t nonce = 0;
  std::string client_signature;

  /// SHA-256 over {client_id, nonce, update}.
  std::string Digest() const;
};

struct Endorsement {
  std::string peer_id;
  std::string signature;  // over the proposal digest
};

struct EndorsedTx {
  Proposal proposal;
  std::vector<Endorsement> endorsements;
  uint64_t arrival_tick = 0;

  /// SHA-256 over every field.
  std::string Digest() const;
};

struct Block {
  std::string chain_id;
  uint64_t height = 0;
  uint64_t tick = 0;
  size_t peers = 0;
  size_t endorsement_threshold = 0;
  std::string prev_hash;
  std::vector<EndorsedTx> txs;
  std::string block_hash;

  std::string ComputeHash() const;
};

nlohmann::json ToJson(const Block& b);
Block BlockFromJson(const nlohmann::json& j);

struct BatchPolicy {
  size_t max_txs = 10;
  uint64_t timeout_ticks = 1;
};

struct ChainConfig {
  std::string chain_id = "bl-0";
  bool top_layer = false;
  size_t peers = 4;
  size_t orderers = 1;
  size_t endorsement_threshold = 0;  // 0 = majority, floor(peers/2)+1
  BatchPolicy batch;
  std::set<size_t> silent_peers;  // never endorse (fault injection)

  size_t Threshold() const;
  void Validate() const;
};

struct Rejection {
  std::string peer_id;
  std::string reason;
};

struct EndorsementReport {
  std::vector<Endorsement> endorsements;
  std::vector<Rejection> rejections;
};

struct EnqueueResult {
  bool accepted = false;
  std::string reason;  // set when rejected
};

struct VerifyReport {
  bool ok = true;
  int64_t height = -1;  // first offending block, -1 when ok or not attributable
  std::string reason;
};

class Chain {
 public:
  Chain(ChainConfig config, std::shared_ptr<const Signer> signer);

  const ChainConfig& config() const { return config_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  size_t pending() const { return queue_.size(); }

  void RegisterClient(const std::string& client_id);
  bool IsRegistered(const std::string& client_id) const;

  /// Client side: builds and signs a proposal.
  Proposal Propose(const std::string& client_id, ModelUpdate update);

  /// Sends to every peer; each validates schema, uniqueness and signature.
  EndorsementReport SubmitProposal(const Proposal& proposal);

  /// Orderer intake; under-endorsed transactions are excluded.
  EnqueueResult Enqueue(EndorsedTx tx);

  /// Cuts at most one block: when the queue reaches max_txs or the oldest
  /// queued tx has waited timeout_ticks.
  std::optional<Block> Tick(uint64_t now);

  /// Cuts blocks until the queue is empty.
  std::vector<Block> Flush(uint64_t now);

  /// Propose + endorse + enqueue in one step.
  EnqueueResult Submit(const std::string& client_id, ModelUpdate update,
                       uint64_t now, EndorsementReport* report = nullptr);

  std::string Dump() const;

 private:
  bool ValidPayload(const ModelUpdate& u, std::string* why) const;
  void Commit(std::vector<EndorsedTx> txs, uint64_t now);

  ChainConfig config_;
  std::shared_ptr<const Signer> signer_;
  std::set<std::string> clients_;
  std::vector<std::string> peer_ids_;
  std::vector<std::set<std::tuple<std::string, std::string, int64_t>>> peer_seen_;
  std::vector<EndorsedTx> queue_;
  std::vector<Block> blocks_;
  uint64_t next_nonce_ = 0;
};

/// Endorsements from distinct known peers with valid signatures.
size_t CountValidEndorsements(const EndorsedTx& tx, size_t peers,
                              const Signer* signer);

// ---------------------------------------------------------------------------
// Reading and verification

struct RoundTimeout {
  uint64_t start_tick = 0;
  uint64_t timeout_ticks = 0;
  bool fired = false;

  /// Fires once now - start_tick >= timeout_ticks (0 disables).
  bool Advance(uint64_t now);
};

struct RoundRead {
  std::vector<ModelUpdate> updates;  // commit order
  bool timed_out = false;
  bool not_found = false;
};

RoundRead ReadRoundUpdates(const Chain& chain, const std::string& federated_id,
                           int64_t round, size_t expected = 0,
                           const RoundTimeout* timeout = nullptr);

/// Top-layer record for one region's DHFA output.
struct GlobalRecord {
  std::string region_id;
  int64_t round = 0;
  std::string bl_chain_id;
  uint64_t bl_height = 0;
  std::string dhfa_digest;
  std::vector<std::string> outputs;  // serialized ciphertext vectors per client
};

std::string SerializeGlobalRecord(const GlobalRecord& r);
GlobalRecord ParseGlobalRecord(std::string_view payload);

/// Commits one record to the top chain, cutting its block at `now`.
/// Duplicate (region, round) is rejected with kDuplicate.
Block CommitGlobal(Chain& top, const std::string& client_id,
                   const GlobalRecord& record, uint64_t now);

/// Byte-identical to j.dump(), with a fast path for integers and plain
/// printable-ASCII strings.
std::string CanonicalJson(const nlohmann::json& j);

std::string DumpBlocks(std::span<const Block> blocks);
std::vector<Block> ParseDump(std::string_view text);

/// Hash links, heights, digests, uniqueness, endorsement policy and (when a
/// signer is given) every signature.
VerifyReport VerifyChain(std::span<const Block> blocks,
                         const Signer* signer = nullptr);

/// As VerifyChain, but over dump text; also requires every line to be in
/// canonical form so that no byte can change unnoticed.
VerifyReport VerifyDump(std::string_view text, const Signer* signer = nullptr);

}  // namespace hefl::ledger

#endif  // HEFL_LEDGER_HPP_
