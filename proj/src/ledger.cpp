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

#include "hefl/ledger.hpp"

#include <algorithm>
#include <initializer_list>
#include <type_traits>
#include <map>

#include "hefl/digest.hpp"
#include "hefl/error.hpp"
#include "hefl/phe.hpp"

namespace hefl::ledger {

using nlohmann::json;

namespace {

std::string PeerId(size_t i) { return "peer" + std::to_string(i); }

bool IsHex64(const std::string& s) {
  return s.size() == 64 &&
         s.find_first_not_of("0123456789abcdef") == std::string::npos;
}

template <typename T>
T Get(const json& j, const char* key) {
  const auto it = j.is_object() ? j.find(key) : j.end();
  if (it == j.end()) Fail(ErrorCode::kParse, std::string("missing field '") + key + "'");
  const json& v = *it;
  if constexpr (std::is_integral_v<T>) {
    const bool ok = std::is_unsigned_v<T> ? v.is_number_unsigned() : v.is_number_integer();
    if (!ok) Fail(ErrorCode::kParse, std::string("field '") + key + "' must be an integer");
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) Fail(ErrorCode::kParse, std::string("field '") + key + "' must be a string");
  }
  try {
    return v.get<T>();
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, std::string("bad field '") + key + "': " + e.what());
  }
}

// Rejects objects carrying fields outside `keys`.
void ExactKeys(const json& j, std::initializer_list<const char*> keys) {
  if (!j.is_object() || j.size() != keys.size()) {
    Fail(ErrorCode::kParse, "unexpected field set");
  }
  for (const char* k : keys) {
    if (!j.contains(k)) Fail(ErrorCode::kParse, std::string("missing field '") + k + "'");
  }
}

// Digest preimages are length-prefixed "name=len:value;" records, so no
// field boundary is ambiguous.
class Preimage {
 public:
  Preimage& Add(const char* name, std::string_view value) {
    out_ += name;
    out_ += '=';
    out_ += std::to_string(value.size());
    out_ += ':';
    out_ += value;
    out_ += ';';
    return *this;
  }
  Preimage& Add(const char* name, uint64_t value) {
    return Add(name, std::string_view(std::to_string(value)));
  }
  Preimage& Add(const char* name, int64_t value) {
    return Add(name, std::string_view(std::to_string(value)));
  }
  std::string Hash() const { return Sha256Hex(out_); }

 private:
  std::string out_;
};

void AddProposal(Preimage& pre, const Proposal& p) {
  const ModelUpdate& u = p.update;
  pre.Add("client_id", p.client_id)
      .Add("nonce", p.nonce)
      .Add("federated_id", u.federated_id)
      .Add("location_id", u.location_id)
      .Add("detector_id", u.detector_id)
      .Add("round_number", u.round_number)
      .Add("model_parameters", u.model_parameters);
}

std::string HashHeader(const Block& b, const std::vector<std::string>& tx_digests) {
  Preimage pre;
  pre.Add("chain_id", b.chain_id)
      .Add("height", b.height)
      .Add("tick", b.tick)
      .Add("peers", static_cast<uint64_t>(b.peers))
      .Add("endorsement_threshold", static_cast<uint64_t>(b.endorsement_threshold))
      .Add("prev_hash", b.prev_hash)
      .Add("tx_count", static_cast<uint64_t>(tx_digests.size()));
  for (const auto& d : tx_digests) pre.Add("tx", d);
  return pre.Hash();
}

json ProposalBody(const Proposal& p) {
  return json{{"client_id", p.client_id}, {"nonce", p.nonce}, {"update", ToJson(p.update)}};
}

json TxJson(const EndorsedTx& tx) {
  json ends = json::array();
  for (const auto& e : tx.endorsements) {
    ends.push_back(json{{"peer_id", e.peer_id}, {"signature", e.signature}});
  }
  json j = ProposalBody(tx.proposal);
  j["client_signature"] = tx.proposal.client_signature;
  j["endorsements"] = ends;
  j["arrival_tick"] = tx.arrival_tick;
  return j;
}

EndorsedTx TxFromJson(const json& j) {
  ExactKeys(j, {"client_id", "nonce", "update", "client_signature", "endorsements",
                "arrival_tick", "tx_digest"});
  EndorsedTx tx;
  tx.proposal.client_id = Get<std::string>(j, "client_id");
  tx.proposal.nonce = Get<uint64_t>(j, "nonce");
  tx.proposal.update = ModelUpdateFromJson(Get<json>(j, "update"));
  tx.proposal.client_signature = Get<std::string>(j, "client_signature");
  tx.arrival_tick = Get<uint64_t>(j, "arrival_tick");
  const json& ends = j.at("endorsements");
  if (!ends.is_array()) Fail(ErrorCode::kParse, "endorsements must be an array");
  for (const auto& e : ends) {
    ExactKeys(e, {"peer_id", "signature"});
    tx.endorsements.push_back(
        {Get<std::string>(e, "peer_id"), Get<std::string>(e, "signature")});
  }
  const std::string digest = Get<std::string>(j, "tx_digest");
  if (digest != tx.Digest()) Fail(ErrorCode::kValidation, "tx digest mismatch");
  return tx;
}

}  // namespace

json ToJson(const ModelUpdate& u) {
  return json{{"federated_id", u.federated_id},
              {"location_id", u.location_id},
              {"detector_id", u.detector_id},
              {"round_number", u.round_number},
              {"model_parameters", u.model_parameters}};
}

ModelUpdate ModelUpdateFromJson(const json& j) {
  ExactKeys(j, {"federated_id", "location_id", "detector_id", "round_number",
                "model_parameters"});
  ModelUpdate u;
  u.federated_id = Get<std::string>(j, "federated_id");
  u.location_id = Get<std::string>(j, "location_id");
  u.detector_id = Get<std::string>(j, "detector_id");
  u.round_number = Get<int64_t>(j, "round_number");
  u.model_parameters = Get<std::string>(j, "model_parameters");
  return u;
}

const HmacSha256Key& HmacSigner::KeyFor(const std::string& identity) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = keys_.find(identity);
  if (it == keys_.end()) {
    it = keys_.emplace(identity, HmacSha256Key(Sha256Hex("hefl-msp|" + std::to_string(seed_) +
                                                           "|" + identity)))
             .first;
  }
  return it->second;  // map nodes are stable
}

std::string HmacSigner::Sign(const std::string& identity,
                             std::string_view message) const {
  return KeyFor(identity).Hex(message);
}

bool HmacSigner::Verify(const std::string& identity, std::string_view message,
                        const std::string& signature) const {
  return Sign(identity, message) == signature;
}

std::string Proposal::Digest() const {
  Preimage pre;
  AddProposal(pre, *this);
  return pre.Hash();
}

std::string EndorsedTx::Digest() const {
  Preimage pre;
  AddProposal(pre, proposal);
  pre.Add("client_signature", proposal.client_signature)
      .Add("arrival_tick", arrival_tick)
      .Add("endorsement_count", static_cast<uint64_t>(endorsements.size()));
  for (const auto& e : endorsements) {
    pre.Add("peer_id", e.peer_id).Add("signature", e.signature);
  }
  return pre.Hash();
}

std::string Block::ComputeHash() const {
  std::vector<std::string> digests;
  for (const auto& tx : txs) digests.push_back(tx.Digest());
  return HashHeader(*this, digests);
}

json ToJson(const Block& b) {
  json txs = json::array();
  for (const auto& tx : b.txs) {
    json j = TxJson(tx);
    j["tx_digest"] = tx.Digest();
    txs.push_back(std::move(j));
  }
  return json{{"chain_id", b.chain_id},
              {"height", b.height},
              {"tick", b.tick},
              {"peers", b.peers},
              {"endorsement_threshold", b.endorsement_threshold},
              {"prev_hash", b.prev_hash},
              {"txs", txs},
              {"block_hash", b.block_hash}};
}

Block BlockFromJson(const json& j) {
  ExactKeys(j, {"chain_id", "height", "tick", "peers", "endorsement_threshold",
                "prev_hash", "txs", "block_hash"});
  Block b;
  b.chain_id = Get<std::string>(j, "chain_id");
  b.height = Get<uint64_t>(j, "height");
  b.tick = Get<uint64_t>(j, "tick");
  b.peers = Get<size_t>(j, "peers");
  b.endorsement_threshold = Get<size_t>(j, "endorsement_threshold");
  b.prev_hash = Get<std::string>(j, "prev_hash");
  b.block_hash = Get<std::string>(j, "block_hash");
  const json& txs = j.at("txs");
  if (!txs.is_array()) Fail(ErrorCode::kParse, "txs must be an array");
  for (const auto& t : txs) b.txs.push_back(TxFromJson(t));
  return b;
}

// ---------------------------------------------------------------------------

size_t ChainConfig::Threshold() const {
  return endorsement_threshold == 0 ? peers / 2 + 1 : endorsement_threshold;
}

void ChainConfig::Validate() const {
  if (chain_id.empty()) Fail(ErrorCode::kConfig, "chain_id is empty");
  if (peers == 0) Fail(ErrorCode::kConfig, "chain needs at least one peer");
  if (orderers == 0) Fail(ErrorCode::kConfig, "chain needs at least one orderer");
  if (Threshold() > peers) {
    Fail(ErrorCode::kConfig, "endorsement threshold exceeds peer count");
  }
  if (batch.max_txs == 0) Fail(ErrorCode::kConfig, "batch max_txs must be >= 1");
}

Chain::Chain(ChainConfig config, std::shared_ptr<const Signer> signer)
    : config_(std::move(config)), signer_(std::move(signer)) {
  config_.Validate();
  if (!signer_) Fail(ErrorCode::kInvalidArgument, "chain needs a signer");
  for (size_t i = 0; i < config_.peers; ++i) peer_ids_.push_back(PeerId(i));
  peer_seen_.resize(config_.peers);
  Block genesis;
  genesis.chain_id = config_.chain_id;
  genesis.peers = config_.peers;
  genesis.endorsement_threshold = config_.Threshold();
  genesis.prev_hash = kZeroHash;
  genesis.block_hash = genesis.ComputeHash();
  blocks_.push_back(std::move(genesis));
}

void Chain::RegisterClient(const std::string& client_id) {
  if (client_id.empty()) Fail(ErrorCode::kInvalidArgument, "empty client id");
  clients_.insert(client_id);
}

bool Chain::IsRegistered(const std::string& client_id) const {
  return clients_.count(client_id) > 0;
}

Proposal Chain::Propose(const std::string& client_id, ModelUpdate update) {
  Proposal p;
  p.client_id = client_id;
  p.update = std::move(update);
  p.nonce = next_nonce_++;
  p.client_signature = signer_->Sign(client_id, p.Digest());
  return p;
}

bool Chain::ValidPayload(const ModelUpdate& u, std::string* why) const {
  if (u.round_number < 1) {
    *why = "round_number must be >= 1";
    return false;
  }
  if (u.federated_id.empty() || u.location_id.empty() || u.detector_id.empty()) {
    *why = "empty identifier";
    return false;
  }
  try {
    if (config_.top_layer) {
      const GlobalRecord r = ParseGlobalRecord(u.model_parameters);
      if (u.detector_id != kGlobalDetector || r.round != u.round_number ||
          r.region_id != u.location_id) {
        *why = "global record does not match its envelope";
        return false;
      }
    } else if (phe::DeserializeVector(u.model_parameters).empty()) {
      *why = "empty parameter payload";
      return false;
    }
  } catch (const std::exception& e) {
    *why = std::string("malformed payload: ") + e.what();
    return false;
  }
  return true;
}

EndorsementReport Chain::SubmitProposal(const Proposal& proposal) {
  EndorsementReport report;
  std::string payload_error;
  const bool payload_ok = ValidPayload(proposal.update, &payload_error);
  const std::string digest = proposal.Digest();
  const bool sig_ok =
      signer_->Verify(proposal.client_id, digest, proposal.client_signature);
  for (size_t i = 0; i < config_.peers; ++i) {
    const std::string& peer = peer_ids_[i];
    std::string reason;
    if (config_.silent_peers.count(i)) {
      reason = "peer unavailable";
    } else if (!IsRegistered(proposal.client_id)) {
      reason = "client not registered";
    } else if (!payload_ok) {
      reason = payload_error;
    } else if (!sig_ok) {
      reason = "client signature does not verify";
    } else if (peer_seen_[i].count(proposal.update.Key())) {
      reason = "duplicate (federated_id, detector_id, round)";
    }
    if (!reason.empty()) {
      report.rejections.push_back({peer, reason});
      continue;
    }
    peer_seen_[i].insert(proposal.update.Key());
    report.endorsements.push_back({peer, signer_->Sign(peer, digest)});
  }
  return report;
}

namespace {

// Stops once `enough` distinct valid endorsements are counted.
size_t CountValid(const EndorsedTx& tx, const std::string& digest, size_t peers,
                  const Signer* signer, size_t enough = SIZE_MAX) {
  std::set<std::string> counted;
  for (const auto& e : tx.endorsements) {
    if (counted.size() >= enough) break;
    bool known = false;
    for (size_t i = 0; i < peers && !known; ++i) known = e.peer_id == PeerId(i);
    if (!known || counted.count(e.peer_id)) continue;
    const bool sig = signer ? signer->Verify(e.peer_id, digest, e.signature)
                            : IsHex64(e.signature);
    if (sig) counted.insert(e.peer_id);
  }
  return counted.size();
}

}  // namespace

size_t CountValidEndorsements(const EndorsedTx& tx, size_t peers,
                              const Signer* signer) {
  return CountValid(tx, tx.proposal.Digest(), peers, signer);
}

EnqueueResult Chain::Enqueue(EndorsedTx tx) {
  const size_t valid = CountValidEndorsements(tx, config_.peers, signer_.get());
  if (valid < config_.Threshold()) {
    // Release the key so a corrected resubmission is not seen as a replay.
    for (auto& seen : peer_seen_) seen.erase(tx.proposal.update.Key());
    return {false, "under-endorsed: " + std::to_string(valid) + " of " +
                       std::to_string(config_.Threshold()) + " required"};
  }
  queue_.push_back(std::move(tx));
  return {true, ""};
}

void Chain::Commit(std::vector<EndorsedTx> txs, uint64_t now) {
  Block b;
  b.chain_id = config_.chain_id;
  b.height = blocks_.back().height + 1;
  b.tick = now;
  b.peers = config_.peers;
  b.endorsement_threshold = config_.Threshold();
  b.prev_hash = blocks_.back().block_hash;
  b.txs = std::move(txs);
  b.block_hash = b.ComputeHash();
  blocks_.push_back(std::move(b));
}

std::optional<Block> Chain::Tick(uint64_t now) {
  if (queue_.empty()) return std::nullopt;
  std::stable_sort(queue_.begin(), queue_.end(),
                   [](const EndorsedTx& a, const EndorsedTx& b) {
                     if (a.arrival_tick != b.arrival_tick) {
                       return a.arrival_tick < b.arrival_tick;
                     }
                     return a.proposal.client_id < b.proposal.client_id;
                   });
  const bool full = queue_.size() >= config_.batch.max_txs;
  const bool waited = now >= queue_.front().arrival_tick + config_.batch.timeout_ticks;
  if (!full && !waited) return std::nullopt;
  const size_t take = std::min(queue_.size(), config_.batch.max_txs);
  std::vector<EndorsedTx> batch(queue_.begin(), queue_.begin() + static_cast<ptrdiff_t>(take));
  queue_.erase(queue_.begin(), queue_.begin() + static_cast<ptrdiff_t>(take));
  Commit(std::move(batch), now);
  return blocks_.back();
}

std::vector<Block> Chain::Flush(uint64_t now) {
  std::vector<Block> out;
  while (!queue_.empty()) {
    auto b = Tick(std::max<uint64_t>(now, queue_.front().arrival_tick +
                                              config_.batch.timeout_ticks));
    if (b) out.push_back(std::move(*b));
  }
  return out;
}

EnqueueResult Chain::Submit(const std::string& client_id, ModelUpdate update,
                            uint64_t now, EndorsementReport* report) {
  Proposal p = Propose(client_id, std::move(update));
  EndorsementReport r = SubmitProposal(p);
  EndorsedTx tx{std::move(p), r.endorsements, now};
  if (report) *report = std::move(r);
  return Enqueue(std::move(tx));
}

std::string Chain::Dump() const { return DumpBlocks(blocks_); }

// ---------------------------------------------------------------------------

bool RoundTimeout::Advance(uint64_t now) {
  if (timeout_ticks > 0 && now >= start_tick + timeout_ticks) fired = true;
  return fired;
}

RoundRead ReadRoundUpdates(const Chain& chain, const std::string& federated_id,
                           int64_t round, size_t expected,
                           const RoundTimeout* timeout) {
  if (round < 1) Fail(ErrorCode::kValidation, "round must be >= 1");
  RoundRead out;
  bool any = false;
  for (const auto& b : chain.blocks()) {
    for (const auto& tx : b.txs) {
      const auto& u = tx.proposal.update;
      if (u.federated_id != federated_id) continue;
      any = true;
      if (u.round_number == round) out.updates.push_back(u);
    }
  }
  out.not_found = !any;
  out.timed_out = timeout && timeout->fired && out.updates.size() < expected;
  return out;
}

std::string SerializeGlobalRecord(const GlobalRecord& r) {
  return json{{"region_id", r.region_id},
              {"round", r.round},
              {"bl_chain_id", r.bl_chain_id},
              {"bl_height", r.bl_height},
              {"dhfa_digest", r.dhfa_digest},
              {"outputs", r.outputs}}
      .dump();
}

GlobalRecord ParseGlobalRecord(std::string_view payload) {
  json j;
  try {
    j = json::parse(payload);
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, std::string("global record: ") + e.what());
  }
  GlobalRecord r;
  r.region_id = Get<std::string>(j, "region_id");
  r.round = Get<int64_t>(j, "round");
  r.bl_chain_id = Get<std::string>(j, "bl_chain_id");
  r.bl_height = Get<uint64_t>(j, "bl_height");
  r.dhfa_digest = Get<std::string>(j, "dhfa_digest");
  r.outputs = Get<std::vector<std::string>>(j, "outputs");
  for (const auto& o : r.outputs) phe::DeserializeVector(o);
  return r;
}

Block CommitGlobal(Chain& top, const std::string& client_id,
                   const GlobalRecord& record, uint64_t now) {
  if (!top.config().top_layer) {
    Fail(ErrorCode::kInvalidArgument, "global records go to the top-layer chain");
  }
  ModelUpdate u{record.region_id, record.region_id, kGlobalDetector, record.round,
                SerializeGlobalRecord(record)};
  EndorsementReport report;
  const auto res = top.Submit(client_id, std::move(u), now, &report);
  if (!res.accepted) {
    const bool dup = std::any_of(report.rejections.begin(), report.rejections.end(),
                                 [](const Rejection& r) {
                                   return r.reason.rfind("duplicate", 0) == 0;
                                 });
    Fail(dup ? ErrorCode::kDuplicate : ErrorCode::kValidation,
         "global record rejected: " + res.reason +
             (report.rejections.empty() ? "" : " (" + report.rejections.front().reason + ")"));
  }
  auto blocks = top.Flush(now);
  return blocks.back();
}

std::string DumpBlocks(std::span<const Block> blocks) {
  std::string out;
  for (const auto& b : blocks) out += ToJson(b).dump() + "\n";
  return out;
}

std::vector<Block> ParseDump(std::string_view text) {
  std::vector<Block> out;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    if (!line.empty()) {
      try {
        out.push_back(BlockFromJson(json::parse(line)));
      } catch (const json::exception& e) {
        Fail(ErrorCode::kParse, "line " + std::to_string(out.size() + 1) + ": " + e.what());
      }
    }
    pos = end + 1;
  }
  return out;
}

namespace {

// `tx_digests`, when given, holds already-checked digests per block.
// Checks blocks one at a time in height order and stops at the first fault.
class Verifier {
 public:
  explicit Verifier(const Signer* signer) : signer_(signer) {}

  /// `tx_digests` holds already-checked tx digests, or null to compute them.
  std::optional<VerifyReport> Step(const Block& b, const std::vector<std::string>* tx_digests) {
    const auto h = static_cast<int64_t>(next_);
    auto bad = [h](std::string why) { return VerifyReport{false, h, std::move(why)}; };
    if (b.height != next_) return bad("height " + std::to_string(b.height) + " out of sequence");
    if (next_ == 0) chain_id_ = b.chain_id;
    if (b.chain_id != chain_id_) return bad("chain_id changes");
    const std::string expected_prev = next_ == 0 ? kZeroHash : prev_hash_;
    if (b.prev_hash != expected_prev) return bad("prev_hash does not match parent");
    std::vector<std::string> digests;
    if (tx_digests) {
      digests = *tx_digests;
    } else {
      for (const auto& tx : b.txs) digests.push_back(tx.Digest());
    }
    if (b.block_hash != HashHeader(b, digests)) return bad("block_hash mismatch");
    if (b.peers == 0 || b.endorsement_threshold == 0 || b.endorsement_threshold > b.peers) {
      return bad("invalid endorsement policy");
    }
    if (next_ == 0 && !b.txs.empty()) return bad("genesis carries transactions");
    for (const auto& tx : b.txs) {
      const auto& p = tx.proposal;
      if (p.update.round_number < 1) return bad("round_number < 1");
      if (!keys_.insert(p.update.Key()).second) return bad("duplicate update key");
      const std::string digest = p.Digest();
      const bool client_sig = signer_ ? signer_->Verify(p.client_id, digest, p.client_signature)
                                      : IsHex64(p.client_signature);
      if (!client_sig) return bad("client signature invalid");
      if (CountValid(tx, digest, b.peers, signer_, b.endorsement_threshold) <
          b.endorsement_threshold) {
        return bad("endorsement policy not met");
      }
    }
    prev_hash_ = b.block_hash;
    ++next_;
    return std::nullopt;
  }

  VerifyReport Finish() const {
    if (next_ == 0) return {false, -1, "chain is empty"};
    return {};
  }

 private:
  const Signer* signer_;
  uint64_t next_ = 0;
  std::string chain_id_;
  std::string prev_hash_;
  std::set<std::tuple<std::string, std::string, int64_t>> keys_;
};

}  // namespace

VerifyReport VerifyChain(std::span<const Block> blocks, const Signer* signer) {
  Verifier v(signer);
  for (const auto& b : blocks) {
    if (auto fault = v.Step(b, nullptr)) return *fault;
  }
  return v.Finish();
}

namespace {

// Printable ASCII only needs quote and backslash escaped; anything else goes
// through the library serializer.
void AppendString(const std::string& s, std::string& out) {
  const bool printable = std::all_of(s.begin(), s.end(), [](char c) { return c >= 0x20 && c < 0x7f; });
  if (!printable) {
    out += json(s).dump();
    return;
  }
  out += '"';
  size_t from = 0;
  for (size_t i = s.find_first_of("\"\\"); i != std::string::npos; i = s.find_first_of("\"\\", from)) {
    out.append(s, from, i - from);
    out += '\\';
    out += s[i];
    from = i + 1;
  }
  out.append(s, from, std::string::npos);
  out += '"';
}

void AppendCanonical(const json& j, std::string& out) {
  switch (j.type()) {
    case json::value_t::object: {
      out += '{';
      bool first = true;
      for (const auto& [k, v] : j.items()) {
        if (!first) out += ',';
        first = false;
        AppendString(k, out);
        out += ':';
        AppendCanonical(v, out);
      }
      out += '}';
      return;
    }
    case json::value_t::array: {
      out += '[';
      for (size_t i = 0; i < j.size(); ++i) {
        if (i) out += ',';
        AppendCanonical(j[i], out);
      }
      out += ']';
      return;
    }
    case json::value_t::string:
      AppendString(j.get_ref<const std::string&>(), out);
      return;
    case json::value_t::number_integer:
      out += std::to_string(j.get<int64_t>());
      return;
    case json::value_t::number_unsigned:
      out += std::to_string(j.get<uint64_t>());
      return;
    default:
      break;
  }
  out += j.dump();
}

// Walks `j` against `text` from `pos` without materializing the dump.
bool MatchCanonical(const json& j, std::string_view text, size_t& pos) {
  auto lit = [&](std::string_view s) {
    if (text.compare(pos, s.size(), s) != 0) return false;
    pos += s.size();
    return true;
  };
  auto str = [&](const std::string& s) {
    const bool plain = std::all_of(s.begin(), s.end(), [](char c) {
      return c >= 0x20 && c < 0x7f && c != '"' && c != '\\';
    });
    if (plain) {
      if (pos + s.size() + 2 > text.size() || text[pos] != '"' ||
          text.compare(pos + 1, s.size(), s) != 0 || text[pos + s.size() + 1] != '"') {
        return false;
      }
      pos += s.size() + 2;
      return true;
    }
    std::string tmp;
    AppendString(s, tmp);
    return lit(tmp);
  };
  switch (j.type()) {
    case json::value_t::object: {
      if (!lit("{")) return false;
      bool first = true;
      for (const auto& [k, v] : j.items()) {
        if (!first && !lit(",")) return false;
        first = false;
        if (!str(k) || !lit(":") || !MatchCanonical(v, text, pos)) return false;
      }
      return lit("}");
    }
    case json::value_t::array: {
      if (!lit("[")) return false;
      for (size_t i = 0; i < j.size(); ++i) {
        if (i && !lit(",")) return false;
        if (!MatchCanonical(j[i], text, pos)) return false;
      }
      return lit("]");
    }
    case json::value_t::string:
      return str(j.get_ref<const std::string&>());
    default: {
      std::string tmp;
      AppendCanonical(j, tmp);
      return lit(tmp);
    }
  }
}

}  // namespace

std::string CanonicalJson(const json& j) {
  std::string out;
  AppendCanonical(j, out);
  return out;
}

VerifyReport VerifyDump(std::string_view text, const Signer* signer) {
  if (text.empty() || text.back() != '\n') {
    return {false, -1, "dump must end with a newline"};
  }
  Verifier v(signer);
  size_t pos = 0;
  int64_t line_no = 0;
  while (pos < text.size()) {
    const size_t end = text.find('\n', pos);
    const std::string_view line = text.substr(pos, end - pos);
    try {
      const json parsed = json::parse(line);
      size_t at = 0;
      if (!MatchCanonical(parsed, line, at) || at != line.size()) {
        return {false, line_no, "line is not in canonical form"};
      }
      const Block b = BlockFromJson(parsed);
      std::vector<std::string> d;
      for (const auto& t : parsed.at("txs")) d.push_back(t.at("tx_digest").get<std::string>());
      if (auto fault = v.Step(b, &d)) return *fault;
    } catch (const std::exception& e) {
      return {false, line_no, std::string("unreadable block: ") + e.what()};
    }
    ++line_no;
    pos = end + 1;
  }
  return v.Finish();
}

}  // namespace hefl::ledger
