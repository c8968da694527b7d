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

#include "hefl/dhfa.hpp"

#include <algorithm>
#include <unordered_set>

#include "hefl/bigint.hpp"
#include "hefl/digest.hpp"

namespace hefl::dhfa {

namespace {

using nlohmann::json;

json HexList(std::span<const BigInt> values) {
  json arr = json::array();
  for (const auto& v : values) arr.push_back(ToHex(v));
  return arr;
}

json CtList(std::span<const Ciphertext> cts) {
  json arr = json::array();
  for (const auto& c : cts) arr.push_back(ToHex(c.c));
  return arr;
}

// Runs `body`, re-raising any library error tagged with `stage`.
template <typename F>
auto Staged(const char* stage, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(e.code(), stage, e.what());
  }
}

BigInt MaskBound(const DhfaGroup& group) {
  return group.region_pk.n / (8 * static_cast<unsigned long>(group.n_clients()));
}

}  // namespace

void DhfaGroup::Validate() const {
  if (n_ecs < 2) Fail(ErrorCode::kInvalidArgument, "DHFA needs at least 2 ECs");
  if (shares.count != n_ecs || shares.shares.size() != n_ecs) {
    Fail(ErrorCode::kInvalidArgument, "share count does not match n_ecs");
  }
  if (shares.pk_digest != region_pk.digest) {
    Fail(ErrorCode::kKeyMismatch, "share set belongs to another key");
  }
  if (client_keys.empty()) Fail(ErrorCode::kInvalidArgument, "no clients");
  if (scale == 0) Fail(ErrorCode::kInvalidArgument, "scale must be positive");
  for (size_t ec : offline_ecs) {
    if (ec >= n_ecs) Fail(ErrorCode::kInvalidArgument, "offline EC out of range");
  }
}

std::vector<phe::PublicKey> DhfaGroup::Recipients() const {
  std::vector<phe::PublicKey> out = client_keys;
  out.insert(out.end(), extra_recipients.begin(), extra_recipients.end());
  return out;
}

// ---------------------------------------------------------------------------

void Transcript::Record(std::string party, std::string step, const json& value,
                        std::optional<std::vector<BigInt>> revealed) {
  Event e;
  e.seq = events_.size();
  e.party = std::move(party);
  e.step = std::move(step);
  e.digest = Sha256Hex(value.dump());
  e.revealed = std::move(revealed);
  events_.push_back(std::move(e));
}

std::string Transcript::ToJsonLines() const {
  std::string out;
  for (const auto& e : events_) {
    json j{{"seq", e.seq}, {"party", e.party}, {"step", e.step}, {"digest", e.digest}};
    if (e.revealed) j["revealed"] = HexList(*e.revealed);
    out += j.dump() + "\n";
  }
  return out;
}

std::string Transcript::Digest() const { return Sha256Hex(ToJsonLines()); }

// ---------------------------------------------------------------------------

std::vector<std::vector<BigInt>> GenerateMasks(const DhfaGroup& group,
                                               size_t width, Rng& rng,
                                               bool zero) {
  const size_t nc = group.n_clients();
  std::vector<std::vector<BigInt>> masks(nc, std::vector<BigInt>(width, 0));
  if (zero || nc == 0) return masks;
  const BigInt bound = MaskBound(group);
  const BigInt modulus = BigInt(static_cast<unsigned long>(nc)) *
                         BigInt(static_cast<unsigned long>(group.scale));
  if (bound <= modulus) {
    Fail(ErrorCode::kDomain, "modulus too small for the mask domain");
  }
  for (size_t k = 0; k < width; ++k) {
    BigInt sum = 0;
    for (size_t i = 0; i < nc; ++i) {
      masks[i][k] = RandomBelow(rng, bound);
      sum += masks[i][k];
    }
    BigInt rem = sum % modulus;
    BigInt& last = masks[nc - 1][k];
    last -= rem;
    if (last < 0) last += modulus;
  }
  return masks;
}

std::vector<MaskedUpdate> ClientMask(const DhfaGroup& group,
                                     std::span<const CtVector> enc_params,
                                     const std::vector<std::vector<BigInt>>& masks,
                                     Rng& rng, Transcript* transcript) {
  if (enc_params.size() != group.n_clients() || masks.size() != enc_params.size()) {
    Fail(ErrorCode::kInvalidArgument, "one parameter vector and mask per client");
  }
  const size_t width = enc_params.empty() ? 0 : enc_params.front().size();
  const auto& pk = group.region_pk;
  std::vector<MaskedUpdate> out;
  for (size_t i = 0; i < enc_params.size(); ++i) {
    if (enc_params[i].size() != width || masks[i].size() != width) {
      Fail(ErrorCode::kInvalidArgument, "parameter vector length mismatch");
    }
    MaskedUpdate u;
    u.client_index = i;
    for (size_t k = 0; k < width; ++k) {
      phe::CheckKey(pk, enc_params[i][k]);
      u.enc_mask.push_back(phe::Encrypt(pk, masks[i][k] % pk.n, rng));
      u.masked.push_back(phe::Add(pk, enc_params[i][k], u.enc_mask.back()));
    }
    if (transcript) {
      transcript->Record("coordinator", "mask",
                         json{{"client", i}, {"masked", CtList(u.masked)}});
    }
    out.push_back(std::move(u));
  }
  return out;
}

std::vector<std::vector<BigInt>> EcPartialRound(
    const DhfaGroup& group, std::span<const MaskedUpdate> updates,
    Transcript* transcript) {
  const auto& pk = group.region_pk;
  for (size_t ec = 0; ec < group.n_ecs; ++ec) {
    if (group.offline_ecs.count(ec)) {
      Fail(ErrorCode::kIncomplete,
           "EC " + std::to_string(ec) + " is offline; share missing");
    }
  }
  // partials[ec][client][column]
  std::vector<std::vector<std::vector<phe::PartialDecryption>>> partials(group.n_ecs);
  for (size_t ec = 0; ec < group.n_ecs; ++ec) {
    const phe::KeyShare share = group.shares.Share(ec);
    json values = json::array();
    for (const auto& u : updates) {
      std::vector<phe::PartialDecryption> row;
      row.reserve(u.masked.size());
      for (const auto& ct : u.masked) {
        row.push_back(phe::PartialDecrypt(share, pk, ct));
        if (transcript) values.push_back(ToHex(row.back().value));
      }
      partials[ec].push_back(std::move(row));
    }
    if (transcript) {
      transcript->Record("ec" + std::to_string(ec), "partial_decrypt", values);
    }
  }
  std::vector<std::vector<BigInt>> masked(updates.size());
  std::vector<phe::PartialDecryption> column(group.n_ecs);
  for (size_t i = 0; i < updates.size(); ++i) {
    for (size_t k = 0; k < updates[i].masked.size(); ++k) {
      for (size_t ec = 0; ec < group.n_ecs; ++ec) column[ec] = partials[ec][i][k];
      masked[i].push_back(phe::CombinePartials(pk, column, updates[i].masked[k]));
    }
  }
  if (transcript) {
    std::vector<BigInt> seen;
    for (const auto& row : masked) seen.insert(seen.end(), row.begin(), row.end());
    for (size_t ec = 0; ec < group.n_ecs; ++ec) {
      transcript->Record("ec" + std::to_string(ec), "combine", HexList(seen), seen);
    }
  }
  return masked;
}

std::vector<BigInt> FinisherAverage(const BigInt& n,
                                    std::span<const std::vector<BigInt>> masked) {
  if (masked.empty()) Fail(ErrorCode::kIncomplete, "no client vectors to average");
  const size_t width = masked.front().size();
  const BigInt count(static_cast<unsigned long>(masked.size()));
  const BigInt half = (n - 1) / 2;
  std::vector<BigInt> out;
  out.reserve(width);
  for (size_t k = 0; k < width; ++k) {
    BigInt sum = 0;
    for (const auto& row : masked) {
      if (row.size() != width) Fail(ErrorCode::kIncomplete, "client vector missing columns");
      sum += row[k];
    }
    sum %= n;
    if (sum > half) sum -= n;
    BigInt q, r;
    mpz_fdiv_qr(q.get_mpz_t(), r.get_mpz_t(), sum.get_mpz_t(), count.get_mpz_t());
    const int cmp = mpz_cmp(BigInt(2 * r).get_mpz_t(), count.get_mpz_t());
    if (cmp > 0 || (cmp == 0 && mpz_odd_p(q.get_mpz_t()))) ++q;
    out.push_back(q);
  }
  return out;
}

std::vector<CtVector> EncryptMaskAverages(
    const DhfaGroup& group, const std::vector<std::vector<BigInt>>& masks,
    Rng& rng) {
  if (masks.size() != group.n_clients()) {
    Fail(ErrorCode::kInvalidArgument, "one mask vector per client");
  }
  const size_t width = masks.empty() ? 0 : masks.front().size();
  const BigInt count(static_cast<unsigned long>(masks.size()));
  std::vector<BigInt> avg(width);
  for (size_t k = 0; k < width; ++k) {
    BigInt sum = 0;
    for (const auto& m : masks) sum += m[k];
    if (sum % count != 0) {
      Fail(ErrorCode::kValidation, "mask column sum not divisible by client count");
    }
    avg[k] = sum / count;
  }
  std::vector<CtVector> out;
  for (const auto& pk : group.Recipients()) {
    CtVector v;
    v.reserve(width);
    for (const auto& a : avg) v.push_back(phe::Encrypt(pk, a % pk.n, rng));
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<CtVector> FinisherReencryptAndUnmask(
    const DhfaGroup& group, std::span<const BigInt> masked_avg,
    std::span<const CtVector> enc_mask_avgs, Rng& rng) {
  const auto recipients = group.Recipients();
  if (enc_mask_avgs.size() != recipients.size()) {
    Fail(ErrorCode::kIncomplete, "mask average missing for some client");
  }
  std::vector<CtVector> out;
  for (size_t i = 0; i < recipients.size(); ++i) {
    const auto& pk = recipients[i];
    if (enc_mask_avgs[i].size() != masked_avg.size()) {
      Fail(ErrorCode::kInvalidArgument, "mask average length mismatch");
    }
    CtVector v;
    v.reserve(masked_avg.size());
    for (size_t k = 0; k < masked_avg.size(); ++k) {
      phe::CheckKey(pk, enc_mask_avgs[i][k]);
      BigInt m = masked_avg[k] % pk.n;
      if (m < 0) m += pk.n;
      v.push_back(phe::Subtract(pk, phe::Encrypt(pk, m, rng), enc_mask_avgs[i][k]));
    }
    out.push_back(std::move(v));
  }
  return out;
}

// ---------------------------------------------------------------------------

DhfaResult RunDhfa(const DhfaGroup& group, std::span<const CtVector> enc_params,
                   Rng& rng, const RunOptions& options) {
  Staged("setup", [&] { group.Validate(); });
  DhfaResult result;
  Transcript& t = result.transcript;
  result.finisher = static_cast<size_t>(rng.UniformBelow(group.n_ecs));
  t.Record("coordinator", "select_finisher", json{{"finisher", result.finisher}});

  const size_t width = enc_params.empty() ? 0 : enc_params.front().size();
  auto masks = Staged("client_mask", [&] {
    return GenerateMasks(group, width, rng, options.zero_masks);
  });
  auto updates = Staged("client_mask", [&] {
    return ClientMask(group, enc_params, masks, rng, &t);
  });
  auto masked = Staged("ec_partial_round", [&] {
    return EcPartialRound(group, updates, &t);
  });
  auto avg = Staged("finisher_average", [&] {
    return FinisherAverage(group.region_pk.n, masked);
  });
  {
    std::vector<BigInt> seen;
    for (const auto& a : avg) {
      seen.push_back(a < 0 ? BigInt(a + group.region_pk.n) : a);
    }
    t.Record("ec" + std::to_string(result.finisher), "average", HexList(seen), seen);
  }
  auto mask_avgs = Staged("mask_average", [&] {
    return EncryptMaskAverages(group, masks, rng);
  });
  if (options.tamper_mask_avgs) options.tamper_mask_avgs(mask_avgs);
  for (size_t i = 0; i < mask_avgs.size(); ++i) {
    t.Record("coordinator", "mask_average",
             json{{"client", i}, {"cts", CtList(mask_avgs[i])}});
  }
  auto outputs = Staged("reencrypt_unmask", [&] {
    return FinisherReencryptAndUnmask(group, avg, mask_avgs, rng);
  });
  for (size_t i = 0; i < outputs.size(); ++i) {
    t.Record("ec" + std::to_string(result.finisher), "deliver",
             json{{"client", i}, {"cts", CtList(outputs[i])}});
  }
  // Every stage succeeded: only now does any client receive its output.
  if (options.deliver) {
    for (size_t i = 0; i < outputs.size(); ++i) options.deliver(i, outputs[i]);
  }
  result.outputs = std::move(outputs);
  return result;
}

// ---------------------------------------------------------------------------

CtVector EncryptParams(const phe::PublicKey& pk, std::span<const double> params,
                       uint64_t scale, Rng& rng) {
  const phe::FixedPointCodec codec(pk.n, scale);
  CtVector out;
  out.reserve(params.size());
  for (double p : params) out.push_back(phe::Encrypt(pk, codec.Encode(p), rng));
  return out;
}

std::vector<double> DecryptParams(const phe::PrivateKey& sk,
                                  const phe::PublicKey& pk,
                                  std::span<const Ciphertext> cts,
                                  uint64_t scale) {
  const phe::FixedPointCodec codec(pk.n, scale);
  std::vector<double> out;
  out.reserve(cts.size());
  for (const auto& c : cts) out.push_back(codec.Decode(phe::Decrypt(sk, pk, c)));
  return out;
}

GroupKeys MakeGroupKeys(unsigned key_bits, size_t n_ecs, size_t n_clients,
                        Rng& rng, uint64_t scale) {
  GroupKeys keys;
  Rng region_rng = rng.Fork("region-key");
  keys.region = phe::GenerateKeyPair(key_bits, region_rng);
  keys.group.n_ecs = n_ecs;
  keys.group.region_pk = keys.region.pub;
  keys.group.shares = phe::SplitKey(keys.region.priv, keys.region.pub, n_ecs, region_rng);
  keys.group.scale = scale;
  for (size_t i = 0; i < n_clients; ++i) {
    Rng client_rng = rng.Fork("client-key-" + std::to_string(i));
    keys.clients.push_back(phe::GenerateKeyPair(key_bits, client_rng));
    keys.group.client_keys.push_back(keys.clients.back().pub);
  }
  return keys;
}

std::vector<uint64_t> AuditReveals(const Transcript& transcript,
                                   std::span<const BigInt> secrets) {
  std::unordered_set<std::string> secret_hex;
  for (const auto& s : secrets) secret_hex.insert(ToHex(s));
  std::vector<uint64_t> hits;
  for (const auto& e : transcript.events()) {
    if (!e.revealed) continue;
    for (const auto& v : *e.revealed) {
      if (secret_hex.count(ToHex(v))) {
        hits.push_back(e.seq);
        break;
      }
    }
  }
  return hits;
}

}  // namespace hefl::dhfa
