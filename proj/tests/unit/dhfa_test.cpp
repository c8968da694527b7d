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

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "hefl/fl.hpp"

namespace hefl::dhfa {
namespace {

// One region key and a handful of client keys, generated once per bit size.
struct KeyPool {
  phe::KeyPair region;
  std::vector<phe::KeyPair> clients;
};

const KeyPool& Pool(unsigned bits) {
  static std::map<unsigned, KeyPool> pools;
  auto it = pools.find(bits);
  if (it != pools.end()) return it->second;
  Rng rng(4242 + bits, "pool");
  KeyPool p;
  p.region = phe::GenerateKeyPair(bits, rng);
  for (int i = 0; i < 7; ++i) p.clients.push_back(phe::GenerateKeyPair(bits, rng));
  return pools.emplace(bits, std::move(p)).first->second;
}

DhfaGroup GroupFor(const KeyPool& pool, size_t n_ecs, size_t n_clients, Rng& rng) {
  DhfaGroup g;
  g.n_ecs = n_ecs;
  g.region_pk = pool.region.pub;
  g.shares = phe::SplitKey(pool.region.priv, pool.region.pub, n_ecs, rng);
  for (size_t i = 0; i < n_clients; ++i) g.client_keys.push_back(pool.clients[i].pub);
  return g;
}

std::vector<std::vector<double>> RandomParams(size_t n_clients, size_t width, Rng& rng) {
  std::vector<std::vector<double>> p(n_clients, std::vector<double>(width));
  for (auto& row : p) for (auto& x : row) x = rng.UniformReal(-2.0, 2.0);
  return p;
}

std::vector<CtVector> EncryptAll(const DhfaGroup& g,
                                 const std::vector<std::vector<double>>& p, Rng& rng) {
  std::vector<CtVector> out;
  for (const auto& row : p) out.push_back(EncryptParams(g.region_pk, row, g.scale, rng));
  return out;
}

// Plaintext reference: fixed-point quantized inputs, exact mean.
std::vector<double> OracleAverage(const std::vector<std::vector<double>>& p,
                                  uint64_t scale) {
  std::vector<double> out(p.front().size(), 0.0);
  for (size_t k = 0; k < out.size(); ++k) {
    long double s = 0;
    for (const auto& row : p) s += std::nearbyint(row[k] * scale);
    out[k] = static_cast<double>(s / p.size() / scale);
  }
  return out;
}

void ExpectMatchesOracle(const KeyPool& pool, const DhfaGroup& g,
                         const std::vector<std::vector<double>>& p,
                         const DhfaResult& res) {
  const auto oracle = OracleAverage(p, g.scale);
  const std::vector<double> plain = fl::PlaintextFedAvg(p);
  ASSERT_EQ(res.outputs.size(), p.size());
  for (size_t i = 0; i < p.size(); ++i) {
    auto got = DecryptParams(pool.clients[i].priv, pool.clients[i].pub,
                             res.outputs[i], g.scale);
    ASSERT_EQ(got.size(), oracle.size());
    for (size_t k = 0; k < got.size(); ++k) {
      EXPECT_LE(std::abs(got[k] - oracle[k]), 1.0 / g.scale);
      EXPECT_LE(std::abs(got[k] - plain[k]), 1.0 / g.scale);
    }
  }
}

TEST(ClientMask, ZeroMaskPreservesPlaintext) {
  const auto& pool = Pool(256);
  Rng rng(1);
  auto g = GroupFor(pool, 2, 2, rng);
  auto p = RandomParams(2, 3, rng);
  auto enc = EncryptAll(g, p, rng);
  auto masks = GenerateMasks(g, 3, rng, /*zero=*/true);
  auto updates = ClientMask(g, enc, masks, rng);
  ASSERT_EQ(updates.size(), 2u);
  phe::FixedPointCodec codec(g.region_pk.n, g.scale);
  for (size_t i = 0; i < 2; ++i) {
    ASSERT_EQ(updates[i].masked.size(), 3u);
    for (size_t k = 0; k < 3; ++k) {
      EXPECT_EQ(phe::Decrypt(pool.region.priv, pool.region.pub, updates[i].masked[k]),
                codec.Encode(p[i][k]));
    }
  }
}

TEST(ClientMask, SmallModulusMaskedSums) {
  auto kp = phe::KeyPairFromPrimes(3, 5);
  Rng rng(2);
  DhfaGroup g;
  g.n_ecs = 2;
  g.region_pk = kp.pub;
  g.shares = phe::SplitKey(kp.priv, kp.pub, 2, rng);
  g.client_keys = {kp.pub, kp.pub};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::vector<BigInt>> plain(2), masks(2);
    std::vector<CtVector> enc(2);
    for (size_t i = 0; i < 2; ++i) {
      for (int k = 0; k < 3; ++k) {
        plain[i].push_back(rng.UniformBelow(15));
        masks[i].push_back(rng.UniformBelow(15));
        enc[i].push_back(phe::Encrypt(kp.pub, plain[i].back(), rng));
      }
    }
    auto updates = ClientMask(g, enc, masks, rng);
    auto recovered = EcPartialRound(g, updates);
    for (size_t i = 0; i < 2; ++i) {
      for (size_t k = 0; k < 3; ++k) {
        const BigInt expect = (plain[i][k] + masks[i][k]) % 15;
        EXPECT_EQ(phe::Decrypt(kp.priv, kp.pub, updates[i].masked[k]), expect);
        EXPECT_EQ(recovered[i][k], expect);
      }
    }
  }
}

TEST(ClientMask, RejectsMismatches) {
  const auto& pool = Pool(256);
  Rng rng(3);
  auto g = GroupFor(pool, 2, 2, rng);
  auto p = RandomParams(2, 3, rng);
  auto enc = EncryptAll(g, p, rng);
  auto masks = GenerateMasks(g, 3, rng);
  auto short_enc = enc;
  short_enc[1].pop_back();
  EXPECT_THROW(ClientMask(g, short_enc, masks, rng), Error);
  auto foreign = enc;
  foreign[0][0] = phe::Encrypt(pool.clients[0].pub, 1, rng);
  try {
    ClientMask(g, foreign, masks, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kKeyMismatch);
  }
}

TEST(Masks, ColumnSumsDivisible) {
  const auto& pool = Pool(256);
  Rng rng(4);
  for (size_t nc : {1u, 2u, 3u, 7u}) {
    auto g = GroupFor(pool, 2, nc, rng);
    auto masks = GenerateMasks(g, 20, rng);
    const BigInt bound = g.region_pk.n / (8 * nc);
    const BigInt mod = BigInt(static_cast<unsigned long>(nc * g.scale));
    for (size_t k = 0; k < 20; ++k) {
      BigInt sum = 0;
      for (size_t i = 0; i < nc; ++i) {
        EXPECT_GE(masks[i][k], 0);
        EXPECT_LT(masks[i][k], bound);
        sum += masks[i][k];
      }
      EXPECT_EQ(sum % mod, 0);
    }
  }
}

TEST(EcPartialRound, RecoversMaskedValuesAndHidesRaw) {
  const auto& pool = Pool(256);
  Rng rng(5);
  auto g = GroupFor(pool, 3, 3, rng);
  auto p = RandomParams(3, 9, rng);
  auto enc = EncryptAll(g, p, rng);
  auto masks = GenerateMasks(g, 9, rng);
  Transcript t;
  auto updates = ClientMask(g, enc, masks, rng, &t);
  auto masked = EcPartialRound(g, updates, &t);
  phe::FixedPointCodec codec(g.region_pk.n, g.scale);
  std::vector<BigInt> raw;
  for (size_t i = 0; i < 3; ++i) {
    for (size_t k = 0; k < 9; ++k) {
      const BigInt pe = codec.Encode(p[i][k]);
      raw.push_back(pe);
      EXPECT_EQ(masked[i][k], (pe + masks[i][k]) % g.region_pk.n);
    }
  }
  EXPECT_TRUE(AuditReveals(t, raw).empty());
  // Sanity of the audit itself: zero masks leak everything.
  Transcript leak;
  auto zero = GenerateMasks(g, 9, rng, true);
  EcPartialRound(g, ClientMask(g, enc, zero, rng), &leak);
  EXPECT_FALSE(AuditReveals(leak, raw).empty());
}

TEST(EcPartialRound, OfflineEcIncomplete) {
  const auto& pool = Pool(256);
  Rng rng(6);
  auto g = GroupFor(pool, 3, 2, rng);
  auto enc = EncryptAll(g, RandomParams(2, 3, rng), rng);
  auto updates = ClientMask(g, enc, GenerateMasks(g, 3, rng), rng);
  g.offline_ecs = {1};
  try {
    EcPartialRound(g, updates);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIncomplete);
  }
}

TEST(FinisherAverage, Examples) {
  const BigInt n = 1000003;
  std::vector<std::vector<BigInt>> m{{5}, {7}};
  EXPECT_EQ(FinisherAverage(n, m), std::vector<BigInt>{6});
  std::vector<std::vector<BigInt>> neg{{n - 3}, {n - 5}};
  EXPECT_EQ(FinisherAverage(n, neg), std::vector<BigInt>{-4});
  EXPECT_THROW(FinisherAverage(n, {}), Error);
}

TEST(FinisherAverage, ExhaustiveSmallModulusRounding) {
  const BigInt n = 211;
  for (int nc = 2; nc <= 4; ++nc) {
    int total = 1;
    for (int i = 0; i < nc; ++i) total *= 13;
    for (int code = 0; code < total; ++code) {
      std::vector<std::vector<BigInt>> rows;
      int c = code, sum = 0;
      for (int i = 0; i < nc; ++i) {
        const int v = c % 13 - 6;
        c /= 13;
        sum += v;
        rows.push_back({BigInt(v < 0 ? 211 + v : v)});
      }
      const BigInt got = FinisherAverage(n, rows)[0];
      const double exact = static_cast<double>(sum) / nc;
      EXPECT_LE(std::abs(got.get_d() - exact), 0.5);
      if (sum % nc != 0 && std::abs(got.get_d() - exact) == 0.5) {
        EXPECT_EQ(mpz_even_p(got.get_mpz_t()) != 0, true) << sum << "/" << nc;
      }
    }
  }
}

TEST(RunDhfa, MatchesPlaintextFedAvg) {
  const auto& pool = Pool(256);
  Rng rng(7);
  for (size_t nc : {2u, 3u, 7u}) {
    for (size_t w : {3u, 276u}) {
      auto g = GroupFor(pool, 3, nc, rng);
      auto p = RandomParams(nc, w, rng);
      auto enc = EncryptAll(g, p, rng);
      auto res = RunDhfa(g, enc, rng);
      ExpectMatchesOracle(pool, g, p, res);
    }
  }
}

TEST(RunDhfa, SingleClientAndIdenticalInputs) {
  const auto& pool = Pool(256);
  Rng rng(8);
  auto g1 = GroupFor(pool, 2, 1, rng);
  auto p1 = RandomParams(1, 5, rng);
  auto res1 = RunDhfa(g1, EncryptAll(g1, p1, rng), rng);
  auto out1 = DecryptParams(pool.clients[0].priv, pool.clients[0].pub,
                            res1.outputs[0], g1.scale);
  for (size_t k = 0; k < 5; ++k) {
    EXPECT_EQ(out1[k], std::nearbyint(p1[0][k] * g1.scale) / g1.scale);
  }
  auto g = GroupFor(pool, 3, 4, rng);
  auto row = RandomParams(1, 6, rng)[0];
  std::vector<std::vector<double>> same(4, row);
  auto res = RunDhfa(g, EncryptAll(g, same, rng), rng);
  for (size_t i = 0; i < 4; ++i) {
    auto out = DecryptParams(pool.clients[i].priv, pool.clients[i].pub,
                             res.outputs[i], g.scale);
    for (size_t k = 0; k < 6; ++k) {
      EXPECT_EQ(out[k], std::nearbyint(row[k] * g.scale) / g.scale);
    }
  }
}

TEST(RunDhfa, OutputsBoundToClientKeys) {
  const auto& pool = Pool(256);
  Rng rng(9);
  auto g = GroupFor(pool, 2, 3, rng);
  auto res = RunDhfa(g, EncryptAll(g, RandomParams(3, 3, rng), rng), rng);
  for (size_t i = 0; i < 3; ++i) {
    for (size_t j = 0; j < 3; ++j) {
      if (i == j) continue;
      try {
        phe::Decrypt(pool.clients[j].priv, pool.clients[j].pub, res.outputs[i][0]);
        FAIL();
      } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::kKeyMismatch);
      }
    }
  }
}

TEST(RunDhfa, DeterministicTranscript) {
  const auto& pool = Pool(256);
  auto once = [&] {
    Rng rng(10);
    auto g = GroupFor(pool, 3, 2, rng);
    auto enc = EncryptAll(g, RandomParams(2, 4, rng), rng);
    return RunDhfa(g, enc, rng);
  };
  auto a = once(), b = once();
  EXPECT_EQ(a.transcript.Digest(), b.transcript.Digest());
  EXPECT_EQ(a.finisher, b.finisher);
  std::istringstream lines(a.transcript.ToJsonLines());
  std::string line;
  size_t count = 0;
  while (std::getline(lines, line)) {
    auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("seq"), count);
    EXPECT_TRUE(j.contains("party") && j.contains("step"));
    EXPECT_EQ(j.at("digest").get<std::string>().size(), 64u);
    ++count;
  }
  EXPECT_EQ(count, a.transcript.events().size());
}

TEST(RunDhfa, EveryEcServesAsFinisher) {
  const auto& pool = Pool(128);
  Rng rng(11);
  for (size_t n : {2u, 3u, 5u}) {
    auto g = GroupFor(pool, n, 1, rng);
    auto enc = EncryptAll(g, std::vector<std::vector<double>>{{0.5}}, rng);
    std::vector<int> hits(n, 0);
    for (int run = 0; run < 1000; ++run) {
      Rng run_rng(static_cast<uint64_t>(run), "finisher");
      hits[RunDhfa(g, enc, run_rng).finisher]++;
    }
    for (size_t i = 0; i < n; ++i) EXPECT_GT(hits[i], 0) << "EC " << i;
  }
}

TEST(RunDhfa, AbortDeliversNothing) {
  const auto& pool = Pool(256);
  Rng rng(12);
  auto g = GroupFor(pool, 3, 3, rng);
  auto enc = EncryptAll(g, RandomParams(3, 3, rng), rng);
  int delivered = 0;
  RunOptions opt;
  opt.deliver = [&](size_t, const CtVector&) { ++delivered; };
  opt.tamper_mask_avgs = [&](std::vector<CtVector>& avgs) {
    avgs[2][1] = phe::Encrypt(pool.clients[0].pub, 1, rng);
  };
  try {
    RunDhfa(g, enc, rng, opt);
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "reencrypt_unmask");
    EXPECT_EQ(e.code(), ErrorCode::kKeyMismatch);
  }
  EXPECT_EQ(delivered, 0);

  g.offline_ecs = {0};
  RunOptions plain;
  plain.deliver = opt.deliver;
  try {
    RunDhfa(g, enc, rng, plain);
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "ec_partial_round");
    EXPECT_EQ(e.code(), ErrorCode::kIncomplete);
  }
  EXPECT_EQ(delivered, 0);
  g.offline_ecs.clear();
  RunDhfa(g, enc, rng, plain);
  EXPECT_EQ(delivered, 3);
}

TEST(RunDhfa, ExtraRecipientsGetTheContributorAverage) {
  const auto& pool = Pool(256);
  Rng rng(14);
  auto g = GroupFor(pool, 2, 2, rng);
  g.extra_recipients = {pool.clients[2].pub};
  auto p = RandomParams(2, 4, rng);
  auto res = RunDhfa(g, EncryptAll(g, p, rng), rng);
  ASSERT_EQ(res.outputs.size(), 3u);
  const auto oracle = OracleAverage(p, g.scale);
  auto got = DecryptParams(pool.clients[2].priv, pool.clients[2].pub, res.outputs[2], g.scale);
  for (size_t k = 0; k < 4; ++k) EXPECT_LE(std::abs(got[k] - oracle[k]), 1.0 / g.scale);
}

TEST(Group, Validation) {
  const auto& pool = Pool(128);
  Rng rng(13);
  auto g = GroupFor(pool, 2, 2, rng);
  g.n_ecs = 1;
  EXPECT_THROW(g.Validate(), Error);
  auto h = GroupFor(pool, 3, 2, rng);
  h.n_ecs = 2;
  EXPECT_THROW(h.Validate(), Error);
  auto keys = MakeGroupKeys(128, 3, 2, rng);
  EXPECT_NO_THROW(keys.group.Validate());
  EXPECT_EQ(keys.clients.size(), 2u);
}

}  // namespace
}  // namespace hefl::dhfa
