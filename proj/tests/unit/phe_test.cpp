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

#include "hefl/phe.hpp"

#include <gtest/gtest.h>

#include <cstdint>
#include <set>
#include <vector>

#include "hefl/digest.hpp"
#include "hefl/error.hpp"

namespace hefl::phe {
namespace {

// Independent oracles over tiny moduli: plain 64-bit arithmetic, no GMP.
uint64_t OraclePowMod(uint64_t base, uint64_t exp, uint64_t mod) {
  uint64_t acc = 1 % mod;
  for (uint64_t i = 0; i < exp; ++i) acc = (acc * base) % mod;
  return acc;
}

uint64_t OracleGcd(uint64_t a, uint64_t b) {
  while (b != 0) {
    uint64_t t = a % b;
    a = b;
    b = t;
  }
  return a;
}

// Finds m by enumerating every (m, r) with (1+n)^m r^n = c (mod n^2).
int64_t OracleBruteDecrypt(uint64_t n, uint64_t c) {
  const uint64_t n2 = n * n;
  for (uint64_t m = 0; m < n; ++m) {
    const uint64_t gm = OraclePowMod(n + 1, m, n2);
    for (uint64_t r = 1; r < n; ++r) {
      if (OracleGcd(r, n) != 1) continue;
      if ((gm * OraclePowMod(r, n, n2)) % n2 == c) return static_cast<int64_t>(m);
    }
  }
  return -1;
}

std::vector<uint64_t> UnitsOf(uint64_t n) {
  std::vector<uint64_t> out;
  for (uint64_t r = 1; r < n; ++r) {
    if (OracleGcd(r, n) == 1) out.push_back(r);
  }
  return out;
}

ErrorCode CodeOf(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an hefl::Error";
  return ErrorCode::kInvalidArgument;
}

class TinyKeyTest : public ::testing::Test {
 protected:
  KeyPair kp_ = KeyPairFromPrimes(3, 5);
};

TEST_F(TinyKeyTest, HandComputedKey) {
  EXPECT_EQ(kp_.pub.n, 15);
  EXPECT_EQ(kp_.pub.g, 16);
  EXPECT_EQ(kp_.pub.n_sq, 225);
  EXPECT_EQ(kp_.priv.lambda, 4);  // lcm(2, 4)
  EXPECT_EQ(kp_.priv.mu, 4);      // L(16^4 mod 225) = 4, 4^-1 mod 15 = 4
}

TEST_F(TinyKeyTest, EncryptZeroWithNonceTwo) {
  const auto ct = EncryptWithNonce(kp_.pub, 0, 2);
  EXPECT_EQ(ct.c, OraclePowMod(2, 15, 225));
  EXPECT_EQ(ct.c, 143);
  EXPECT_EQ(Decrypt(kp_.priv, kp_.pub, ct), 0);
}

TEST_F(TinyKeyTest, EncryptTwoWithNonceFour) {
  const auto ct = EncryptWithNonce(kp_.pub, 2, 4);
  EXPECT_EQ(OracleBruteDecrypt(15, ct.c.get_ui()), 2);
  EXPECT_EQ(Decrypt(kp_.priv, kp_.pub, ct), 2);
}

TEST_F(TinyKeyTest, ExhaustiveRoundtrip) {
  for (uint64_t m = 0; m < 15; ++m) {
    for (uint64_t r : UnitsOf(15)) {
      const auto ct = EncryptWithNonce(kp_.pub, m, r);
      ASSERT_TRUE(IsWellFormed(kp_.pub, ct));
      ASSERT_EQ(OracleBruteDecrypt(15, ct.c.get_ui()), static_cast<int64_t>(m));
      ASSERT_EQ(Decrypt(kp_.priv, kp_.pub, ct), m) << "m=" << m << " r=" << r;
    }
  }
}

TEST_F(TinyKeyTest, ExhaustiveAdditiveHomomorphism) {
  for (uint64_t a = 0; a < 15; ++a) {
    for (uint64_t b = 0; b < 15; ++b) {
      const auto ca = EncryptWithNonce(kp_.pub, a, 2);
      const auto cb = EncryptWithNonce(kp_.pub, b, 7);
      ASSERT_EQ(Decrypt(kp_.priv, kp_.pub, Add(kp_.pub, ca, cb)), (a + b) % 15);
    }
  }
}

TEST_F(TinyKeyTest, AdditionExamples) {
  auto e = [&](uint64_t m) { return EncryptWithNonce(kp_.pub, m, 4); };
  EXPECT_EQ(Decrypt(kp_.priv, kp_.pub, Add(kp_.pub, e(2), e(3))), 5);
  EXPECT_EQ(Decrypt(kp_.priv, kp_.pub, Add(kp_.pub, e(9), e(0))), 9);
  EXPECT_EQ(Decrypt(kp_.priv, kp_.pub, Add(kp_.pub, e(14), e(2))), 1);
}

TEST_F(TinyKeyTest, ScalarLaw) {
  const auto c4 = EncryptWithNonce(kp_.pub, 4, 8);
  EXPECT_EQ(Decrypt(kp_.priv, kp_.pub, ScalarMul(kp_.pub, c4, 3)), 12);
  EXPECT_EQ(Decrypt(kp_.priv, kp_.pub, ScalarMul(kp_.pub, c4, 1)), 4);
  for (uint64_t m = 0; m < 15; ++m) {
    const auto c = EncryptWithNonce(kp_.pub, m, 2);
    const auto neg = ScalarMul(kp_.pub, c, 14);
    ASSERT_EQ(Decrypt(kp_.priv, kp_.pub, Add(kp_.pub, c, neg)), 0);
    for (uint64_t k = 0; k < 15; ++k) {
      ASSERT_EQ(Decrypt(kp_.priv, kp_.pub, ScalarMul(kp_.pub, c, k)),
                (k * m) % 15);
    }
  }
}

TEST_F(TinyKeyTest, PlaintextRangeIsEnforced) {
  Rng rng(1);
  EXPECT_EQ(CodeOf([&] { Encrypt(kp_.pub, 15, rng); }), ErrorCode::kDomain);
  EXPECT_EQ(CodeOf([&] { Encrypt(kp_.pub, -1, rng); }), ErrorCode::kDomain);
  EXPECT_EQ(CodeOf([&] { EncryptWithNonce(kp_.pub, 1, 5); }),
            ErrorCode::kDomain);
}

TEST_F(TinyKeyTest, SplitTwoSharesDecryptsEverything) {
  Rng rng(11);
  const auto set = SplitKey(kp_.priv, kp_.pub, 2, rng);
  ASSERT_EQ(set.count, 2u);
  const BigInt modulus = ShareModulus(kp_.priv, kp_.pub);
  EXPECT_EQ(modulus, 60);
  EXPECT_EQ(Mod(set.shares[0] + set.shares[1], modulus),
            DecryptionExponent(kp_.priv, kp_.pub));
  for (uint64_t m = 0; m < 15; ++m) {
    for (uint64_t r : UnitsOf(15)) {
      const auto ct = EncryptWithNonce(kp_.pub, m, r);
      std::vector<PartialDecryption> parts = {
          PartialDecrypt(set.Share(0), kp_.pub, ct),
          PartialDecrypt(set.Share(1), kp_.pub, ct)};
      ASSERT_EQ(CombinePartials(kp_.pub, parts, ct), m);
    }
  }
}

TEST_F(TinyKeyTest, SplitRejectsSingleShare) {
  Rng rng(1);
  EXPECT_EQ(CodeOf([&] { SplitKey(kp_.priv, kp_.pub, 1, rng); }),
            ErrorCode::kInvalidArgument);
}

TEST_F(TinyKeyTest, StrictSubsetIsFlagged) {
  Rng rng(5);
  const auto set = SplitKey(kp_.priv, kp_.pub, 3, rng);
  const auto ct = EncryptWithNonce(kp_.pub, 7, 2);
  std::vector<PartialDecryption> one = {PartialDecrypt(set.Share(0), kp_.pub, ct)};
  EXPECT_EQ(CodeOf([&] { CombinePartials(kp_.pub, one, ct); }),
            ErrorCode::kIncomplete);
}

TEST(PheKeygen, SixteenBitDeterministicRoundtrip) {
  Rng a(7), b(7);
  const auto kp = GenerateKeyPair(16, a);
  const auto kp2 = GenerateKeyPair(16, b);
  EXPECT_EQ(kp.pub.n, kp2.pub.n);
  EXPECT_EQ(BitLength(kp.pub.n), 16u);
  Rng rng(70);
  for (int i = 0; i < 100; ++i) {
    const BigInt m = RandomBelow(rng, kp.pub.n);
    ASSERT_EQ(Decrypt(kp.priv, kp.pub, Encrypt(kp.pub, m, rng)), m);
  }
}

TEST(PheKeygen, RejectsUnsupportedSizes) {
  Rng rng(1);
  EXPECT_EQ(CodeOf([&] { GenerateKeyPair(100, rng); }),
            ErrorCode::kInvalidArgument);
}

TEST(PheKeygen, ModulusHasRequestedLength) {
  for (unsigned bits : {128u, 256u, 512u}) {
    Rng rng(bits);
    const auto kp = GenerateKeyPair(bits, rng);
    EXPECT_EQ(BitLength(kp.pub.n), bits);
    EXPECT_EQ(kp.pub.g, kp.pub.n + 1);
  }
}

class MediumKeyTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    Rng rng(2024);
    kp_ = new KeyPair(GenerateKeyPair(512, rng));
  }
  static void TearDownTestSuite() { delete kp_; }
  static KeyPair* kp_;
};
KeyPair* MediumKeyTest::kp_ = nullptr;

TEST_F(MediumKeyTest, RandomRoundtripAndHomomorphism) {
  Rng rng(3);
  const auto& pk = kp_->pub;
  for (int i = 0; i < 200; ++i) {
    const BigInt a = RandomBelow(rng, pk.n);
    const BigInt b = RandomBelow(rng, pk.n);
    const BigInt k = RandomBelow(rng, pk.n);
    const auto ca = Encrypt(pk, a, rng);
    const auto cb = Encrypt(pk, b, rng);
    ASSERT_EQ(Decrypt(kp_->priv, pk, ca), a);
    ASSERT_EQ(Decrypt(kp_->priv, pk, Add(pk, ca, cb)), Mod(a + b, pk.n));
    ASSERT_EQ(Decrypt(kp_->priv, pk, ScalarMul(pk, ca, k)), Mod(a * k, pk.n));
    ASSERT_EQ(Decrypt(kp_->priv, pk, Subtract(pk, ca, cb)), Mod(a - b, pk.n));
  }
}

TEST_F(MediumKeyTest, EncryptionIsProbabilistic) {
  Rng rng(4);
  std::set<std::string> seen;
  for (int i = 0; i < 100; ++i) {
    seen.insert(ToHex(Encrypt(kp_->pub, 42, rng).c));
  }
  EXPECT_EQ(seen.size(), 100u);
}

TEST_F(MediumKeyTest, SharesCompleteAndSubsetsMalformed) {
  const auto& pk = kp_->pub;
  for (size_t n_shares : {2u, 3u, 5u}) {
    Rng rng(100 + n_shares);
    const auto set = SplitKey(kp_->priv, pk, n_shares, rng);
    for (int trial = 0; trial < 200; ++trial) {
      const BigInt m = RandomBelow(rng, pk.n);
      const auto ct = Encrypt(pk, m, rng);
      std::vector<PartialDecryption> parts;
      for (size_t i = 0; i < n_shares; ++i) {
        parts.push_back(PartialDecrypt(set.Share(i), pk, ct));
      }
      ASSERT_EQ(CombinePartials(pk, parts, ct), Decrypt(kp_->priv, pk, ct));
      if (trial < 20) {
        // Dropping any single partial breaks well-formedness.
        for (size_t drop = 0; drop < n_shares; ++drop) {
          std::vector<PartialDecryption> subset;
          for (size_t i = 0; i < n_shares; ++i) {
            if (i != drop) subset.push_back(parts[i]);
          }
          ASSERT_FALSE(CombineRaw(pk, subset).has_value());
          ASSERT_EQ(CodeOf([&] { CombinePartials(pk, subset, ct); }),
                    ErrorCode::kIncomplete);
        }
      }
    }
    const auto zero = Encrypt(pk, 0, rng);
    std::vector<PartialDecryption> parts;
    for (size_t i = 0; i < n_shares; ++i) {
      parts.push_back(PartialDecrypt(set.Share(i), pk, zero));
    }
    EXPECT_EQ(CombinePartials(pk, parts, zero), 0);
  }
}

TEST_F(MediumKeyTest, DuplicateAndForeignSharesRejected) {
  const auto& pk = kp_->pub;
  Rng rng(8);
  const auto set = SplitKey(kp_->priv, pk, 3, rng);
  const auto ct = Encrypt(pk, 5, rng);
  std::vector<PartialDecryption> dup = {PartialDecrypt(set.Share(0), pk, ct),
                                        PartialDecrypt(set.Share(0), pk, ct),
                                        PartialDecrypt(set.Share(1), pk, ct)};
  EXPECT_EQ(CodeOf([&] { CombinePartials(pk, dup, ct); }),
            ErrorCode::kDuplicate);

  Rng other_rng(9);
  const auto other = GenerateKeyPair(256, other_rng);
  const auto foreign_set = SplitKey(other.priv, other.pub, 3, other_rng);
  EXPECT_EQ(CodeOf([&] { PartialDecrypt(foreign_set.Share(0), pk, ct); }),
            ErrorCode::kKeyMismatch);

  // Two share sets of the same key cannot be mixed.
  const auto second = SplitKey(kp_->priv, pk, 3, rng);
  std::vector<PartialDecryption> mixed = {
      PartialDecrypt(set.Share(0), pk, ct), PartialDecrypt(set.Share(1), pk, ct),
      PartialDecrypt(second.Share(2), pk, ct)};
  EXPECT_EQ(CodeOf([&] { CombinePartials(pk, mixed, ct); }),
            ErrorCode::kKeyMismatch);
}

TEST_F(MediumKeyTest, KeyMismatchOnDecrypt) {
  Rng rng(12);
  const auto other = GenerateKeyPair(512, rng);
  const auto ct = Encrypt(kp_->pub, 1, rng);
  EXPECT_EQ(CodeOf([&] { Decrypt(other.priv, other.pub, ct); }),
            ErrorCode::kKeyMismatch);
  EXPECT_EQ(CodeOf([&] {
              Add(kp_->pub, ct, Encrypt(other.pub, 1, rng));
            }),
            ErrorCode::kKeyMismatch);
}

TEST_F(MediumKeyTest, CanonicalSerialization) {
  const auto& pk = kp_->pub;
  EXPECT_EQ(pk.digest, Sha256Hex(pk.Canonical()).substr(0, 16));
  EXPECT_EQ(pk.Canonical(), ToJson(pk).dump());
  const auto back = PublicKeyFromJson(nlohmann::json::parse(ToJson(pk).dump()));
  EXPECT_EQ(back.digest, pk.digest);
  const auto sk = PrivateKeyFromJson(ToJson(kp_->priv), pk);
  EXPECT_EQ(sk.lambda, kp_->priv.lambda);

  Rng rng(13);
  std::vector<Ciphertext> cts;
  for (int i = 0; i < 5; ++i) cts.push_back(Encrypt(pk, i, rng));
  EXPECT_EQ(DeserializeVector(SerializeVector(cts)), cts);

  const auto set = SplitKey(kp_->priv, pk, 3, rng);
  const auto set_back = ShareSetFromJson(ToJson(set));
  EXPECT_EQ(set_back.set_id, set.set_id);
  EXPECT_EQ(set_back.shares, set.shares);

  auto j = ToJson(cts[0]);
  std::string c = j["c"];
  for (auto& ch : c) ch = static_cast<char>(std::toupper(ch));
  j["c"] = c;
  EXPECT_EQ(CodeOf([&] { CiphertextFromJson(j); }), ErrorCode::kParse);
}

TEST(FixedPoint, Examples) {
  Rng rng(1);
  const auto kp = GenerateKeyPair(512, rng);
  const FixedPointCodec codec(kp.pub.n);
  EXPECT_EQ(codec.Encode(0.0), 0);
  EXPECT_EQ(codec.Decode(0), 0.0);
  const BigInt m = codec.Encode(-1.5);
  EXPECT_EQ(m, kp.pub.n - 3 * (BigInt(1) << 23));
  EXPECT_EQ(codec.Decode(m), -1.5);
  EXPECT_LE(std::abs(codec.Decode(codec.Encode(0.1)) - 0.1), 0x1.0p-24);
}

TEST(FixedPoint, RangeAndOrdering) {
  const FixedPointCodec codec(BigInt(15 * 17), 4);  // half_range 127
  EXPECT_EQ(CodeOf([&] { codec.Encode(40.0); }), ErrorCode::kDomain);
  EXPECT_EQ(codec.Decode(codec.Encode(31.75)), 31.75);
  EXPECT_EQ(CodeOf([&] { codec.Encode(std::nan("")); }), ErrorCode::kDomain);
  // Multiples of 1/scale roundtrip exactly and decode preserves order.
  double prev = -1e9;
  for (int z = -127; z <= 127; ++z) {
    const double x = z / 4.0;
    const double back = codec.Decode(codec.Encode(x));
    ASSERT_EQ(back, x);
    ASSERT_GT(back, prev);
    prev = back;
  }
}

}  // namespace
}  // namespace hefl::phe
