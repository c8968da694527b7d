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

#include <algorithm>
#include <cmath>
#include <set>

#include "hefl/digest.hpp"
#include "hefl/error.hpp"

namespace hefl::phe {

namespace {

constexpr int kPrimeReps = 40;
constexpr int kMaxPrimeAttempts = 100000;
constexpr int kMaxPairAttempts = 1000;

BigInt Gcd(const BigInt& a, const BigInt& b) {
  BigInt g;
  mpz_gcd(g.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return g;
}

BigInt Lcm(const BigInt& a, const BigInt& b) {
  BigInt l;
  mpz_lcm(l.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return l;
}

BigInt Invert(const BigInt& a, const BigInt& m) {
  BigInt inv;
  if (mpz_invert(inv.get_mpz_t(), a.get_mpz_t(), m.get_mpz_t()) == 0) {
    Fail(ErrorCode::kDomain, "value not invertible");
  }
  return inv;
}

bool IsProbablePrime(const BigInt& x) {
  return mpz_probab_prime_p(x.get_mpz_t(), kPrimeReps) > 0;
}

// Prime with exactly `bits` bits and the top two bits set, so that the
// product of two such primes has exactly 2*bits bits.
BigInt RandomPrime(Rng& rng, size_t bits) {
  if (bits < 3) Fail(ErrorCode::kInvalidArgument, "prime size too small");
  for (int attempt = 0; attempt < kMaxPrimeAttempts; ++attempt) {
    BigInt x = RandomBits(rng, bits);
    mpz_setbit(x.get_mpz_t(), bits - 1);
    mpz_setbit(x.get_mpz_t(), bits - 2);
    mpz_setbit(x.get_mpz_t(), 0);
    if (IsProbablePrime(x)) return x;
  }
  Fail(ErrorCode::kGeneration, "prime search exhausted");
}

std::string Truncated16(const std::string& hex) { return hex.substr(0, 16); }

std::string CiphertextTag(const Ciphertext& ct) {
  return Truncated16(Sha256Hex(ct.pk_digest + ":" + ToHex(ct.c)));
}

std::string ComputeSetId(const std::string& pk_digest,
                         const std::vector<BigInt>& shares,
                         const BigInt& theta) {
  std::string material = pk_digest + "|" + std::to_string(shares.size()) +
                         "|" + ToHex(theta);
  for (const auto& s : shares) material += "|" + ToHex(s);
  return Truncated16(Sha256Hex(material));
}

void CheckDigest(const PublicKey& pk, const std::string& digest,
                 const char* what) {
  if (digest != pk.digest) {
    Fail(ErrorCode::kKeyMismatch,
         std::string(what) + " was produced under a different public key");
  }
}

}  // namespace

bool IsAllowedKeyBits(unsigned bits) {
  switch (bits) {
    case 16:
    case 128:
    case 256:
    case 512:
    case 1024:
    case 2048:
      return true;
    default:
      return false;
  }
}

PublicKey PublicKey::FromModulus(const BigInt& n) {
  if (n < 15) Fail(ErrorCode::kInvalidArgument, "modulus must be >= 15");
  if (mpz_even_p(n.get_mpz_t())) {
    Fail(ErrorCode::kInvalidArgument, "modulus must be odd");
  }
  PublicKey pk;
  pk.n = n;
  pk.g = n + 1;
  pk.n_sq = n * n;
  pk.digest = Truncated16(Sha256Hex(pk.Canonical()));
  return pk;
}

std::string PublicKey::Canonical() const {
  return R"({"g":")" + ToHex(g) + R"(","n":")" + ToHex(n) + R"("})";
}

KeyPair KeyPairFromPrimes(const BigInt& p, const BigInt& q) {
  if (p == q) Fail(ErrorCode::kInvalidArgument, "p and q must differ");
  if (!IsProbablePrime(p) || !IsProbablePrime(q)) {
    Fail(ErrorCode::kInvalidArgument, "p and q must be prime");
  }
  const BigInt n = p * q;
  const BigInt phi = (p - 1) * (q - 1);
  if (Gcd(n, phi) != 1) {
    Fail(ErrorCode::kInvalidArgument, "gcd(n, (p-1)(q-1)) != 1");
  }
  KeyPair kp;
  kp.pub = PublicKey::FromModulus(n);
  kp.priv.lambda = Lcm(p - 1, q - 1);
  const BigInt u = PowMod(kp.pub.g, kp.priv.lambda, kp.pub.n_sq);
  kp.priv.mu = Invert(LFunction(u, n), n);
  kp.priv.pk_digest = kp.pub.digest;
  return kp;
}

KeyPair GenerateKeyPair(unsigned bits, Rng& rng) {
  if (!IsAllowedKeyBits(bits)) {
    Fail(ErrorCode::kInvalidArgument,
         "unsupported key size " + std::to_string(bits));
  }
  const size_t half = bits / 2;
  for (int attempt = 0; attempt < kMaxPairAttempts; ++attempt) {
    const BigInt p = RandomPrime(rng, half);
    const BigInt q = RandomPrime(rng, half);
    if (p == q) continue;
    const BigInt n = p * q;
    if (BitLength(n) != bits) continue;
    if (Gcd(n, (p - 1) * (q - 1)) != 1) continue;
    return KeyPairFromPrimes(p, q);
  }
  Fail(ErrorCode::kGeneration, "key pair search exhausted");
}

BigInt LFunction(const BigInt& u, const BigInt& n) {
  BigInt q = (u - 1) / n;
  return q;
}

void CheckKey(const PublicKey& pk, const Ciphertext& ct) {
  CheckDigest(pk, ct.pk_digest, "ciphertext");
}

bool IsWellFormed(const PublicKey& pk, const Ciphertext& ct) {
  if (ct.pk_digest != pk.digest) return false;
  if (ct.c <= 0 || ct.c >= pk.n_sq) return false;
  return Gcd(ct.c, pk.n) == 1;
}

Ciphertext EncryptWithNonce(const PublicKey& pk, const BigInt& m,
                            const BigInt& r) {
  if (m < 0 || m >= pk.n) {
    Fail(ErrorCode::kDomain, "plaintext outside [0, n)");
  }
  if (r <= 0 || r >= pk.n || Gcd(r, pk.n) != 1) {
    Fail(ErrorCode::kDomain, "nonce must be a unit of Z_n");
  }
  // (1+n)^m = 1 + m*n (mod n^2)
  const BigInt gm = Mod(1 + m * pk.n, pk.n_sq);
  const BigInt rn = PowMod(r, pk.n, pk.n_sq);
  return Ciphertext{Mod(gm * rn, pk.n_sq), pk.digest};
}

Ciphertext Encrypt(const PublicKey& pk, const BigInt& m, Rng& rng) {
  if (m < 0 || m >= pk.n) {
    Fail(ErrorCode::kDomain, "plaintext outside [0, n)");
  }
  return EncryptWithNonce(pk, m, RandomUnit(rng, pk.n));
}

BigInt Decrypt(const PrivateKey& sk, const PublicKey& pk,
               const Ciphertext& ct) {
  CheckDigest(pk, sk.pk_digest, "private key");
  CheckKey(pk, ct);
  const BigInt u = PowMod(ct.c, sk.lambda, pk.n_sq);
  return Mod(LFunction(u, pk.n) * sk.mu, pk.n);
}

Ciphertext Add(const PublicKey& pk, const Ciphertext& a, const Ciphertext& b) {
  CheckKey(pk, a);
  CheckKey(pk, b);
  return Ciphertext{Mod(a.c * b.c, pk.n_sq), pk.digest};
}

Ciphertext ScalarMul(const PublicKey& pk, const Ciphertext& ct,
                     const BigInt& k) {
  CheckKey(pk, ct);
  return Ciphertext{PowMod(ct.c, Mod(k, pk.n), pk.n_sq), pk.digest};
}

Ciphertext Subtract(const PublicKey& pk, const Ciphertext& a,
                    const Ciphertext& b) {
  return Add(pk, a, ScalarMul(pk, b, pk.n - 1));
}

// ---------------------------------------------------------------------------

KeyShare KeyShareSet::Share(size_t index) const {
  if (index >= count) Fail(ErrorCode::kInvalidArgument, "share index range");
  return KeyShare{index, count, shares[index], theta, pk_digest, set_id};
}

BigInt DecryptionExponent(const PrivateKey& sk, const PublicKey& pk) {
  CheckDigest(pk, sk.pk_digest, "private key");
  return sk.lambda * Invert(Mod(sk.lambda, pk.n), pk.n);
}

BigInt ShareModulus(const PrivateKey& sk, const PublicKey& pk) {
  CheckDigest(pk, sk.pk_digest, "private key");
  return pk.n * sk.lambda;
}

KeyShareSet MakeShareSet(const PublicKey& pk, std::vector<BigInt> shares) {
  if (shares.size() < 2) {
    Fail(ErrorCode::kInvalidArgument, "a share set needs at least 2 shares");
  }
  KeyShareSet set;
  set.count = shares.size();
  set.theta = 1;
  set.shares = std::move(shares);
  set.pk_digest = pk.digest;
  set.set_id = ComputeSetId(set.pk_digest, set.shares, set.theta);
  return set;
}

KeyShareSet SplitKey(const PrivateKey& sk, const PublicKey& pk,
                     size_t n_shares, Rng& rng) {
  if (n_shares < 2) {
    Fail(ErrorCode::kInvalidArgument, "split_key requires n_shares >= 2");
  }
  const BigInt modulus = ShareModulus(sk, pk);
  const BigInt d = DecryptionExponent(sk, pk);
  std::vector<BigInt> shares;
  shares.reserve(n_shares);
  BigInt acc = 0;
  for (size_t i = 0; i + 1 < n_shares; ++i) {
    shares.push_back(RandomBelow(rng, modulus));
    acc += shares.back();
  }
  shares.push_back(Mod(d - acc, modulus));
  return MakeShareSet(pk, std::move(shares));
}

PartialDecryption PartialDecrypt(const KeyShare& share, const PublicKey& pk,
                                 const Ciphertext& ct) {
  CheckDigest(pk, share.pk_digest, "key share");
  CheckKey(pk, ct);
  PartialDecryption pd;
  pd.index = share.index;
  pd.count = share.count;
  pd.value = PowMod(ct.c, share.value, pk.n_sq);
  pd.theta = share.theta;
  pd.set_id = share.set_id;
  pd.pk_digest = pk.digest;
  pd.ct_tag = CiphertextTag(ct);
  return pd;
}

std::optional<BigInt> CombineRaw(const PublicKey& pk,
                                 std::span<const PartialDecryption> partials,
                                 const BigInt& theta) {
  BigInt u = 1;
  for (const auto& pd : partials) u = Mod(u * pd.value, pk.n_sq);
  if (Mod(u, pk.n) != 1) return std::nullopt;
  return Mod(LFunction(u, pk.n) * theta, pk.n);
}

BigInt CombinePartials(const PublicKey& pk,
                       std::span<const PartialDecryption> partials,
                       const Ciphertext& ct) {
  CheckKey(pk, ct);
  if (partials.empty()) Fail(ErrorCode::kIncomplete, "no partial decryptions");
  const auto& first = partials.front();
  const std::string tag = CiphertextTag(ct);
  std::set<size_t> seen;
  for (const auto& pd : partials) {
    CheckDigest(pk, pd.pk_digest, "partial decryption");
    if (pd.set_id != first.set_id || pd.count != first.count) {
      Fail(ErrorCode::kKeyMismatch, "partials come from different share sets");
    }
    if (pd.ct_tag != tag) {
      Fail(ErrorCode::kInvalidArgument, "partial belongs to another ciphertext");
    }
    if (!seen.insert(pd.index).second) {
      Fail(ErrorCode::kDuplicate,
           "duplicate share index " + std::to_string(pd.index));
    }
  }
  if (seen.size() != first.count) {
    Fail(ErrorCode::kIncomplete,
         "incomplete share set: " + std::to_string(seen.size()) + " of " +
             std::to_string(first.count));
  }
  auto m = CombineRaw(pk, partials, first.theta);
  if (!m) Fail(ErrorCode::kIncomplete, "combined value is malformed");
  return *m;
}

// ---------------------------------------------------------------------------

FixedPointCodec::FixedPointCodec(const BigInt& n, uint64_t scale)
    : n_(n), half_range_(n / 2), scale_(scale) {
  if (scale == 0) Fail(ErrorCode::kInvalidArgument, "scale must be positive");
}

BigInt FixedPointCodec::Quantize(double x) const {
  if (!std::isfinite(x)) Fail(ErrorCode::kDomain, "non-finite value");
  // Exact for power-of-two scales; nearbyint rounds ties to even.
  const double scaled = std::nearbyint(x * static_cast<double>(scale_));
  BigInt z;
  mpz_set_d(z.get_mpz_t(), scaled);
  return z;
}

BigInt FixedPointCodec::Wrap(const BigInt& z) const {
  if (abs(z) > half_range_) {
    Fail(ErrorCode::kDomain, "fixed-point value out of range");
  }
  return z < 0 ? BigInt(n_ + z) : z;
}

BigInt FixedPointCodec::Unwrap(const BigInt& m) const {
  if (m < 0 || m >= n_) Fail(ErrorCode::kDomain, "residue outside [0, n)");
  return m > half_range_ ? BigInt(m - n_) : m;
}

BigInt FixedPointCodec::Encode(double x) const { return Wrap(Quantize(x)); }

double FixedPointCodec::Decode(const BigInt& m) const {
  const BigInt z = Unwrap(m);
  return z.get_d() / static_cast<double>(scale_);
}

// ---------------------------------------------------------------------------

namespace {

const nlohmann::json& Field(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    Fail(ErrorCode::kParse, std::string("missing field '") + key + "'");
  }
  return j.at(key);
}

BigInt HexField(const nlohmann::json& j, const char* key) {
  const auto& v = Field(j, key);
  if (!v.is_string()) {
    Fail(ErrorCode::kParse, std::string("field '") + key + "' not a string");
  }
  return FromHex(v.get<std::string>());
}

std::string StringField(const nlohmann::json& j, const char* key) {
  const auto& v = Field(j, key);
  if (!v.is_string()) {
    Fail(ErrorCode::kParse, std::string("field '") + key + "' not a string");
  }
  return v.get<std::string>();
}

}  // namespace

nlohmann::json ToJson(const PublicKey& pk) {
  return {{"n", ToHex(pk.n)}, {"g", ToHex(pk.g)}};
}

nlohmann::json ToJson(const PrivateKey& sk) {
  return {{"lambda", ToHex(sk.lambda)}, {"mu", ToHex(sk.mu)}};
}

nlohmann::json ToJson(const KeyShareSet& s) {
  nlohmann::json shares = nlohmann::json::array();
  for (const auto& v : s.shares) shares.push_back(ToHex(v));
  return {{"shares", shares},
          {"theta", ToHex(s.theta)},
          {"pk_digest", s.pk_digest},
          {"set_id", s.set_id}};
}

nlohmann::json ToJson(const Ciphertext& ct) {
  return {{"c", ToHex(ct.c)}, {"pk_digest", ct.pk_digest}};
}

PublicKey PublicKeyFromJson(const nlohmann::json& j) {
  const BigInt n = HexField(j, "n");
  const BigInt g = HexField(j, "g");
  if (g != n + 1) Fail(ErrorCode::kParse, "public key requires g = n + 1");
  return PublicKey::FromModulus(n);
}

PrivateKey PrivateKeyFromJson(const nlohmann::json& j, const PublicKey& pk) {
  PrivateKey sk{HexField(j, "lambda"), HexField(j, "mu"), pk.digest};
  const BigInt u = PowMod(pk.g, sk.lambda, pk.n_sq);
  if (Mod(LFunction(u, pk.n) * sk.mu, pk.n) != 1) {
    Fail(ErrorCode::kKeyMismatch, "private key does not match public key");
  }
  return sk;
}

KeyShareSet ShareSetFromJson(const nlohmann::json& j) {
  const auto& arr = Field(j, "shares");
  if (!arr.is_array() || arr.size() < 2) {
    Fail(ErrorCode::kParse, "shares must be an array of >= 2 entries");
  }
  KeyShareSet s;
  for (const auto& v : arr) {
    if (!v.is_string()) Fail(ErrorCode::kParse, "share not a string");
    s.shares.push_back(FromHex(v.get<std::string>()));
  }
  s.count = s.shares.size();
  s.theta = HexField(j, "theta");
  s.pk_digest = StringField(j, "pk_digest");
  s.set_id = StringField(j, "set_id");
  if (s.set_id != ComputeSetId(s.pk_digest, s.shares, s.theta)) {
    Fail(ErrorCode::kParse, "share set id does not match contents");
  }
  return s;
}

Ciphertext CiphertextFromJson(const nlohmann::json& j) {
  Ciphertext ct{HexField(j, "c"), StringField(j, "pk_digest")};
  if (ct.pk_digest.size() != 16) Fail(ErrorCode::kParse, "bad pk_digest");
  return ct;
}

std::string SerializeVector(std::span<const Ciphertext> cts) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& ct : cts) arr.push_back(ToJson(ct));
  return arr.dump();
}

std::vector<Ciphertext> DeserializeVector(std::string_view bytes) {
  nlohmann::json arr;
  try {
    arr = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kParse, std::string("ciphertext vector: ") + e.what());
  }
  if (!arr.is_array()) Fail(ErrorCode::kParse, "ciphertext vector not array");
  std::vector<Ciphertext> out;
  out.reserve(arr.size());
  for (const auto& j : arr) out.push_back(CiphertextFromJson(j));
  return out;
}

}  // namespace hefl::phe
