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

#ifndef HEFL_PHE_HPP_
#define HEFL_PHE_HPP_

// Paillier encryption with g = n + 1, N-of-N additive splitting of the
// decryption exponent, and a signed fixed-point codec for model weights.
//
// All values are immutable once built; operations are pure functions of their
// inputs plus an explicit Rng.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hefl/bigint.hpp"
#include "hefl/rng.hpp"
#include "json.hpp"

namespace hefl::phe {

/// Key sizes accepted by GenerateKeyPair. 16 is for exhaustive tests only.
bool IsAllowedKeyBits(unsigned bits);

struct PublicKey {
  BigInt n;
  BigInt g;     // always n + 1
  BigInt n_sq;  // n^2
  std::string digest;  // first 16 hex chars of SHA-256(Canonical())

  /// Builds and validates a key from its modulus.
  static PublicKey FromModulus(const BigInt& n);

  /// {"g":"<hex>","n":"<hex>"} with no whitespace.
  std::string Canonical() const;

  bool operator==(const PublicKey& o) const { return n == o.n; }
};

struct PrivateKey {
  BigInt lambda;  // lcm(p-1, q-1)
  BigInt mu;      // L(g^lambda mod n^2)^-1 mod n
  std::string pk_digest;
};

struct KeyPair {
  PublicKey pub;
  PrivateKey priv;
};

struct Ciphertext {
  BigInt c;
  std::string pk_digest;

  bool operator==(const Ciphertext& o) const {
    return c == o.c && pk_digest == o.pk_digest;
  }
};

KeyPair GenerateKeyPair(unsigned bits, Rng& rng);

/// Deterministic construction from known primes (tests and fixtures).
KeyPair KeyPairFromPrimes(const BigInt& p, const BigInt& q);

/// L(u) = (u - 1) / n.
BigInt LFunction(const BigInt& u, const BigInt& n);

Ciphertext Encrypt(const PublicKey& pk, const BigInt& m, Rng& rng);

/// Encryption with caller-chosen nonce r (a unit of Z_n).
Ciphertext EncryptWithNonce(const PublicKey& pk, const BigInt& m,
                            const BigInt& r);

BigInt Decrypt(const PrivateKey& sk, const PublicKey& pk, const Ciphertext& ct);

/// Plaintext addition: c1 * c2 mod n^2.
Ciphertext Add(const PublicKey& pk, const Ciphertext& a, const Ciphertext& b);

/// Plaintext multiplication by k (any integer; reduced mod n).
Ciphertext ScalarMul(const PublicKey& pk, const Ciphertext& ct, const BigInt& k);

/// Plaintext subtraction a - b, as a + (n-1)*b.
Ciphertext Subtract(const PublicKey& pk, const Ciphertext& a,
                    const Ciphertext& b);

/// Throws kKeyMismatch unless ct was produced under pk.
void CheckKey(const PublicKey& pk, const Ciphertext& ct);

/// True when 0 < c < n^2 and gcd(c, n) = 1.
bool IsWellFormed(const PublicKey& pk, const Ciphertext& ct);

// ---------------------------------------------------------------------------
// Key splitting and partial decryption.
//
// The decryption exponent d satisfies d = 0 mod lambda and d = 1 mod n, so
// c^d = 1 + m*n (mod n^2) for c = E(m). It is split into additive shares
// modulo n*lambda (the exponent of the unit group of Z_{n^2}). Each holder
// publishes c^{s_i}; the product over all holders is c^d, and theta * L(.)
// recovers m. Any strict subset leaves a residue that is not 1 mod n with
// overwhelming probability, which CombineRaw reports as malformed.

struct KeyShare {
  size_t index = 0;
  size_t count = 0;
  BigInt value;
  BigInt theta = 1;
  std::string pk_digest;
  std::string set_id;
};

struct KeyShareSet {
  size_t count = 0;
  BigInt theta;
  std::vector<BigInt> shares;
  std::string pk_digest;
  std::string set_id;

  KeyShare Share(size_t index) const;
};

/// d = lambda * (lambda^-1 mod n).
BigInt DecryptionExponent(const PrivateKey& sk, const PublicKey& pk);

/// n * lambda; shares are reduced into [0, ShareModulus).
BigInt ShareModulus(const PrivateKey& sk, const PublicKey& pk);

KeyShareSet SplitKey(const PrivateKey& sk, const PublicKey& pk,
                     size_t n_shares, Rng& rng);

/// Wraps externally derived share values (they must already sum to d mod
/// n*lambda for combination to succeed).
KeyShareSet MakeShareSet(const PublicKey& pk, std::vector<BigInt> shares);

struct PartialDecryption {
  size_t index = 0;
  size_t count = 0;
  BigInt value;
  BigInt theta = 1;
  std::string set_id;
  std::string pk_digest;
  std::string ct_tag;  // binds the partial to one ciphertext
};

PartialDecryption PartialDecrypt(const KeyShare& share, const PublicKey& pk,
                                 const Ciphertext& ct);

/// Full combination: requires every index 0..count-1 exactly once from one
/// share set, all over `ct`.
BigInt CombinePartials(const PublicKey& pk,
                       std::span<const PartialDecryption> partials,
                       const Ciphertext& ct);

/// Combination without the completeness check. Returns nullopt when the
/// product fails the well-formedness test (residue != 1 mod n).
std::optional<BigInt> CombineRaw(const PublicKey& pk,
                                 std::span<const PartialDecryption> partials,
                                 const BigInt& theta = 1);

// ---------------------------------------------------------------------------
// Fixed-point codec: signed reals <-> Z_n. Negative values occupy the upper
// half of Z_n.

class FixedPointCodec {
 public:
  static constexpr uint64_t kDefaultScale = uint64_t{1} << 24;

  FixedPointCodec(const BigInt& n, uint64_t scale = kDefaultScale);

  uint64_t scale() const { return scale_; }
  const BigInt& modulus() const { return n_; }
  const BigInt& half_range() const { return half_range_; }

  /// round(x * scale) (ties to even), mapped into Z_n.
  BigInt Encode(double x) const;
  double Decode(const BigInt& m) const;

  /// Signed integer <-> Z_n without scaling.
  BigInt Wrap(const BigInt& z) const;
  BigInt Unwrap(const BigInt& m) const;

  /// round(x * scale) as a signed integer (no wrapping).
  BigInt Quantize(double x) const;

 private:
  BigInt n_;
  BigInt half_range_;
  uint64_t scale_;
};

// ---------------------------------------------------------------------------
// Canonical JSON forms: lowercase hex magnitudes.

nlohmann::json ToJson(const PublicKey& pk);
nlohmann::json ToJson(const PrivateKey& sk);
nlohmann::json ToJson(const KeyShareSet& s);
nlohmann::json ToJson(const Ciphertext& ct);

PublicKey PublicKeyFromJson(const nlohmann::json& j);
PrivateKey PrivateKeyFromJson(const nlohmann::json& j, const PublicKey& pk);
KeyShareSet ShareSetFromJson(const nlohmann::json& j);
Ciphertext CiphertextFromJson(const nlohmann::json& j);

/// Ciphertext vector <-> compact JSON array bytes (ledger payload form).
std::string SerializeVector(std::span<const Ciphertext> cts);
std::vector<Ciphertext> DeserializeVector(std::string_view bytes);

}  // namespace hefl::phe

#endif  // HEFL_PHE_HPP_
