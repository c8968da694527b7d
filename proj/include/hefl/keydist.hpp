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

#ifndef HEFL_KEYDIST_HPP_
#define HEFL_KEYDIST_HPP_

// Partial private key distribution between the key authority (KAC) and a
// roadside edge node (REN).
//
// Each side holds a secret point. Without revealing either point they agree
// on the line through both: KAC publishes its encrypted coordinates, REN
// returns blinded encrypted differences k*(a - b) over several rounds whose
// blinding products cancel, and KAC recovers the sign and the exact slope
// dy/dx. The agreed line then seeds the edge computers' decryption shares.

#include <cstddef>
#include <string>
#include <vector>

#include "hefl/bigint.hpp"
#include "hefl/phe.hpp"
#include "hefl/rng.hpp"

namespace hefl::keydist {

using Rational = mpq_class;

inline constexpr int kProtocolVersion = 1;
inline constexpr size_t kDefaultRounds = 3;

struct SysPara {
  unsigned security_param = 0;
  phe::PublicKey pk_kac;
  phe::PublicKey pk_ren;
  int protocol_version = kProtocolVersion;
  BigInt coord_bound;  // public: protocol coordinates lie in [0, coord_bound)
};

/// SysPara plus each party's master key (IKeyGen / RENKeyGen).
struct SetupResult {
  SysPara para;
  phe::KeyPair kac;
  phe::KeyPair ren;
};

SetupResult Setup(unsigned security_param, Rng& rng);

struct Coordinate {
  BigInt x;
  BigInt y;
};

Coordinate RandomCoordinate(const SysPara& para, Rng& rng);

struct EncryptedCoordinate {
  phe::Ciphertext x;
  phe::Ciphertext y;
};

/// Per-round blinding multipliers. The x- and y-products must match.
struct BlindingFactors {
  std::vector<BigInt> kx;
  std::vector<BigInt> ky;

  size_t rounds() const { return kx.size(); }
};

/// Largest admissible blinding factor (exclusive) for `para`.
BigInt BlindingBound(const SysPara& para);

/// Honest blinding: equal products, kx[0] != ky[0] whenever rounds >= 2.
BlindingFactors GenerateBlinding(const SysPara& para, size_t rounds, Rng& rng);

/// Componentwise E(x), E(y); requires 0 <= x, y and 4x, 4y < n.
EncryptedCoordinate EncryptCoordinate(const phe::PublicKey& pk,
                                      const Coordinate& coord, Rng& rng);

/// E(-kx*x), E(-ky*y): the REN's negated, blinded coordinate.
EncryptedCoordinate BlindNegateCoordinate(const phe::PublicKey& pk,
                                          const Coordinate& coord,
                                          const BigInt& kx, const BigInt& ky,
                                          Rng& rng);

/// E(a)^k * E(-k*b) = E(k*(a - b)) per axis.
EncryptedCoordinate CombineBlinded(const phe::PublicKey& pk,
                                   const EncryptedCoordinate& counterpart,
                                   const EncryptedCoordinate& blinded_negation,
                                   const BigInt& kx, const BigInt& ky);

// ---------------------------------------------------------------------------
// Transcript

enum class Party { kKac, kRen };
enum class Step { kCoordinateCommit, kBlindedDifferences, kSlopeDelivery };

const char* PartyName(Party p);
const char* StepName(Step s);

struct Message {
  std::string session_id;
  Step step;
  Party sender;
  std::vector<phe::Ciphertext> payload;
};

/// A plaintext that a party learned by decrypting.
struct Revealed {
  Party party;
  std::string label;
  BigInt value;  // signed
};

struct Transcript {
  std::string session_id;
  uint64_t seed = 0;
  std::vector<Message> messages;
  std::vector<Revealed> revealed;

  const Message& Find(Step step) const;
  /// One JSON object per line: messages then revealed values.
  std::string ToJsonLines() const;
};

nlohmann::json ToJson(const Message& m);
Message MessageFromJson(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Protocol steps

/// KAC -> REN: encrypted coordinates under pk_kac.
Message KacCommit(const SysPara& para, const std::string& session_id,
                  const Coordinate& kac_point, Rng& rng);

/// REN -> KAC: for each round j, E(kx_j * dx), E(ky_j * dy) followed by a
/// final E(prod kx - prod ky) cancellation check.
Message RenBlind(const SysPara& para, const Message& commit,
                 const Coordinate& ren_point, const BlindingFactors& blinding,
                 Rng& rng);

/// Sign of dy/dx from the first blinded round. Zero dx or dy is degenerate.
int SlopeSign(const SysPara& para, const phe::PrivateKey& mk_kac,
              Transcript& transcript);

struct SlopeResult {
  int sign = 0;  // sign(K); 0 for a horizontal line
  Rational k;    // canonical (lowest terms, positive denominator)
};

/// Exact slope from `rounds` blinded rounds; aborts when blinding products
/// differ, fails as degenerate when dx = 0.
SlopeResult ComputeSlope(const SysPara& para, const phe::PrivateKey& mk_kac,
                         Transcript& transcript, size_t rounds);

/// KAC -> REN: slope numerator and denominator under pk_ren.
Message DeliverSlope(const SysPara& para, const SlopeResult& slope,
                     const std::string& session_id, Rng& rng);

/// REN decrypts the delivered slope.
SlopeResult ReceiveSlope(const SysPara& para, const phe::PrivateKey& mk_ren,
                         Transcript& transcript);

struct LineEquation {
  Rational k;
  Coordinate anchor;

  /// y = k*x + intercept
  Rational Intercept() const;
  bool SameLine(const LineEquation& o) const {
    return k == o.k && Intercept() == o.Intercept();
  }
};

LineEquation DeriveLine(const SlopeResult& slope, const Coordinate& own);

struct ProtocolOutcome {
  SlopeResult kac_slope;
  SlopeResult ren_slope;
  LineEquation kac_line;
  LineEquation ren_line;
  Transcript transcript;
};

/// Full two-party run.
ProtocolOutcome RunSlopeProtocol(const SetupResult& setup,
                                 const Coordinate& kac_point,
                                 const Coordinate& ren_point,
                                 const BlindingFactors& blinding,
                                 const std::string& session_id, Rng& rng);

struct AuditReport {
  bool all_ciphertexts_valid = true;
  std::vector<std::string> leaks;  // descriptions of revealed secrets
  bool clean() const { return all_ciphertexts_valid && leaks.empty(); }
};

/// Structural privacy audit against the harness's known secrets.
AuditReport AuditTranscript(const Transcript& transcript, const SysPara& para,
                            const std::vector<BigInt>& secrets);

// ---------------------------------------------------------------------------
// Edge computer partial keys

/// Dealer-side context for the regional decryption key being distributed.
struct ShareContext {
  phe::PublicKey region_pk;
  BigInt share_modulus;
  BigInt exponent;  // d
  std::vector<std::string> ec_ids;
};

ShareContext MakeShareContext(const phe::KeyPair& region,
                              std::vector<std::string> ec_ids);

struct PartialPrivateKey {
  std::string ec_id;
  size_t index = 0;
  BigInt sk_ec_kac;
  BigInt sk_ec_ren;
};

PartialPrivateKey IssuePartialKeys(const LineEquation& line,
                                   const std::string& ec_id,
                                   const ShareContext& ctx);

/// Sums each EC's halves into the DHFA share set (index order of ctx.ec_ids).
phe::KeyShareSet AssembleShareSet(const ShareContext& ctx,
                                  const std::vector<PartialPrivateKey>& keys);

}  // namespace hefl::keydist

#endif  // HEFL_KEYDIST_HPP_
