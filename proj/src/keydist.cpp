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

#include "hefl/keydist.hpp"

#include <algorithm>

#include "hefl/digest.hpp"
#include "hefl/error.hpp"

namespace hefl::keydist {

namespace {

constexpr uint64_t kMaxBlindingBound = uint64_t{1} << 32;

BigInt Gcd(const BigInt& a, const BigInt& b) {
  BigInt g;
  mpz_gcd(g.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return g;
}

// Signed representative of v in (-n/2, n/2].
BigInt Centered(const BigInt& v, const BigInt& n) {
  return v > n / 2 ? BigInt(v - n) : v;
}

int Sign(const BigInt& v) { return sgn(v); }

void CheckCoordinateRange(const phe::PublicKey& pk, const Coordinate& c) {
  for (const BigInt* v : {&c.x, &c.y}) {
    if (*v < 0 || 4 * *v >= pk.n) {
      Fail(ErrorCode::kDomain, "coordinate component outside [0, n/4)");
    }
  }
}

void CheckBoundedCoordinate(const SysPara& para, const Coordinate& c) {
  if (c.x < 0 || c.y < 0 || c.x >= para.coord_bound ||
      c.y >= para.coord_bound) {
    Fail(ErrorCode::kDomain, "coordinate outside [0, coord_bound)");
  }
}

BigInt DecryptSigned(const phe::KeyPair& kp, const phe::Ciphertext& ct) {
  return Centered(phe::Decrypt(kp.priv, kp.pub, ct), kp.pub.n);
}

// SHA-256 in counter mode, reduced into [0, modulus).
BigInt HashToRange(const std::string& material, const BigInt& modulus) {
  const size_t want_bits = BitLength(modulus) + 128;
  std::string hex;
  for (uint32_t counter = 0; hex.size() * 4 < want_bits; ++counter) {
    hex += Sha256Hex(material + "#" + std::to_string(counter));
  }
  return Mod(BigInt(hex, 16), modulus);
}

std::string LineMaterial(const LineEquation& line, const std::string& ec_id) {
  const Rational b = line.Intercept();
  return "hefl-keydist-v1|" + line.k.get_num().get_str() + "|" +
         line.k.get_den().get_str() + "|" + b.get_num().get_str() + "/" +
         b.get_den().get_str() + "|" + ec_id;
}

}  // namespace

const char* PartyName(Party p) { return p == Party::kKac ? "KAC" : "REN"; }

const char* StepName(Step s) {
  switch (s) {
    case Step::kCoordinateCommit: return "coordinate_commit";
    case Step::kBlindedDifferences: return "blinded_differences";
    case Step::kSlopeDelivery: return "slope_delivery";
  }
  return "unknown";
}

SetupResult Setup(unsigned security_param, Rng& rng) {
  Rng kac_rng = rng.Fork("IKeyGen");
  Rng ren_rng = rng.Fork("RENKeyGen");
  SetupResult out;
  out.kac = phe::GenerateKeyPair(security_param, kac_rng);
  out.ren = phe::GenerateKeyPair(security_param, ren_rng);
  out.para.security_param = security_param;
  out.para.pk_kac = out.kac.pub;
  out.para.pk_ren = out.ren.pub;
  out.para.coord_bound = BigInt(1) << (security_param / 4);
  return out;
}

Coordinate RandomCoordinate(const SysPara& para, Rng& rng) {
  return Coordinate{1 + RandomBelow(rng, para.coord_bound - 1),
                    1 + RandomBelow(rng, para.coord_bound - 1)};
}

BigInt BlindingBound(const SysPara& para) {
  const BigInt& n = std::min(para.pk_kac.n, para.pk_ren.n);
  BigInt bound = n / (2 * para.coord_bound);
  if (bound > kMaxBlindingBound) bound = BigInt(std::to_string(kMaxBlindingBound));
  if (bound < 3) Fail(ErrorCode::kInvalidArgument, "modulus too small for blinding");
  return bound;
}

BlindingFactors GenerateBlinding(const SysPara& para, size_t rounds, Rng& rng) {
  if (rounds == 0) Fail(ErrorCode::kInvalidArgument, "at least one round");
  // kx_j = a_j * b_j and ky_j = a_j * b_{j+1 mod l}: equal products, and the
  // first pair differs as long as b_1 != b_2.
  BigInt factor_bound;
  mpz_sqrt(factor_bound.get_mpz_t(), BlindingBound(para).get_mpz_t());
  if (factor_bound < 3) Fail(ErrorCode::kInvalidArgument, "blinding range too small");
  const BigInt& n = para.pk_kac.n;
  auto draw = [&] {
    BigInt v;
    do {
      v = 1 + RandomBelow(rng, factor_bound - 1);
    } while (Gcd(v, n) != 1);
    return v;
  };
  std::vector<BigInt> a(rounds), b(rounds);
  for (auto& v : a) v = draw();
  for (size_t j = 0; j < rounds; ++j) {
    do {
      b[j] = draw();
    } while (j == 1 && b[1] == b[0]);
  }
  BlindingFactors out;
  for (size_t j = 0; j < rounds; ++j) {
    out.kx.push_back(a[j] * b[j]);
    out.ky.push_back(a[j] * b[(j + 1) % rounds]);
  }
  return out;
}

EncryptedCoordinate EncryptCoordinate(const phe::PublicKey& pk,
                                      const Coordinate& coord, Rng& rng) {
  CheckCoordinateRange(pk, coord);
  return EncryptedCoordinate{phe::Encrypt(pk, coord.x, rng),
                             phe::Encrypt(pk, coord.y, rng)};
}

EncryptedCoordinate BlindNegateCoordinate(const phe::PublicKey& pk,
                                          const Coordinate& coord,
                                          const BigInt& kx, const BigInt& ky,
                                          Rng& rng) {
  CheckCoordinateRange(pk, coord);
  if (kx <= 0 || ky <= 0) {
    Fail(ErrorCode::kInvalidArgument, "blinding factors must be positive");
  }
  // (1 + kx*n)^{-x} r^n = (1 + n)^{-kx*x} r^n (mod n^2)
  return EncryptedCoordinate{phe::Encrypt(pk, Mod(-kx * coord.x, pk.n), rng),
                             phe::Encrypt(pk, Mod(-ky * coord.y, pk.n), rng)};
}

EncryptedCoordinate CombineBlinded(const phe::PublicKey& pk,
                                   const EncryptedCoordinate& counterpart,
                                   const EncryptedCoordinate& blinded_negation,
                                   const BigInt& kx, const BigInt& ky) {
  return EncryptedCoordinate{
      phe::Add(pk, phe::ScalarMul(pk, counterpart.x, kx), blinded_negation.x),
      phe::Add(pk, phe::ScalarMul(pk, counterpart.y, ky), blinded_negation.y)};
}

// ---------------------------------------------------------------------------

const Message& Transcript::Find(Step step) const {
  for (const auto& m : messages) {
    if (m.step == step) return m;
  }
  Fail(ErrorCode::kProtocolAbort,
       std::string("transcript lacks step ") + StepName(step));
}

nlohmann::json ToJson(const Message& m) {
  nlohmann::json payload = nlohmann::json::array();
  for (const auto& ct : m.payload) payload.push_back(phe::ToJson(ct));
  return {{"session_id", m.session_id},
          {"step", StepName(m.step)},
          {"sender", PartyName(m.sender)},
          {"payload", payload}};
}

Message MessageFromJson(const nlohmann::json& j) {
  Message m;
  try {
    m.session_id = j.at("session_id").get<std::string>();
    const auto step = j.at("step").get<std::string>();
    const auto sender = j.at("sender").get<std::string>();
    if (step == "coordinate_commit") {
      m.step = Step::kCoordinateCommit;
    } else if (step == "blinded_differences") {
      m.step = Step::kBlindedDifferences;
    } else if (step == "slope_delivery") {
      m.step = Step::kSlopeDelivery;
    } else {
      Fail(ErrorCode::kParse, "unknown step " + step);
    }
    if (sender == "KAC") {
      m.sender = Party::kKac;
    } else if (sender == "REN") {
      m.sender = Party::kRen;
    } else {
      Fail(ErrorCode::kParse, "unknown sender " + sender);
    }
    for (const auto& c : j.at("payload")) {
      m.payload.push_back(phe::CiphertextFromJson(c));
    }
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kParse, std::string("protocol message: ") + e.what());
  }
  return m;
}

std::string Transcript::ToJsonLines() const {
  std::string out;
  for (const auto& m : messages) {
    auto j = ToJson(m);
    j["kind"] = "message";
    out += j.dump() + "\n";
  }
  for (const auto& r : revealed) {
    nlohmann::json j = {{"kind", "revealed"},
                        {"session_id", session_id},
                        {"party", PartyName(r.party)},
                        {"label", r.label},
                        {"value", r.value.get_str()}};
    out += j.dump() + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------

Message KacCommit(const SysPara& para, const std::string& session_id,
                  const Coordinate& kac_point, Rng& rng) {
  CheckBoundedCoordinate(para, kac_point);
  const auto enc = EncryptCoordinate(para.pk_kac, kac_point, rng);
  return Message{session_id, Step::kCoordinateCommit, Party::kKac,
                 {enc.x, enc.y}};
}

Message RenBlind(const SysPara& para, const Message& commit,
                 const Coordinate& ren_point, const BlindingFactors& blinding,
                 Rng& rng) {
  if (commit.step != Step::kCoordinateCommit || commit.payload.size() != 2) {
    Fail(ErrorCode::kProtocolAbort, "expected a coordinate commitment");
  }
  CheckBoundedCoordinate(para, ren_point);
  if (blinding.kx.size() != blinding.ky.size() || blinding.kx.empty()) {
    Fail(ErrorCode::kInvalidArgument, "blinding rounds mismatch");
  }
  const BigInt bound = BlindingBound(para);
  const auto& pk = para.pk_kac;
  const EncryptedCoordinate theirs{commit.payload[0], commit.payload[1]};
  Message out{commit.session_id, Step::kBlindedDifferences, Party::kRen, {}};
  BigInt prod_x = 1, prod_y = 1;
  for (size_t j = 0; j < blinding.rounds(); ++j) {
    const BigInt& kx = blinding.kx[j];
    const BigInt& ky = blinding.ky[j];
    if (kx <= 0 || ky <= 0 || kx >= bound || ky >= bound) {
      Fail(ErrorCode::kInvalidArgument, "blinding factor out of range");
    }
    const auto neg = BlindNegateCoordinate(pk, ren_point, kx, ky, rng);
    const auto diff = CombineBlinded(pk, theirs, neg, kx, ky);
    out.payload.push_back(diff.x);
    out.payload.push_back(diff.y);
    prod_x *= kx;
    prod_y *= ky;
  }
  out.payload.push_back(phe::Encrypt(pk, Mod(prod_x - prod_y, pk.n), rng));
  return out;
}

int SlopeSign(const SysPara& para, const phe::PrivateKey& mk_kac,
              Transcript& transcript) {
  const auto& msg = transcript.Find(Step::kBlindedDifferences);
  if (msg.payload.size() < 3) Fail(ErrorCode::kProtocolAbort, "short payload");
  const phe::KeyPair kac{para.pk_kac, mk_kac};
  const BigInt bx = DecryptSigned(kac, msg.payload[0]);
  const BigInt by = DecryptSigned(kac, msg.payload[1]);
  transcript.revealed.push_back({Party::kKac, "sign:kx*dx", bx});
  transcript.revealed.push_back({Party::kKac, "sign:ky*dy", by});
  if (bx == 0 || by == 0) {
    Fail(ErrorCode::kDegenerate, "slope sign undefined for zero dx or dy");
  }
  // Blinding factors are positive, so sign(k*d) = sign(d) per axis.
  return Sign(bx) * Sign(by);
}

SlopeResult ComputeSlope(const SysPara& para, const phe::PrivateKey& mk_kac,
                         Transcript& transcript, size_t rounds) {
  const auto& msg = transcript.Find(Step::kBlindedDifferences);
  if (rounds == 0 || msg.payload.size() != 2 * rounds + 1) {
    Fail(ErrorCode::kProtocolAbort, "payload does not match round count");
  }
  const phe::KeyPair kac{para.pk_kac, mk_kac};
  const BigInt check = phe::Decrypt(kac.priv, kac.pub, msg.payload.back());
  transcript.revealed.push_back({Party::kKac, "blinding_check", check});
  if (check != 0) {
    Fail(ErrorCode::kProtocolAbort, "blinding products do not cancel");
  }
  // Each round contributes (ky_j * dy) / (kx_j * dx); with cancelling
  // blinding the product is (dy/dx)^rounds. The magnitude is its exact
  // rounds-th root and the sign comes from the first round.
  BigInt num = 1, den = 1;
  int sign = 0;
  for (size_t j = 0; j < rounds; ++j) {
    const BigInt bx = DecryptSigned(kac, msg.payload[2 * j]);
    const BigInt by = DecryptSigned(kac, msg.payload[2 * j + 1]);
    transcript.revealed.push_back({Party::kKac, "kx*dx", bx});
    transcript.revealed.push_back({Party::kKac, "ky*dy", by});
    if (bx == 0) Fail(ErrorCode::kDegenerate, "vertical line (dx = 0)");
    if (j == 0) sign = Sign(bx) * Sign(by);
    num *= abs(by);
    den *= abs(bx);
  }
  Rational power(num, den);
  power.canonicalize();
  BigInt root_num, root_den;
  const auto r = static_cast<unsigned long>(rounds);
  const bool exact =
      mpz_root(root_num.get_mpz_t(), power.get_num_mpz_t(), r) != 0 &&
      mpz_root(root_den.get_mpz_t(), power.get_den_mpz_t(), r) != 0;
  if (!exact) {
    Fail(ErrorCode::kProtocolAbort, "blinded ratios are inconsistent");
  }
  SlopeResult out;
  out.k = Rational(sign * root_num, root_den);
  out.k.canonicalize();
  out.sign = sgn(out.k);
  return out;
}

Message DeliverSlope(const SysPara& para, const SlopeResult& slope,
                     const std::string& session_id, Rng& rng) {
  const auto& pk = para.pk_ren;
  const BigInt num = slope.k.get_num();
  const BigInt den = slope.k.get_den();
  if (2 * abs(num) >= pk.n || 2 * den >= pk.n) {
    Fail(ErrorCode::kDomain, "slope does not fit the REN modulus");
  }
  return Message{session_id, Step::kSlopeDelivery, Party::kKac,
                 {phe::Encrypt(pk, Mod(num, pk.n), rng),
                  phe::Encrypt(pk, Mod(den, pk.n), rng)}};
}

SlopeResult ReceiveSlope(const SysPara& para, const phe::PrivateKey& mk_ren,
                         Transcript& transcript) {
  const auto& msg = transcript.Find(Step::kSlopeDelivery);
  if (msg.payload.size() != 2) Fail(ErrorCode::kProtocolAbort, "bad delivery");
  const phe::KeyPair ren{para.pk_ren, mk_ren};
  const BigInt num = DecryptSigned(ren, msg.payload[0]);
  const BigInt den = DecryptSigned(ren, msg.payload[1]);
  transcript.revealed.push_back({Party::kRen, "slope_num", num});
  transcript.revealed.push_back({Party::kRen, "slope_den", den});
  if (den == 0) Fail(ErrorCode::kDegenerate, "zero slope denominator");
  SlopeResult out;
  out.k = Rational(num, den);
  out.k.canonicalize();
  out.sign = sgn(out.k);
  return out;
}

Rational LineEquation::Intercept() const {
  Rational b = Rational(anchor.y) - k * Rational(anchor.x);
  b.canonicalize();
  return b;
}

LineEquation DeriveLine(const SlopeResult& slope, const Coordinate& own) {
  return LineEquation{slope.k, own};
}

ProtocolOutcome RunSlopeProtocol(const SetupResult& setup,
                                 const Coordinate& kac_point,
                                 const Coordinate& ren_point,
                                 const BlindingFactors& blinding,
                                 const std::string& session_id, Rng& rng) {
  const auto& para = setup.para;
  ProtocolOutcome out;
  out.transcript.session_id = session_id;
  out.transcript.seed = rng.seed();
  Rng kac_rng = rng.Fork("kac:" + session_id);
  Rng ren_rng = rng.Fork("ren:" + session_id);

  const Message commit = KacCommit(para, session_id, kac_point, kac_rng);
  out.transcript.messages.push_back(commit);
  out.transcript.messages.push_back(
      RenBlind(para, commit, ren_point, blinding, ren_rng));

  out.kac_slope = ComputeSlope(para, setup.kac.priv, out.transcript,
                               blinding.rounds());
  out.transcript.messages.push_back(
      DeliverSlope(para, out.kac_slope, session_id, kac_rng));
  out.ren_slope = ReceiveSlope(para, setup.ren.priv, out.transcript);

  out.kac_line = DeriveLine(out.kac_slope, kac_point);
  out.ren_line = DeriveLine(out.ren_slope, ren_point);
  return out;
}

AuditReport AuditTranscript(const Transcript& transcript, const SysPara& para,
                            const std::vector<BigInt>& secrets) {
  AuditReport report;
  for (const auto& m : transcript.messages) {
    for (const auto& ct : m.payload) {
      const phe::PublicKey* pk = nullptr;
      if (ct.pk_digest == para.pk_kac.digest) pk = &para.pk_kac;
      if (ct.pk_digest == para.pk_ren.digest) pk = &para.pk_ren;
      if (pk == nullptr || !phe::IsWellFormed(*pk, ct)) {
        report.all_ciphertexts_valid = false;
      }
    }
  }
  for (const auto& r : transcript.revealed) {
    for (const auto& s : secrets) {
      if (abs(r.value) == s) {
        report.leaks.push_back(std::string(PartyName(r.party)) + " learned " +
                               r.label + " equal to a secret coordinate");
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------

ShareContext MakeShareContext(const phe::KeyPair& region,
                              std::vector<std::string> ec_ids) {
  if (ec_ids.size() < 2) {
    Fail(ErrorCode::kInvalidArgument, "at least two edge computers required");
  }
  std::vector<std::string> sorted = ec_ids;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    Fail(ErrorCode::kDuplicate, "edge computer ids must be unique");
  }
  return ShareContext{region.pub, phe::ShareModulus(region.priv, region.pub),
                      phe::DecryptionExponent(region.priv, region.pub),
                      std::move(ec_ids)};
}

PartialPrivateKey IssuePartialKeys(const LineEquation& line,
                                   const std::string& ec_id,
                                   const ShareContext& ctx) {
  const auto it = std::find(ctx.ec_ids.begin(), ctx.ec_ids.end(), ec_id);
  if (it == ctx.ec_ids.end()) {
    Fail(ErrorCode::kValidation, "unregistered edge computer " + ec_id);
  }
  const size_t index = static_cast<size_t>(it - ctx.ec_ids.begin());
  const BigInt& m = ctx.share_modulus;
  BigInt share;
  if (index + 1 < ctx.ec_ids.size()) {
    share = HashToRange(LineMaterial(line, ec_id), m);
  } else {
    // The last registered EC absorbs the remainder so the set sums to d.
    BigInt acc = 0;
    for (size_t i = 0; i + 1 < ctx.ec_ids.size(); ++i) {
      acc += HashToRange(LineMaterial(line, ctx.ec_ids[i]), m);
    }
    share = Mod(ctx.exponent - acc, m);
  }
  PartialPrivateKey key;
  key.ec_id = ec_id;
  key.index = index;
  key.sk_ec_kac = HashToRange(LineMaterial(line, ec_id) + "|kac-half", m);
  key.sk_ec_ren = Mod(share - key.sk_ec_kac, m);
  return key;
}

phe::KeyShareSet AssembleShareSet(const ShareContext& ctx,
                                  const std::vector<PartialPrivateKey>& keys) {
  if (keys.size() != ctx.ec_ids.size()) {
    Fail(ErrorCode::kIncomplete, "partial keys missing for some edge computers");
  }
  std::vector<BigInt> shares(keys.size());
  std::vector<bool> filled(keys.size(), false);
  for (const auto& k : keys) {
    if (k.index >= keys.size() || ctx.ec_ids[k.index] != k.ec_id) {
      Fail(ErrorCode::kValidation, "partial key index mismatch");
    }
    if (filled[k.index]) Fail(ErrorCode::kDuplicate, "duplicate partial key");
    filled[k.index] = true;
    shares[k.index] = Mod(k.sk_ec_kac + k.sk_ec_ren, ctx.share_modulus);
  }
  return phe::MakeShareSet(ctx.region_pk, std::move(shares));
}

}  // namespace hefl::keydist
