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

#include "hefl/bigint.hpp"

#include <vector>

#include "hefl/error.hpp"

namespace hefl {

std::string ToHex(const BigInt& v) {
  if (v < 0) Fail(ErrorCode::kInvalidArgument, "ToHex: negative value");
  return v.get_str(16);
}

BigInt FromHex(std::string_view hex) {
  if (hex.empty()) Fail(ErrorCode::kParse, "empty hex string");
  if (hex.size() > 1 && hex.front() == '0') {
    Fail(ErrorCode::kParse, "hex string has leading zero");
  }
  for (char c : hex) {
    const bool ok = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
    if (!ok) Fail(ErrorCode::kParse, "invalid hex digit");
  }
  return BigInt(std::string(hex), 16);
}

size_t BitLength(const BigInt& v) {
  if (v == 0) return 0;
  return mpz_sizeinbase(v.get_mpz_t(), 2);
}

BigInt RandomBits(Rng& rng, size_t bits) {
  if (bits == 0) return 0;
  const size_t words = (bits + 63) / 64;
  std::vector<uint64_t> buf(words);
  for (auto& w : buf) w = rng.NextU64();
  const size_t excess = words * 64 - bits;
  if (excess > 0) buf.back() >>= excess;
  BigInt out;
  // Least significant word first.
  mpz_import(out.get_mpz_t(), words, -1, sizeof(uint64_t), 0, 0, buf.data());
  return out;
}

BigInt RandomBelow(Rng& rng, const BigInt& bound) {
  if (bound <= 0) Fail(ErrorCode::kInvalidArgument, "RandomBelow: bound <= 0");
  const size_t bits = BitLength(bound);
  BigInt x;
  do {
    x = RandomBits(rng, bits);
  } while (x >= bound);
  return x;
}

BigInt RandomUnit(Rng& rng, const BigInt& n) {
  BigInt r, g;
  do {
    r = RandomBelow(rng, n);
    mpz_gcd(g.get_mpz_t(), r.get_mpz_t(), n.get_mpz_t());
  } while (r == 0 || g != 1);
  return r;
}

BigInt PowMod(const BigInt& base, const BigInt& exp, const BigInt& m) {
  BigInt out;
  if (exp < 0) {
    BigInt inv;
    if (mpz_invert(inv.get_mpz_t(), base.get_mpz_t(), m.get_mpz_t()) == 0) {
      Fail(ErrorCode::kDomain, "PowMod: base not invertible");
    }
    BigInt e = -exp;
    mpz_powm(out.get_mpz_t(), inv.get_mpz_t(), e.get_mpz_t(), m.get_mpz_t());
  } else {
    mpz_powm(out.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(),
             m.get_mpz_t());
  }
  return out;
}

BigInt Mod(const BigInt& v, const BigInt& m) {
  BigInt out;
  mpz_mod(out.get_mpz_t(), v.get_mpz_t(), m.get_mpz_t());
  return out;
}

}  // namespace hefl
