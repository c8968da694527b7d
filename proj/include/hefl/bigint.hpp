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

#ifndef HEFL_BIGINT_HPP_
#define HEFL_BIGINT_HPP_

#include <gmpxx.h>

#include <cstddef>
#include <string>
#include <string_view>

#include "hefl/rng.hpp"

namespace hefl {

using BigInt = mpz_class;

/// Lowercase hexadecimal of the magnitude, big-endian, no prefix. Zero is "0".
std::string ToHex(const BigInt& v);

/// Parses the canonical hex form; rejects uppercase digits, signs, prefixes,
/// and leading zeros (except "0" itself).
BigInt FromHex(std::string_view hex);

size_t BitLength(const BigInt& v);

/// Uniform in [0, bound).
BigInt RandomBelow(Rng& rng, const BigInt& bound);

/// Uniform with exactly `bits` bits (top bit set).
BigInt RandomBits(Rng& rng, size_t bits);

/// Uniform unit of Z_n (nonzero, coprime to n).
BigInt RandomUnit(Rng& rng, const BigInt& n);

/// base^exp mod m; a negative exponent inverts base first.
BigInt PowMod(const BigInt& base, const BigInt& exp, const BigInt& m);

/// Nonnegative residue of v mod m.
BigInt Mod(const BigInt& v, const BigInt& m);

}  // namespace hefl

#endif  // HEFL_BIGINT_HPP_
