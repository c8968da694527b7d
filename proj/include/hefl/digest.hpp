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

#ifndef HEFL_DIGEST_HPP_
#define HEFL_DIGEST_HPP_

#include <memory>
#include <string>
#include <string_view>

namespace hefl {

/// Lowercase hex SHA-256 (64 chars).
std::string Sha256Hex(std::string_view data);

/// Lowercase hex HMAC-SHA-256 (64 chars).
std::string HmacSha256Hex(std::string_view key, std::string_view data);

/// HMAC-SHA-256 key with the padded inner and outer states hashed once, for
/// keys that sign many messages.
class HmacSha256Key {
 public:
  explicit HmacSha256Key(std::string_view key);
  ~HmacSha256Key();
  HmacSha256Key(HmacSha256Key&&) noexcept;
  HmacSha256Key& operator=(HmacSha256Key&&) noexcept;

  std::string Hex(std::string_view data) const;

 private:
  struct State;
  std::unique_ptr<State> state_;
};

}  // namespace hefl

#endif  // HEFL_DIGEST_HPP_
