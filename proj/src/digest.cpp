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

#include "hefl/digest.hpp"

#include <openssl/evp.h>

#include <array>

#include "hefl/error.hpp"

namespace hefl {

namespace {

constexpr size_t kBlock = 64;

std::string HexOf(const unsigned char* data, size_t len) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(len * 2, '0');
  for (size_t i = 0; i < len; ++i) {
    out[2 * i] = kDigits[data[i] >> 4];
    out[2 * i + 1] = kDigits[data[i] & 0xf];
  }
  return out;
}

const EVP_MD* Sha256() {
  static EVP_MD* md = EVP_MD_fetch(nullptr, "SHA256", nullptr);
  return md != nullptr ? md : EVP_sha256();
}

struct MdFree {
  void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
};
using MdCtx = std::unique_ptr<EVP_MD_CTX, MdFree>;

MdCtx NewCtx() {
  MdCtx ctx(EVP_MD_CTX_new());
  if (!ctx) Fail(ErrorCode::kInvalidArgument, "digest context allocation failed");
  return ctx;
}

// Per-thread scratch context, reused across calls.
EVP_MD_CTX* Scratch() {
  thread_local MdCtx ctx = NewCtx();
  return ctx.get();
}

void Check(int rc) {
  if (rc != 1) Fail(ErrorCode::kInvalidArgument, "SHA-256 failed");
}

std::array<unsigned char, 32> Raw(std::string_view data) {
  EVP_MD_CTX* ctx = Scratch();
  std::array<unsigned char, 32> md{};
  unsigned int len = 0;
  Check(EVP_DigestInit_ex(ctx, Sha256(), nullptr));
  Check(EVP_DigestUpdate(ctx, data.data(), data.size()));
  Check(EVP_DigestFinal_ex(ctx, md.data(), &len));
  return md;
}

}  // namespace

std::string Sha256Hex(std::string_view data) {
  const auto md = Raw(data);
  return HexOf(md.data(), md.size());
}

struct HmacSha256Key::State {
  MdCtx inner = NewCtx();
  MdCtx outer = NewCtx();
};

HmacSha256Key::HmacSha256Key(std::string_view key) : state_(std::make_unique<State>()) {
  std::array<unsigned char, kBlock> k{};
  if (key.size() > kBlock) {
    const auto md = Raw(key);
    std::copy(md.begin(), md.end(), k.begin());
  } else {
    std::copy(key.begin(), key.end(), k.begin());
  }
  std::array<unsigned char, kBlock> pad{};
  for (size_t i = 0; i < kBlock; ++i) pad[i] = k[i] ^ 0x36;
  Check(EVP_DigestInit_ex(state_->inner.get(), Sha256(), nullptr));
  Check(EVP_DigestUpdate(state_->inner.get(), pad.data(), pad.size()));
  for (size_t i = 0; i < kBlock; ++i) pad[i] = k[i] ^ 0x5c;
  Check(EVP_DigestInit_ex(state_->outer.get(), Sha256(), nullptr));
  Check(EVP_DigestUpdate(state_->outer.get(), pad.data(), pad.size()));
}

HmacSha256Key::~HmacSha256Key() = default;
HmacSha256Key::HmacSha256Key(HmacSha256Key&&) noexcept = default;
HmacSha256Key& HmacSha256Key::operator=(HmacSha256Key&&) noexcept = default;

std::string HmacSha256Key::Hex(std::string_view data) const {
  EVP_MD_CTX* ctx = Scratch();
  unsigned char md[32];
  unsigned int len = 0;
  Check(EVP_MD_CTX_copy_ex(ctx, state_->inner.get()));
  Check(EVP_DigestUpdate(ctx, data.data(), data.size()));
  Check(EVP_DigestFinal_ex(ctx, md, &len));
  Check(EVP_MD_CTX_copy_ex(ctx, state_->outer.get()));
  Check(EVP_DigestUpdate(ctx, md, len));
  Check(EVP_DigestFinal_ex(ctx, md, &len));
  return HexOf(md, len);
}

std::string HmacSha256Hex(std::string_view key, std::string_view data) {
  return HmacSha256Key(key).Hex(data);
}

}  // namespace hefl
