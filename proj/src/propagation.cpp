// Copyright 2026 The aeadfde Authors
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

#include "aeadfde/propagation.hpp"

#include <openssl/evp.h>

#include <bit>
#include <memory>

#include "aeadfde/error.hpp"
#include "aeadfde/sectorcrypt.hpp"

namespace aeadfde {

namespace {

struct CtxFree {
    void operator()(EVP_CIPHER_CTX* ctx) const noexcept { EVP_CIPHER_CTX_free(ctx); }
};

void transform(const EVP_CIPHER* cipher, ConstByteSpan key, const Iv128& iv, bool encrypt, ByteSpan data)
{
    std::unique_ptr<EVP_CIPHER_CTX, CtxFree> ctx(EVP_CIPHER_CTX_new());
    int len = 0;
    if (!ctx || EVP_CipherInit_ex(ctx.get(), cipher, nullptr, as_uchar(key), as_uchar(iv), encrypt ? 1 : 0) != 1 ||
        EVP_CIPHER_CTX_set_padding(ctx.get(), 0) != 1 ||
        EVP_CipherUpdate(ctx.get(), as_uchar(data), &len, as_uchar(data), static_cast<int>(data.size())) != 1) {
        throw Error(Errc::invalid_argument, "propagation cipher setup failed");
    }
}

} // namespace

std::vector<ByteRange> differing_ranges(ConstByteSpan a, ConstByteSpan b)
{
    if (a.size() != b.size()) {
        throw Error(Errc::invalid_argument, "buffers differ in size");
    }
    std::vector<ByteRange> out;
    std::size_t i = 0;
    while (i < a.size()) {
        if (a[i] == b[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < a.size() && a[j] != b[j]) ++j;
        out.push_back({i, j});
        i = j;
    }
    return out;
}

double hamming_ratio(ConstByteSpan a, ConstByteSpan b)
{
    if (a.size() != b.size() || a.empty()) {
        throw Error(Errc::invalid_argument, "hamming ratio needs equal non-empty buffers");
    }
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        bits += static_cast<std::uint64_t>(std::popcount(std::to_integer<unsigned>(a[i] ^ b[i])));
    }
    return static_cast<double>(bits) / static_cast<double>(a.size() * 8);
}

std::vector<ByteRange> propagation_profile(PropagationMode mode, ConstByteSpan key, std::uint64_t sector,
                                           ConstByteSpan plaintext, std::size_t flip_bit)
{
    if (plaintext.empty() || plaintext.size() % 16 != 0) {
        throw Error(Errc::invalid_argument, "plaintext must be whole 16-byte blocks");
    }
    if (flip_bit >= plaintext.size() * 8) {
        throw Error(Errc::out_of_range, "flip position beyond sector");
    }
    const EVP_CIPHER* cipher = mode == PropagationMode::xts ? EVP_aes_256_xts() : EVP_aes_256_cbc();
    const std::size_t key_size = mode == PropagationMode::xts ? 64 : 32;
    if (key.size() != key_size) {
        throw Error(Errc::wrong_key_length, "propagation key has wrong length");
    }
    const auto iv = iv_plain64(sector);
    Bytes buffer(plaintext.begin(), plaintext.end());
    transform(cipher, key, iv, true, buffer);
    buffer[flip_bit / 8] ^= static_cast<std::byte>(1u << (flip_bit % 8));
    transform(cipher, key, iv, false, buffer);
    return differing_ranges(plaintext, buffer);
}

} // namespace aeadfde
