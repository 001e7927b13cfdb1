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

#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string_view>

#include "aeadfde/bytes.hpp"
#include "aeadfde/entropy.hpp"

namespace aeadfde {

enum class SuiteId {
    null_cipher,
    crc32,
    aes256_xts_plain64,
    aes256_xts_random,
    aes256_gcm_random,
    aes256_xts_hmac_sha256_random,
    chacha20_poly1305_random,
};

enum class IvGenerator { none, plain64, essiv, random };

/// Descriptor of one encryption/integrity configuration.
///
/// `iv_size` counts only IV bytes persisted in per-sector metadata, so
/// derived IVs (plain64) contribute nothing. Metadata for a sector is
/// iv || tag, `metadata_size()` bytes in total.
struct CipherSuite {
    SuiteId id;
    std::string_view name;
    std::string_view description;
    IvGenerator iv_generator;
    std::uint32_t iv_size;
    std::uint32_t tag_size;
    std::uint32_t master_key_size;
    bool authenticated;
    bool encrypts;

    constexpr std::uint32_t metadata_size() const noexcept { return iv_size + tag_size; }
    constexpr bool needs_metastore() const noexcept { return metadata_size() > 0; }
    /// Sector number feeds decryption, so moved sectors fail or garble.
    /// False for random-IV XTS without a tag.
    constexpr bool binds_position() const noexcept
    {
        return iv_generator != IvGenerator::random || authenticated;
    }
};

std::span<const CipherSuite> all_suites() noexcept;
const CipherSuite& suite(SuiteId id) noexcept;
/// Throws Errc::invalid_argument for unknown names.
const CipherSuite& suite_by_name(std::string_view name);

/// Poly1305 produces 16 bytes; the suite's 32-byte tag field holds it followed
/// by 16 zero bytes, verified on decryption.
inline constexpr std::size_t poly1305_tag_bytes = 16;
/// Random GCM nonces collide after roughly 2^48 writes; stay below 2^32 writes
/// per key.
inline constexpr std::uint64_t gcm_random_nonce_write_budget = 1ull << 32;

/// Master key split into its encryption and integrity parts. AEAD suites use
/// the whole master key as the encryption key and leave mac_key empty.
struct KeyMaterial {
    Bytes encryption_key;
    Bytes mac_key;

    KeyMaterial() = default;
    KeyMaterial(const KeyMaterial&) = default;
    KeyMaterial(KeyMaterial&&) noexcept = default;
    KeyMaterial& operator=(const KeyMaterial&) = default;
    KeyMaterial& operator=(KeyMaterial&&) noexcept = default;
    ~KeyMaterial();
};

/// Throws Errc::wrong_key_length unless master_key matches the suite size.
KeyMaterial split_key(ConstByteSpan master_key, const CipherSuite& suite);

using Iv128 = std::array<std::byte, 16>;

/// Sector number little-endian in the low 8 bytes, high 8 bytes zero.
Iv128 iv_plain64(std::uint64_t sector) noexcept;

/// AES-256 encryption of plain64(sector) under salt = SHA-256(master_key).
Iv128 iv_essiv(std::uint64_t sector, ConstByteSpan master_key);

/// Fresh IV of `size` bytes.
Bytes iv_random(EntropySource& entropy, std::size_t size);

/// Associated data: sector number (u64 little-endian) || IV.
Bytes sector_aad(std::uint64_t sector, ConstByteSpan iv);

/// One sector authentication request. `payload` is transformed in place;
/// `iv` and `tag` point into the sector's metadata.
struct SectorRequest {
    std::uint64_t sector = 0;
    ByteSpan iv;
    ByteSpan payload;
    ByteSpan tag;
};

/// Keyed cipher for one suite. Immutable after construction and safe to use
/// from several threads at once.
class SectorCipher {
public:
    SectorCipher(const CipherSuite& suite, ConstByteSpan master_key);
    ~SectorCipher();
    SectorCipher(SectorCipher&&) noexcept;
    SectorCipher& operator=(SectorCipher&&) noexcept;

    const CipherSuite& suite() const noexcept { return *suite_; }

    /// Fills request.iv for random-IV suites; no-op otherwise.
    void generate_iv(SectorRequest& request, EntropySource& entropy) const;

    /// Encrypts payload in place and writes the tag. The tag covers the
    /// final ciphertext and the AAD (sector || iv).
    void encrypt(SectorRequest& request) const;

    /// Verifies and decrypts in place. On failure the payload is zeroed and
    /// false is returned; no unauthenticated plaintext is released.
    [[nodiscard]] bool decrypt(SectorRequest& request) const;

private:
    struct Impl;
    const CipherSuite* suite_;
    std::unique_ptr<Impl> impl_;
};

/// Constant-time equality.
bool equal_ct(ConstByteSpan a, ConstByteSpan b) noexcept;

} // namespace aeadfde
