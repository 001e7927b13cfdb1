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

#include "aeadfde/sectorcrypt.hpp"

#include <openssl/core_names.h>
#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/sha.h>

#include <algorithm>
#include <array>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "aeadfde/crc32.hpp"
#include "aeadfde/error.hpp"

namespace aeadfde {

namespace {

constexpr std::array<CipherSuite, 7> suites{{
    {SuiteId::null_cipher, "null", "NULL cipher: no encryption, no integrity", IvGenerator::none, 0, 0, 0, false,
     false},
    {SuiteId::crc32, "crc32", "no encryption, CRC32 integrity", IvGenerator::none, 0, 4, 0, false, false},
    {SuiteId::aes256_xts_plain64, "aes256-xts-plain64", "AES256-XTS-plain64, no integrity", IvGenerator::plain64, 0,
     0, 64, false, true},
    {SuiteId::aes256_xts_random, "aes256-xts-random", "AES256-XTS-random, no integrity", IvGenerator::random, 16, 0,
     64, false, true},
    {SuiteId::aes256_gcm_random, "aes256-gcm-random", "AES256-GCM-random, AEAD integrity", IvGenerator::random, 12,
     16, 32, true, true},
    {SuiteId::aes256_xts_hmac_sha256_random, "aes256-xts-hmac-sha256-random",
     "AES256-XTS-random, integrity HMAC-SHA256", IvGenerator::random, 16, 32, 96, true, true},
    {SuiteId::chacha20_poly1305_random, "chacha20-poly1305-random", "ChaCha20-random, integrity Poly1305",
     IvGenerator::random, 16, 32, 32, true, true},
}};

constexpr std::size_t xts_key_bytes = 64;
constexpr std::size_t aead_nonce_bytes = 12;

[[noreturn]] void openssl_failure(const char* what)
{
    throw Error(Errc::io_error, std::string("OpenSSL ") + what + " failed");
}

struct CtxDeleter {
    void operator()(EVP_CIPHER_CTX* ctx) const noexcept { EVP_CIPHER_CTX_free(ctx); }
    void operator()(EVP_MAC_CTX* ctx) const noexcept { EVP_MAC_CTX_free(ctx); }
    void operator()(EVP_MAC* mac) const noexcept { EVP_MAC_free(mac); }
};

/// Pre-keyed contexts handed out one per in-flight operation. Keying once
/// keeps the key schedule off the per-sector path.
template <typename Ctx>
class ContextPool {
public:
    using Factory = std::function<Ctx*()>;

    explicit ContextPool(Factory factory) : factory_(std::move(factory)) {}

    class Lease {
    public:
        Lease(ContextPool& pool, Ctx* ctx) : pool_(&pool), ctx_(ctx) {}
        Lease(const Lease&) = delete;
        Lease& operator=(const Lease&) = delete;
        ~Lease() { pool_->release(ctx_); }
        Ctx* get() const noexcept { return ctx_; }

    private:
        ContextPool* pool_;
        Ctx* ctx_;
    };

    Lease acquire()
    {
        {
            std::lock_guard lock(mutex_);
            if (!free_.empty()) {
                Ctx* ctx = free_.back().release();
                free_.pop_back();
                return Lease(*this, ctx);
            }
        }
        Ctx* ctx = factory_();
        if (ctx == nullptr) {
            openssl_failure("context setup");
        }
        return Lease(*this, ctx);
    }

private:
    void release(Ctx* ctx)
    {
        std::lock_guard lock(mutex_);
        free_.emplace_back(ctx);
    }

    Factory factory_;
    std::mutex mutex_;
    std::vector<std::unique_ptr<Ctx, CtxDeleter>> free_;
};

using CipherPool = ContextPool<EVP_CIPHER_CTX>;
using MacPool = ContextPool<EVP_MAC_CTX>;

CipherPool::Factory keyed_cipher(const EVP_CIPHER* cipher, ConstByteSpan key, bool encrypt)
{
    Bytes copy(key.begin(), key.end());
    return [cipher, copy = std::move(copy), encrypt]() -> EVP_CIPHER_CTX* {
        EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
        if (ctx == nullptr) return nullptr;
        if (EVP_CipherInit_ex(ctx, cipher, nullptr, as_uchar(copy), nullptr, encrypt ? 1 : 0) != 1) {
            EVP_CIPHER_CTX_free(ctx);
            return nullptr;
        }
        EVP_CIPHER_CTX_set_padding(ctx, 0);
        return ctx;
    };
}

} // namespace

std::span<const CipherSuite> all_suites() noexcept
{
    return suites;
}

const CipherSuite& suite(SuiteId id) noexcept
{
    return suites[static_cast<std::size_t>(id)];
}

const CipherSuite& suite_by_name(std::string_view name)
{
    for (const auto& s : suites) {
        if (s.name == name) return s;
    }
    throw Error(Errc::invalid_argument, "unknown suite '" + std::string(name) + "'");
}

KeyMaterial::~KeyMaterial()
{
    if (!encryption_key.empty()) OPENSSL_cleanse(encryption_key.data(), encryption_key.size());
    if (!mac_key.empty()) OPENSSL_cleanse(mac_key.data(), mac_key.size());
}

KeyMaterial split_key(ConstByteSpan master_key, const CipherSuite& suite)
{
    if (master_key.size() != suite.master_key_size) {
        throw Error(Errc::wrong_key_length, std::string(suite.name) + " needs a " +
                                                std::to_string(suite.master_key_size) + "-byte key, got " +
                                                std::to_string(master_key.size()));
    }
    KeyMaterial keys;
    if (suite.id == SuiteId::aes256_xts_hmac_sha256_random) {
        keys.encryption_key.assign(master_key.begin(), master_key.begin() + xts_key_bytes);
        keys.mac_key.assign(master_key.begin() + xts_key_bytes, master_key.end());
    } else {
        keys.encryption_key.assign(master_key.begin(), master_key.end());
    }
    const bool xts = suite.id == SuiteId::aes256_xts_plain64 || suite.id == SuiteId::aes256_xts_random ||
                     suite.id == SuiteId::aes256_xts_hmac_sha256_random;
    if (xts && std::equal(keys.encryption_key.begin(), keys.encryption_key.begin() + xts_key_bytes / 2,
                          keys.encryption_key.begin() + xts_key_bytes / 2)) {
        throw Error(Errc::invalid_argument, std::string(suite.name) + ": the two XTS key halves must differ");
    }
    return keys;
}

Iv128 iv_plain64(std::uint64_t sector) noexcept
{
    Iv128 iv{};
    store_le<std::uint64_t>(iv, sector);
    return iv;
}

Iv128 iv_essiv(std::uint64_t sector, ConstByteSpan master_key)
{
    std::array<unsigned char, SHA256_DIGEST_LENGTH> salt{};
    if (EVP_Digest(master_key.data(), master_key.size(), salt.data(), nullptr, EVP_sha256(), nullptr) != 1) {
        openssl_failure("SHA-256");
    }
    std::unique_ptr<EVP_CIPHER_CTX, CtxDeleter> ctx(EVP_CIPHER_CTX_new());
    const auto plain = iv_plain64(sector);
    Iv128 iv{};
    int len = 0;
    if (!ctx || EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_ecb(), nullptr, salt.data(), nullptr) != 1 ||
        EVP_CIPHER_CTX_set_padding(ctx.get(), 0) != 1 ||
        EVP_EncryptUpdate(ctx.get(), as_uchar(ByteSpan(iv)), &len, as_uchar(ConstByteSpan(plain)), static_cast<int>(plain.size())) != 1) {
        OPENSSL_cleanse(salt.data(), salt.size());
        openssl_failure("ESSIV encryption");
    }
    OPENSSL_cleanse(salt.data(), salt.size());
    return iv;
}

Bytes iv_random(EntropySource& entropy, std::size_t size)
{
    Bytes iv(size);
    entropy.fill(iv);
    return iv;
}

Bytes sector_aad(std::uint64_t sector, ConstByteSpan iv)
{
    Bytes aad(8 + iv.size());
    store_le<std::uint64_t>(aad, sector);
    std::copy(iv.begin(), iv.end(), aad.begin() + 8);
    return aad;
}

bool equal_ct(ConstByteSpan a, ConstByteSpan b) noexcept
{
    return a.size() == b.size() && CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

struct SectorCipher::Impl {
    std::optional<CipherPool> encryptors;
    std::optional<CipherPool> decryptors;
    std::unique_ptr<EVP_MAC, CtxDeleter> hmac;
    std::optional<MacPool> macs;
    Bytes mac_key;

    ~Impl()
    {
        if (!mac_key.empty()) OPENSSL_cleanse(mac_key.data(), mac_key.size());
    }
};

SectorCipher::SectorCipher(const CipherSuite& suite, ConstByteSpan master_key)
    : suite_(&suite), impl_(std::make_unique<Impl>())
{
    const auto keys = split_key(master_key, suite);
    const EVP_CIPHER* cipher = nullptr;
    switch (suite.id) {
    case SuiteId::null_cipher:
    case SuiteId::crc32:
        break;
    case SuiteId::aes256_xts_plain64:
    case SuiteId::aes256_xts_random:
    case SuiteId::aes256_xts_hmac_sha256_random:
        cipher = EVP_aes_256_xts();
        break;
    case SuiteId::aes256_gcm_random:
        cipher = EVP_aes_256_gcm();
        break;
    case SuiteId::chacha20_poly1305_random:
        cipher = EVP_chacha20_poly1305();
        break;
    }
    if (cipher != nullptr) {
        impl_->encryptors.emplace(keyed_cipher(cipher, keys.encryption_key, true));
        impl_->decryptors.emplace(keyed_cipher(cipher, keys.encryption_key, false));
        // Surface key rejection (for example XTS with equal halves) at construction.
        (void)impl_->encryptors->acquire();
    }
    if (!keys.mac_key.empty()) {
        impl_->hmac.reset(EVP_MAC_fetch(nullptr, "HMAC", nullptr));
        if (!impl_->hmac) openssl_failure("HMAC fetch");
        EVP_MAC* mac = impl_->hmac.get();
        impl_->mac_key = keys.mac_key;
        const Bytes& mac_key = impl_->mac_key;
        impl_->macs.emplace([mac, &mac_key]() -> EVP_MAC_CTX* {
            EVP_MAC_CTX* ctx = EVP_MAC_CTX_new(mac);
            if (ctx == nullptr) return nullptr;
            char digest[] = "SHA256";
            const OSSL_PARAM params[] = {OSSL_PARAM_construct_utf8_string(OSSL_MAC_PARAM_DIGEST, digest, 0),
                                         OSSL_PARAM_construct_end()};
            if (EVP_MAC_init(ctx, as_uchar(mac_key), mac_key.size(), params) != 1) {
                EVP_MAC_CTX_free(ctx);
                return nullptr;
            }
            return ctx;
        });
    }
}

SectorCipher::~SectorCipher() = default;
SectorCipher::SectorCipher(SectorCipher&&) noexcept = default;
SectorCipher& SectorCipher::operator=(SectorCipher&&) noexcept = default;

void SectorCipher::generate_iv(SectorRequest& request, EntropySource& entropy) const
{
    if (suite_->iv_generator == IvGenerator::random) {
        entropy.fill(request.iv);
    }
}

namespace {

void check_request(const CipherSuite& suite, const SectorRequest& request)
{
    if (request.iv.size() != suite.iv_size || request.tag.size() != suite.tag_size) {
        throw Error(Errc::invalid_argument, "request metadata does not match suite " + std::string(suite.name));
    }
    if (suite.encrypts && (request.payload.size() < 16 || request.payload.size() % 16 != 0)) {
        throw Error(Errc::invalid_argument, "payload must be a positive multiple of 16 bytes");
    }
    if (request.payload.size() > (1u << 20)) {
        throw Error(Errc::invalid_argument, "payload larger than 1 MiB");
    }
}

void xts_transform(CipherPool& pool, const Iv128& tweak, ByteSpan payload)
{
    auto lease = pool.acquire();
    int len = 0;
    if (EVP_CipherInit_ex(lease.get(), nullptr, nullptr, nullptr, as_uchar(tweak), -1) != 1 ||
        EVP_CipherUpdate(lease.get(), as_uchar(payload), &len, as_uchar(payload), static_cast<int>(payload.size())) !=
            1) {
        openssl_failure("XTS");
    }
}

Iv128 tweak_from(ConstByteSpan iv)
{
    Iv128 tweak{};
    std::copy(iv.begin(), iv.end(), tweak.begin());
    return tweak;
}

void hmac_sector(MacPool& pool, ConstByteSpan key, std::uint64_t sector, ConstByteSpan iv, ConstByteSpan ciphertext,
                 std::array<unsigned char, 32>& out)
{
    auto lease = pool.acquire();
    std::array<std::byte, 8> sector_le{};
    store_le<std::uint64_t>(sector_le, sector);
    std::size_t len = 0;
    // Re-keying on every use: a NULL-key re-init of a finished HMAC context
    // yields wrong MACs on OpenSSL 3.0.2.
    if (EVP_MAC_init(lease.get(), as_uchar(key), key.size(), nullptr) != 1 ||
        EVP_MAC_update(lease.get(), as_uchar(ConstByteSpan(sector_le)), sector_le.size()) != 1 ||
        EVP_MAC_update(lease.get(), as_uchar(iv), iv.size()) != 1 ||
        EVP_MAC_update(lease.get(), as_uchar(ciphertext), ciphertext.size()) != 1 ||
        EVP_MAC_final(lease.get(), out.data(), &len, out.size()) != 1 || len != out.size()) {
        openssl_failure("HMAC-SHA256");
    }
}

void aead_seal(CipherPool& pool, ConstByteSpan nonce, ConstByteSpan aad, ByteSpan payload, ByteSpan tag)
{
    auto lease = pool.acquire();
    auto* ctx = lease.get();
    int len = 0;
    if (EVP_EncryptInit_ex(ctx, nullptr, nullptr, nullptr, as_uchar(nonce)) != 1 ||
        EVP_EncryptUpdate(ctx, nullptr, &len, as_uchar(aad), static_cast<int>(aad.size())) != 1 ||
        EVP_EncryptUpdate(ctx, as_uchar(payload), &len, as_uchar(payload), static_cast<int>(payload.size())) != 1 ||
        EVP_EncryptFinal_ex(ctx, nullptr, &len) != 1 ||
        EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_AEAD_GET_TAG, static_cast<int>(tag.size()), tag.data()) != 1) {
        openssl_failure("AEAD seal");
    }
}

bool aead_open(CipherPool& pool, ConstByteSpan nonce, ConstByteSpan aad, ByteSpan payload, ConstByteSpan tag)
{
    auto lease = pool.acquire();
    auto* ctx = lease.get();
    int len = 0;
    std::array<unsigned char, 16> expected{};
    std::copy_n(as_uchar(tag), tag.size(), expected.begin());
    if (EVP_DecryptInit_ex(ctx, nullptr, nullptr, nullptr, as_uchar(nonce)) != 1 ||
        EVP_DecryptUpdate(ctx, nullptr, &len, as_uchar(aad), static_cast<int>(aad.size())) != 1 ||
        EVP_DecryptUpdate(ctx, as_uchar(payload), &len, as_uchar(payload), static_cast<int>(payload.size())) != 1 ||
        EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_AEAD_SET_TAG, static_cast<int>(tag.size()), expected.data()) != 1) {
        openssl_failure("AEAD open");
    }
    return EVP_DecryptFinal_ex(ctx, nullptr, &len) == 1;
}

} // namespace

void SectorCipher::encrypt(SectorRequest& request) const
{
    check_request(*suite_, request);
    switch (suite_->id) {
    case SuiteId::null_cipher:
        return;
    case SuiteId::crc32:
        crc32_tag(request.payload, request.tag);
        return;
    case SuiteId::aes256_xts_plain64:
        xts_transform(*impl_->encryptors, iv_plain64(request.sector), request.payload);
        return;
    case SuiteId::aes256_xts_random:
        xts_transform(*impl_->encryptors, tweak_from(request.iv), request.payload);
        return;
    case SuiteId::aes256_xts_hmac_sha256_random: {
        xts_transform(*impl_->encryptors, tweak_from(request.iv), request.payload);
        std::array<unsigned char, 32> mac{};
        hmac_sector(*impl_->macs, impl_->mac_key, request.sector, request.iv, request.payload, mac);
        std::copy_n(reinterpret_cast<const std::byte*>(mac.data()), mac.size(), request.tag.begin());
        return;
    }
    case SuiteId::aes256_gcm_random: {
        const auto aad = sector_aad(request.sector, request.iv);
        aead_seal(*impl_->encryptors, request.iv, aad, request.payload, request.tag);
        return;
    }
    case SuiteId::chacha20_poly1305_random: {
        const auto aad = sector_aad(request.sector, request.iv);
        aead_seal(*impl_->encryptors, request.iv.first(aead_nonce_bytes), aad, request.payload,
                  request.tag.first(poly1305_tag_bytes));
        std::fill(request.tag.begin() + poly1305_tag_bytes, request.tag.end(), std::byte{0});
        return;
    }
    }
}

bool SectorCipher::decrypt(SectorRequest& request) const
{
    check_request(*suite_, request);
    bool ok = true;
    switch (suite_->id) {
    case SuiteId::null_cipher:
        return true;
    case SuiteId::crc32:
        ok = crc32_tag_matches(request.payload, request.tag);
        break;
    case SuiteId::aes256_xts_plain64:
        xts_transform(*impl_->decryptors, iv_plain64(request.sector), request.payload);
        return true;
    case SuiteId::aes256_xts_random:
        xts_transform(*impl_->decryptors, tweak_from(request.iv), request.payload);
        return true;
    case SuiteId::aes256_xts_hmac_sha256_random: {
        std::array<unsigned char, 32> mac{};
        hmac_sector(*impl_->macs, impl_->mac_key, request.sector, request.iv, request.payload, mac);
        ok = equal_ct(ConstByteSpan(reinterpret_cast<const std::byte*>(mac.data()), mac.size()), request.tag);
        if (ok) {
            xts_transform(*impl_->decryptors, tweak_from(request.iv), request.payload);
        }
        break;
    }
    case SuiteId::aes256_gcm_random: {
        const auto aad = sector_aad(request.sector, request.iv);
        ok = aead_open(*impl_->decryptors, request.iv, aad, request.payload, request.tag);
        break;
    }
    case SuiteId::chacha20_poly1305_random: {
        const auto aad = sector_aad(request.sector, request.iv);
        std::byte padding{0};
        for (auto b : request.tag.subspan(poly1305_tag_bytes)) {
            padding |= b;
        }
        const bool tag_ok = aead_open(*impl_->decryptors, request.iv.first(aead_nonce_bytes), aad, request.payload,
                                      request.tag.first(poly1305_tag_bytes));
        ok = tag_ok && padding == std::byte{0};
        break;
    }
    }
    if (!ok) {
        OPENSSL_cleanse(request.payload.data(), request.payload.size());
    }
    return ok;
}

} // namespace aeadfde
