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

#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <random>
#include <set>
#include <thread>

#include "aeadfde/error.hpp"
#include "aeadfde/sectorcrypt.hpp"
#include "support/helpers.hpp"

using namespace aeadfde;
using testing_support::random_bytes;
using testing_support::sha256_hex;
using testing_support::to_buf;
using testing_support::to_bytes;

namespace {

struct Sealed {
    Bytes iv;
    Bytes payload;
    Bytes tag;
};

Sealed seal(const SectorCipher& c, std::uint64_t sector, ConstByteSpan plain, ConstByteSpan iv = {})
{
    Sealed s{Bytes(c.suite().iv_size), Bytes(plain.begin(), plain.end()), Bytes(c.suite().tag_size)};
    if (!iv.empty()) std::copy(iv.begin(), iv.end(), s.iv.begin());
    SectorRequest r{sector, s.iv, s.payload, s.tag};
    c.encrypt(r);
    return s;
}

bool open_sealed(const SectorCipher& c, std::uint64_t sector, Sealed s, Bytes* out = nullptr)
{
    SectorRequest r{sector, s.iv, s.payload, s.tag};
    const bool ok = c.decrypt(r);
    if (out != nullptr) *out = s.payload;
    return ok;
}

Bytes key_of(std::size_t n, unsigned mul, unsigned add)
{
    return testing_support::pattern(n, mul, add);
}

Bytes iota_from(unsigned start, std::size_t n)
{
    return testing_support::pattern(n, 1, start);
}

const Bytes kPlain = testing_support::pattern(512);

} // namespace

TEST(Suites, TableOfIvAndTagSizes)
{
    struct Row {
        const char* name;
        std::uint32_t iv;
        std::uint32_t tag;
    };
    const Row rows[] = {
        {"null", 0, 0},
        {"crc32", 0, 4},
        {"aes256-xts-plain64", 0, 0},
        {"aes256-xts-random", 16, 0},
        {"aes256-gcm-random", 12, 16},
        {"aes256-xts-hmac-sha256-random", 16, 32},
        {"chacha20-poly1305-random", 16, 32},
    };
    EXPECT_EQ(all_suites().size(), std::size(rows));
    for (const auto& row : rows) {
        const auto& s = suite_by_name(row.name);
        EXPECT_EQ(s.name, row.name);
        EXPECT_EQ(s.iv_size, row.iv) << row.name;
        EXPECT_EQ(s.tag_size, row.tag) << row.name;
        EXPECT_EQ(&suite(s.id), &s);
    }
    EXPECT_THROW(suite_by_name("aes256-cbc-essiv"), Error);
}

TEST(Suites, PositionBinding)
{
    EXPECT_TRUE(suite(SuiteId::aes256_xts_plain64).binds_position());
    EXPECT_FALSE(suite(SuiteId::aes256_xts_random).binds_position());
    EXPECT_TRUE(suite(SuiteId::aes256_gcm_random).binds_position());
}

TEST(Iv, Plain64)
{
    const auto iv = iv_plain64(0x0102030405060708ull);
    EXPECT_EQ(to_hex(iv), "08070605040302010000000000000000");
}

TEST(Iv, EssivFrozenVectors)
{
    EXPECT_EQ(to_hex(iv_essiv(0, Bytes(32))), "87eeabbc603b2f5cd49f03d2e811947f");
    EXPECT_EQ(to_hex(iv_essiv(12345, key_of(32, 1, 0))), "0a4bdae307661e91bbc492282ca73cca");
}

TEST(Iv, EssivMatchesReference)
{
    std::mt19937_64 rng(5);
    for (int t = 0; t < 20; ++t) {
        const auto master = random_bytes(rng, 64);
        const std::uint64_t sector = rng();
        const auto salt = oracle::sha256(to_buf(master));
        const auto p = iv_plain64(sector);
        oracle::Buf out(16);
        oracle::Aes256(salt.data()).encrypt(to_buf(p).data(), out.data());
        EXPECT_EQ(to_hex(iv_essiv(sector, master)), oracle::hex(out));
    }
}

TEST(Iv, RandomIvsDoNotRepeat)
{
    SystemEntropy e;
    std::set<Bytes> seen;
    for (int i = 0; i < 2000; ++i) EXPECT_TRUE(seen.insert(iv_random(e, 16)).second);
}

TEST(Keys, WrongLengthRejected)
{
    for (const auto& s : all_suites()) {
        if (s.master_key_size == 0) continue;
        try {
            SectorCipher c(s, Bytes(s.master_key_size - 1, std::byte{1}));
            FAIL() << s.name;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), Errc::wrong_key_length);
        }
    }
}

TEST(Keys, DuplicateXtsHalvesRejected)
{
    for (const auto id : {SuiteId::aes256_xts_plain64, SuiteId::aes256_xts_random,
                          SuiteId::aes256_xts_hmac_sha256_random}) {
        const auto& s = suite(id);
        auto key = Bytes(s.master_key_size, std::byte{7});
        if (s.master_key_size > 64) key[70] = std::byte{8};
        EXPECT_THROW(SectorCipher(s, key), Error) << s.name;
        key[40] = std::byte{9};
        EXPECT_NO_THROW(SectorCipher(s, key)) << s.name;
    }
}

TEST(Keys, SplitSeparatesEncryptionAndMac)
{
    const auto mk = key_of(96, 3, 1);
    const auto k = split_key(mk, suite(SuiteId::aes256_xts_hmac_sha256_random));
    EXPECT_EQ(k.encryption_key, Bytes(mk.begin(), mk.begin() + 64));
    EXPECT_EQ(k.mac_key, Bytes(mk.begin() + 64, mk.end()));
    const auto g = split_key(key_of(32, 1, 0), suite(SuiteId::aes256_gcm_random));
    EXPECT_EQ(g.encryption_key.size(), 32u);
    EXPECT_TRUE(g.mac_key.empty());
}

TEST(Keys, MacKeyChangeOnlyBreaksTag)
{
    const auto& s = suite(SuiteId::aes256_xts_hmac_sha256_random);
    auto mk = key_of(96, 3, 1);
    const SectorCipher a(s, mk);
    mk[80] ^= std::byte{1};
    const SectorCipher b(s, mk);
    const auto iv = iota_from(0x10, 16);
    const auto sa = seal(a, 42, kPlain, iv);
    const auto sb = seal(b, 42, kPlain, iv);
    EXPECT_EQ(sa.payload, sb.payload);
    EXPECT_NE(sa.tag, sb.tag);
    EXPECT_FALSE(open_sealed(b, 42, sa));
}

TEST(XtsPlain64, FrozenVector)
{
    const SectorCipher c(suite(SuiteId::aes256_xts_plain64), key_of(64, 1, 0));
    const auto s = seal(c, 7, kPlain);
    EXPECT_EQ(to_hex(ConstByteSpan(s.payload).first(16)), "b2d9289b998ebd6bcc8a6d434711b8af");
    EXPECT_EQ(sha256_hex(s.payload), "cdd6ce83f8b13e2e2db546b9c2cbd0e5043546441c022686ae6552daf8ce12cd");
}

TEST(XtsPlain64, MatchesReferenceAndRoundTrips)
{
    std::mt19937_64 rng(11);
    for (int t = 0; t < 30; ++t) {
        const auto key = random_bytes(rng, 64);
        const SectorCipher c(suite(SuiteId::aes256_xts_plain64), key);
        const std::uint64_t sector = rng() >> (rng() % 64);
        const auto plain = random_bytes(rng, t % 2 ? 4096 : 512);
        const auto s = seal(c, sector, plain);
        const auto ref = oracle::xts_encrypt(to_buf(key).data(), to_buf(iv_plain64(sector)).data(), to_buf(plain));
        ASSERT_EQ(to_buf(s.payload), ref);
        Bytes back;
        EXPECT_TRUE(open_sealed(c, sector, s, &back));
        EXPECT_EQ(back, plain);
    }
}

TEST(XtsRandom, TweakIsStoredIv)
{
    std::mt19937_64 rng(12);
    const auto key = random_bytes(rng, 64);
    const SectorCipher c(suite(SuiteId::aes256_xts_random), key);
    const auto iv = random_bytes(rng, 16);
    const auto s = seal(c, 99, kPlain, iv);
    EXPECT_EQ(to_buf(s.payload), oracle::xts_encrypt(to_buf(key).data(), to_buf(iv).data(), to_buf(kPlain)));
    // Without a tag the sector number plays no part.
    Bytes back;
    EXPECT_TRUE(open_sealed(c, 12345, s, &back));
    EXPECT_EQ(back, kPlain);
}

TEST(XtsHmac, FrozenVector)
{
    const SectorCipher c(suite(SuiteId::aes256_xts_hmac_sha256_random), key_of(96, 3, 1));
    const auto s = seal(c, 42, kPlain, iota_from(0x10, 16));
    EXPECT_EQ(sha256_hex(s.payload), "1417e7c9b19abc4c673a748a48726bf67729dfdb11b5a7353da328de026fd3ec");
    EXPECT_EQ(to_hex(s.tag), "e9eca23955c854eda312202a0365b7dc36355728e84785bf5141a5d196f36b52");
}

TEST(XtsHmac, MatchesComposedReference)
{
    std::mt19937_64 rng(13);
    for (int t = 0; t < 30; ++t) {
        const auto mk = random_bytes(rng, 96);
        const SectorCipher c(suite(SuiteId::aes256_xts_hmac_sha256_random), mk);
        const auto iv = random_bytes(rng, 16);
        const auto plain = random_bytes(rng, 512);
        const std::uint64_t sector = rng();
        const auto s = seal(c, sector, plain, iv);

        const auto k = to_buf(mk);
        const auto ct = oracle::xts_encrypt(k.data(), to_buf(iv).data(), to_buf(plain));
        ASSERT_EQ(to_buf(s.payload), ct);
        oracle::Buf msg = to_buf(sector_aad(sector, iv));
        msg.insert(msg.end(), ct.begin(), ct.end());
        const oracle::Buf mac_key(k.begin() + 64, k.end());
        EXPECT_EQ(to_buf(s.tag), oracle::hmac_sha256(mac_key, msg));
    }
}

TEST(Gcm, FrozenVector)
{
    const SectorCipher c(suite(SuiteId::aes256_gcm_random), key_of(32, 5, 7));
    const auto s = seal(c, 42, kPlain, iota_from(0xa0, 12));
    EXPECT_EQ(sha256_hex(s.payload), "272dc49a54c7c31122ed4a59f3a192cadf3c5378d44e81e7e2ccbc50aa18d72c");
    EXPECT_EQ(to_hex(s.tag), "4e77080455afd93ffb6936b01ece3a29");
}

TEST(Gcm, MatchesReference)
{
    std::mt19937_64 rng(14);
    for (int t = 0; t < 25; ++t) {
        const auto key = random_bytes(rng, 32);
        const SectorCipher c(suite(SuiteId::aes256_gcm_random), key);
        const auto iv = random_bytes(rng, 12);
        const auto plain = random_bytes(rng, 512);
        const std::uint64_t sector = rng();
        const auto s = seal(c, sector, plain, iv);
        const auto ref = oracle::gcm_encrypt(to_buf(key).data(), to_buf(iv).data(), to_buf(sector_aad(sector, iv)),
                                             to_buf(plain));
        ASSERT_EQ(to_buf(s.payload), ref.ciphertext);
        ASSERT_EQ(to_buf(s.tag), ref.tag);
    }
}

TEST(ChaChaPoly, FrozenVector)
{
    const SectorCipher c(suite(SuiteId::chacha20_poly1305_random), key_of(32, 11, 3));
    const auto s = seal(c, 42, kPlain, iota_from(0xc0, 16));
    EXPECT_EQ(sha256_hex(s.payload), "ced4779acda8d6b648054304d61fc2f24c3f27644593099b264e58e8b6b773e5");
    EXPECT_EQ(to_hex(ConstByteSpan(s.tag).first(16)), "e1b65aaad7b47be44cfc0638221d309d");
    EXPECT_TRUE(all_equal(ConstByteSpan(s.tag).subspan(16), std::byte{0}));
}

TEST(ChaChaPoly, MatchesReference)
{
    std::mt19937_64 rng(15);
    for (int t = 0; t < 25; ++t) {
        const auto key = random_bytes(rng, 32);
        const SectorCipher c(suite(SuiteId::chacha20_poly1305_random), key);
        const auto iv = random_bytes(rng, 16);
        const auto plain = random_bytes(rng, 512);
        const std::uint64_t sector = rng();
        const auto s = seal(c, sector, plain, iv);
        const auto ref = oracle::chacha20_poly1305_encrypt(to_buf(key).data(), to_buf(iv).data(),
                                                           to_buf(sector_aad(sector, iv)), to_buf(plain));
        ASSERT_EQ(to_buf(s.payload), ref.ciphertext);
        ASSERT_EQ(to_buf(ConstByteSpan(s.tag).first(16)), ref.tag);
    }
}

TEST(ChaChaPoly, PaddingBytesAreChecked)
{
    const SectorCipher c(suite(SuiteId::chacha20_poly1305_random), key_of(32, 11, 3));
    auto s = seal(c, 42, kPlain, iota_from(0xc0, 16));
    s.tag[31] = std::byte{1};
    EXPECT_FALSE(open_sealed(c, 42, s));
}

class AuthenticatedSuite : public ::testing::TestWithParam<SuiteId> {};

TEST_P(AuthenticatedSuite, RejectsEveryTamperedField)
{
    const auto& s = suite(GetParam());
    std::mt19937_64 rng(16);
    const SectorCipher c(s, random_bytes(rng, s.master_key_size));
    SystemEntropy entropy;
    Sealed good{Bytes(s.iv_size), kPlain, Bytes(s.tag_size)};
    SectorRequest r{42, good.iv, good.payload, good.tag};
    c.generate_iv(r, entropy);
    c.encrypt(r);
    EXPECT_TRUE(open_sealed(c, 42, good));
    EXPECT_FALSE(open_sealed(c, 43, good));

    for (int t = 0; t < 64; ++t) {
        auto bad = good;
        Bytes* field = t % 3 == 0 ? &bad.payload : t % 3 == 1 ? &bad.iv : &bad.tag;
        const std::size_t bit = rng() % (field->size() * 8);
        (*field)[bit / 8] ^= static_cast<std::byte>(1u << (bit % 8));
        Bytes out;
        EXPECT_FALSE(open_sealed(c, 42, bad, &out));
        EXPECT_TRUE(all_equal(out, std::byte{0})) << "plaintext released on failure";
    }
}

INSTANTIATE_TEST_SUITE_P(All, AuthenticatedSuite,
                         ::testing::Values(SuiteId::aes256_gcm_random, SuiteId::aes256_xts_hmac_sha256_random,
                                           SuiteId::chacha20_poly1305_random),
                         [](const auto& info) {
                             std::string n(suite(info.param).name);
                             std::replace(n.begin(), n.end(), '-', '_');
                             return n;
                         });

TEST(Crc32Suite, IsPlaintextWithChecksum)
{
    const SectorCipher c(suite(SuiteId::crc32), {});
    auto s = seal(c, 3, kPlain);
    EXPECT_EQ(s.payload, kPlain);
    EXPECT_TRUE(open_sealed(c, 3, s));
    s.payload[100] ^= std::byte{4};
    EXPECT_FALSE(open_sealed(c, 3, s));
}

TEST(NullSuite, Identity)
{
    const SectorCipher c(suite(SuiteId::null_cipher), {});
    const auto s = seal(c, 3, kPlain);
    EXPECT_EQ(s.payload, kPlain);
}

TEST(SectorCipher, ConcurrentUseIsConsistent)
{
    const SectorCipher c(suite(SuiteId::aes256_gcm_random), key_of(32, 5, 7));
    const auto expect = seal(c, 42, kPlain, iota_from(0xa0, 12));
    std::vector<std::thread> threads;
    std::atomic<int> mismatches{0};
    for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&] {
            for (int i = 0; i < 200; ++i) {
                const auto s = seal(c, 42, kPlain, iota_from(0xa0, 12));
                if (s.payload != expect.payload || s.tag != expect.tag) ++mismatches;
                if (!open_sealed(c, 42, s)) ++mismatches;
            }
        });
    }
    for (auto& t : threads) t.join();
    EXPECT_EQ(mismatches.load(), 0);
}

TEST(EqualCt, Basics)
{
    const auto a = key_of(32, 1, 0);
    auto b = a;
    EXPECT_TRUE(equal_ct(a, b));
    b[31] ^= std::byte{1};
    EXPECT_FALSE(equal_ct(a, b));
    EXPECT_FALSE(equal_ct(a, ConstByteSpan(a).first(31)));
}

TEST(Entropy, DeterministicIsReproducible)
{
    DeterministicEntropy a(9);
    DeterministicEntropy b(9);
    Bytes x(40);
    Bytes y(40);
    a.fill(x);
    b.fill(y);
    EXPECT_EQ(x, y);
}
