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

#include <map>
#include <random>

#include "aeadfde/error.hpp"
#include "aeadfde/journal.hpp"
#include "oracles/reference_crypto.hpp"
#include "support/helpers.hpp"

using namespace aeadfde;
using testing_support::pattern;

namespace {

constexpr std::uint32_t ss = 512;
constexpr std::uint32_t ts = 4;

JournalGeometry geometry(std::uint64_t length = 12)
{
    JournalGeometry g;
    g.start_sector = 1;
    g.length_sectors = length;
    g.sector_size = ss;
    g.tag_size = ts;
    g.logical_limit = 100;
    return g;
}

struct Image {
    std::map<std::uint64_t, Bytes> data;
    std::map<std::uint64_t, Bytes> tags;
    std::vector<std::uint64_t> sequences;

    Journal::Applier applier()
    {
        return [this](const JournalTransaction& t) {
            sequences.push_back(t.sequence);
            for (std::size_t i = 0; i < t.size(); ++i) {
                data[t.logical[i]] = Bytes(t.data.begin() + static_cast<std::ptrdiff_t>(i * ss),
                                           t.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * ss));
                tags[t.logical[i]] = Bytes(t.tags.begin() + static_cast<std::ptrdiff_t>(i * ts),
                                           t.tags.begin() + static_cast<std::ptrdiff_t>((i + 1) * ts));
            }
        };
    }
};

JournalTransaction txn(std::vector<std::uint64_t> logical, unsigned salt)
{
    JournalTransaction t;
    t.logical = std::move(logical);
    t.data = pattern(t.logical.size() * ss, 3, salt);
    t.tags = pattern(t.logical.size() * ts, 7, salt);
    return t;
}

std::uint32_t crc32_bitwise(ConstByteSpan data)
{
    return oracle::crc32(reinterpret_cast<const std::uint8_t*>(data.data()), data.size());
}

std::shared_ptr<MemoryBacking> fresh(std::uint64_t length = 12)
{
    auto m = std::make_shared<MemoryBacking>(std::uint64_t{ss} * (length + 2));
    Journal::initialize(*m, geometry(length));
    return m;
}

} // namespace

TEST(Journal, SlotEncodingLayout)
{
    auto t = txn({5, 9}, 1);
    t.sequence = 0x1122334455667788ull;
    const auto slot = encode_journal_slot(t, ss, ts);
    ASSERT_EQ(slot.size(), journal_slot_bytes(2, ss, ts));
    ASSERT_EQ(slot.size(), 16u + 2 * (8 + ss + ts) + 8);
    ConstByteSpan v(slot);
    EXPECT_EQ(load_le<std::uint32_t>(v), journal_txn_magic);
    EXPECT_EQ(load_le<std::uint64_t>(v.subspan(4)), t.sequence);
    EXPECT_EQ(load_le<std::uint32_t>(v.subspan(12)), 2u);
    EXPECT_EQ(load_le<std::uint64_t>(v.subspan(16)), 5u);
    EXPECT_TRUE(std::equal(t.data.begin(), t.data.begin() + ss, slot.begin() + 24));
    EXPECT_EQ(load_le<std::uint64_t>(v.subspan(16 + 8 + ss + ts)), 9u);
    const auto body = slot.size() - 8;
    EXPECT_EQ(load_le<std::uint32_t>(v.subspan(body)), journal_commit_magic);
    EXPECT_EQ(load_le<std::uint32_t>(v.subspan(body + 4)), crc32_bitwise(v.first(body)));
}

TEST(Journal, EmptyRecoveryReplaysNothing)
{
    auto m = fresh();
    Journal j(m, geometry());
    Image img;
    const auto r = j.recover(img.applier());
    EXPECT_EQ(r.replayed, 0u);
    EXPECT_FALSE(r.discarded_corrupt);
    EXPECT_EQ(j.last_sequence(), 0u);
}

TEST(Journal, AppendBeforeRecoverIsRejected)
{
    auto m = fresh();
    Journal j(m, geometry());
    EXPECT_THROW(j.append(txn({1}, 0)), Error);
}

TEST(Journal, CommittedTransactionsReplayAfterCrash)
{
    auto m = fresh();
    {
        Journal j(m, geometry());
        Image ignored;
        j.recover(ignored.applier());
        EXPECT_EQ(j.append(txn({1, 2}, 10)), 0u);
        j.append(txn({2, 3}, 20));
        EXPECT_EQ(j.pending(), 2u);
        EXPECT_EQ(j.last_sequence(), 2u);
    }
    Journal j(m, geometry());
    Image img;
    const auto r = j.recover(img.applier());
    EXPECT_EQ(r.replayed, 2u);
    EXPECT_EQ(img.sequences, (std::vector<std::uint64_t>{1, 2}));
    const auto first = pattern(2 * ss, 3, 10);
    EXPECT_EQ(img.data.at(1), Bytes(first.begin(), first.begin() + ss));
    const auto second = pattern(2 * ss, 3, 20);
    EXPECT_EQ(img.data.at(2), Bytes(second.begin(), second.begin() + ss));
    EXPECT_EQ(img.data.at(3), Bytes(second.begin() + ss, second.end()));

    // Recovery checkpointed; a second recovery sees nothing new.
    Journal again(m, geometry());
    Image none;
    EXPECT_EQ(again.recover(none.applier()).replayed, 0u);
}

TEST(Journal, CheckpointRetiresTransactions)
{
    auto m = fresh();
    Image img;
    {
        Journal j(m, geometry());
        j.recover(img.applier());
        j.append(txn({4}, 1));
        j.append(txn({5}, 2));
        EXPECT_EQ(j.apply_pending(img.applier()), 2u);
        EXPECT_EQ(j.apply_pending(img.applier()), 0u);
        EXPECT_EQ(j.checkpoint(img.applier()), 2u);
        EXPECT_EQ(j.checkpoint(img.applier()), 0u);
        EXPECT_EQ(j.free_sectors(), geometry().ring_sectors());
    }
    Journal j(m, geometry());
    Image after;
    EXPECT_EQ(j.recover(after.applier()).replayed, 0u);
    EXPECT_EQ(j.last_sequence(), 2u);
}

TEST(Journal, RejectsMalformedTransactions)
{
    auto m = fresh();
    Journal j(m, geometry());
    Image img;
    j.recover(img.applier());
    EXPECT_THROW(j.append(JournalTransaction{}), Error);
    EXPECT_THROW(j.append(txn({3, 3}, 0)), Error);
    try {
        j.append(txn({100}, 0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::out_of_range);
    }
    auto bad = txn({1}, 0);
    bad.tags.pop_back();
    EXPECT_THROW(j.append(bad), Error);
}

TEST(Journal, FullJournalIsReported)
{
    auto m = fresh();
    Journal j(m, geometry());
    Image img;
    j.recover(img.applier());
    // 10 ring sectors of 512 bytes hold 9 entries of 524 bytes.
    EXPECT_EQ(j.max_entries(), 9u);
    EXPECT_TRUE(j.fits(9));
    EXPECT_FALSE(j.fits(10));
    std::vector<std::uint64_t> ten{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    try {
        j.append(txn(ten, 0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::journal_full);
    }
    j.append(txn({0, 1, 2, 3}, 0));
    EXPECT_FALSE(j.fits(9));
    j.checkpoint(img.applier());
    EXPECT_TRUE(j.fits(9));
}

TEST(Journal, WrapAroundSurvivesRecovery)
{
    auto m = fresh();
    std::mt19937_64 rng(5);
    Image model;
    {
        Journal j(m, geometry());
        j.recover(model.applier());
        for (unsigned round = 0; round < 50; ++round) {
            const auto n = 1 + rng() % 4;
            std::vector<std::uint64_t> logical;
            for (std::uint64_t i = 0; i < n; ++i) logical.push_back((round * 7 + i * 13) % 100);
            auto t = txn(logical, round);
            if (!j.fits(n)) {
                j.checkpoint(model.applier());
            }
            j.append(t);
            if (round % 3 == 0) j.apply_pending(model.applier());
        }
        // Leave what is pending unapplied to the model: recovery must supply it.
    }
    Image replayed = model;
    Journal j(m, geometry());
    j.recover(replayed.applier());
    Image full;
    {
        // Same sequence applied without crashes gives the reference state.
        auto m2 = fresh();
        Journal k(m2, geometry());
        k.recover(full.applier());
        std::mt19937_64 rng2(5);
        for (unsigned round = 0; round < 50; ++round) {
            const auto n = 1 + rng2() % 4;
            std::vector<std::uint64_t> logical;
            for (std::uint64_t i = 0; i < n; ++i) logical.push_back((round * 7 + i * 13) % 100);
            if (!k.fits(n)) k.checkpoint(full.applier());
            k.append(txn(logical, round));
        }
        k.checkpoint(full.applier());
    }
    EXPECT_EQ(replayed.data, full.data);
    EXPECT_EQ(replayed.tags, full.tags);
}

TEST(Journal, TornCommitIsDiscardedAndFlagged)
{
    auto m = fresh();
    std::uint64_t second_pos = 0;
    {
        Journal j(m, geometry());
        Image img;
        j.recover(img.applier());
        j.append(txn({1}, 1));
        second_pos = j.append(txn({2}, 2));
    }
    // Damage the checksum of the second slot's commit record.
    const auto ring_base = (1 + journal_header_sectors) * ss;
    const auto crc_at = ring_base + second_pos * ss + journal_slot_bytes(1, ss, ts) - 1;
    m->raw()[crc_at] ^= std::byte{0x40};

    Journal j(m, geometry());
    Image img;
    const auto r = j.recover(img.applier());
    EXPECT_EQ(r.replayed, 1u);
    EXPECT_TRUE(r.discarded_corrupt);
    EXPECT_EQ(img.data.count(1), 1u);
    EXPECT_EQ(img.data.count(2), 0u);
}

TEST(Journal, MissingCommitStopsReplayQuietly)
{
    auto m = fresh();
    std::uint64_t pos = 0;
    {
        Journal j(m, geometry());
        Image img;
        j.recover(img.applier());
        pos = j.append(txn({7}, 1));
    }
    const auto commit_at = (1 + journal_header_sectors) * ss + pos * ss + journal_slot_bytes(1, ss, ts) - 8;
    m->raw()[commit_at] = std::byte{0};
    Journal j(m, geometry());
    Image img;
    const auto r = j.recover(img.applier());
    EXPECT_EQ(r.replayed, 0u);
    EXPECT_FALSE(r.discarded_corrupt);
}

TEST(Journal, OneDamagedHeaderFallsBackToTheOther)
{
    auto m = fresh();
    {
        Journal j(m, geometry());
        Image img;
        j.recover(img.applier());
        j.append(txn({3}, 1));
        j.checkpoint(img.applier());
    }
    // Generation 2 lives in slot 0; damaging it leaves generation 1, whose
    // head still points at the already applied slot, which replays again.
    m->raw()[1 * ss + 5] ^= std::byte{1};
    Journal j(m, geometry());
    Image img;
    const auto r = j.recover(img.applier());
    EXPECT_EQ(r.replayed, 1u);
    EXPECT_EQ(img.data.count(3), 1u);
}

TEST(Journal, BothHeadersDamagedIsFatal)
{
    auto m = fresh();
    m->raw()[1 * ss] ^= std::byte{1};
    m->raw()[2 * ss] ^= std::byte{1};
    Journal j(m, geometry());
    Image img;
    try {
        j.recover(img.applier());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::corrupt_journal);
    }
}

TEST(Journal, TooSmallGeometryIsRejected)
{
    auto m = std::make_shared<MemoryBacking>(ss * 8);
    EXPECT_THROW(Journal(m, geometry(2)), Error);
    EXPECT_THROW(Journal::initialize(*m, geometry(2)), Error);
}
