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

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "aeadfde/backing.hpp"
#include "aeadfde/bytes.hpp"

namespace aeadfde {

inline constexpr std::uint32_t journal_txn_magic = 0x4A524E4C;
inline constexpr std::uint32_t journal_commit_magic = 0x434D5431;
inline constexpr std::uint32_t journal_header_magic = 0x4A484452;

/// Two header sectors precede the ring.
inline constexpr std::uint64_t journal_header_sectors = 2;

/// A batch of full (data, tag) images for distinct logical sectors, applied
/// all-or-nothing.
struct JournalTransaction {
    std::uint64_t sequence = 0;
    std::vector<std::uint64_t> logical;
    Bytes data; // logical.size() * sector_size
    Bytes tags; // logical.size() * tag_size

    std::size_t size() const noexcept { return logical.size(); }
};

struct JournalGeometry {
    std::uint64_t start_sector = 0;
    std::uint64_t length_sectors = 0;
    std::uint32_t sector_size = 0;
    std::uint32_t tag_size = 0;
    /// Exclusive upper bound on logical sector numbers.
    std::uint64_t logical_limit = 0;

    std::uint64_t ring_sectors() const noexcept
    {
        return length_sectors > journal_header_sectors ? length_sectors - journal_header_sectors : 0;
    }
};

/// Bytes a transaction of `entries` sectors occupies before sector padding.
std::uint64_t journal_slot_bytes(std::uint64_t entries, std::uint32_t sector_size, std::uint32_t tag_size) noexcept;

/// Serializes the slot image:
///   magic u32 | sequence u64 | entry_count u32 | {logical u64, data, tag}* |
///   commit magic u32 | crc32 u32
/// The CRC covers everything before the commit record. Little-endian.
Bytes encode_journal_slot(const JournalTransaction& txn, std::uint32_t sector_size, std::uint32_t tag_size);

struct RecoveryReport {
    std::uint64_t replayed = 0;
    /// A slot carried a commit record whose checksum failed; it and everything
    /// after it were discarded.
    bool discarded_corrupt = false;
};

/// Write-ahead data journal over a ring of sectors.
///
/// Not internally synchronized; the owner serializes append, apply and
/// checkpoint calls.
class Journal {
public:
    using Applier = std::function<void(const JournalTransaction&)>;

    Journal(std::shared_ptr<BackingStore> backing, JournalGeometry geometry);

    /// Writes an empty journal: both headers and a cleared first ring sector.
    static void initialize(BackingStore& backing, const JournalGeometry& geometry);

    /// Replays every committed, not yet checkpointed transaction in sequence
    /// order, then checkpoints. Must run once before any append. Throws
    /// Errc::corrupt_journal when neither header is readable.
    RecoveryReport recover(const Applier& apply);

    /// Assigns the next sequence number, writes the entries, flushes, writes
    /// the commit record and flushes again. Returns the ring position (sector
    /// index within the ring) of the slot. Throws Errc::journal_full when the
    /// slot does not fit the free ring space.
    std::uint64_t append(JournalTransaction txn);

    /// Applies appended transactions that have not been applied yet.
    std::uint64_t apply_pending(const Applier& apply);

    /// Applies what is pending, flushes the final locations, then records the
    /// new checkpoint and reclaims the ring. Returns the number of transactions
    /// the checkpoint retired.
    std::uint64_t checkpoint(const Applier& apply);

    bool fits(std::uint64_t entries) const noexcept;
    std::uint64_t max_entries() const noexcept;
    std::uint64_t free_sectors() const noexcept { return geometry_.ring_sectors() - used_sectors_; }
    std::uint64_t pending() const noexcept { return pending_.size(); }
    std::uint64_t last_sequence() const noexcept { return next_sequence_ - 1; }
    const JournalGeometry& geometry() const noexcept { return geometry_; }

private:
    struct Header {
        std::uint64_t generation = 0;
        std::uint64_t checkpointed = 0;
        std::uint64_t head = 0;
    };
    struct Pending {
        std::uint64_t sequence = 0;
        std::optional<JournalTransaction> unapplied;
    };

    static void write_header(BackingStore& backing, const JournalGeometry& geometry, const Header& header);
    static std::optional<Header> read_header(BackingStore& backing, const JournalGeometry& geometry, int slot);

    std::uint64_t slot_sectors(std::uint64_t entries) const noexcept;
    void ring_write(std::uint64_t ring_byte, ConstByteSpan data);
    void ring_read(std::uint64_t ring_byte, ByteSpan out);
    /// Parses the slot at ring sector `position`; nullopt when it is not a
    /// valid committed transaction with `sequence`.
    std::optional<JournalTransaction> read_slot(std::uint64_t position, std::uint64_t sequence, bool& corrupt);

    std::shared_ptr<BackingStore> backing_;
    JournalGeometry geometry_;
    Header header_;
    std::uint64_t next_sequence_ = 1;
    std::uint64_t tail_ = 0;
    std::uint64_t used_sectors_ = 0;
    std::vector<Pending> pending_;
    bool recovered_ = false;
};

} // namespace aeadfde
