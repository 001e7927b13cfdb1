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
#include <limits>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <vector>

#include "aeadfde/backing.hpp"
#include "aeadfde/bytes.hpp"
#include "aeadfde/journal.hpp"
#include "aeadfde/layout.hpp"
#include "aeadfde/superblock.hpp"

namespace aeadfde {

/// Contiguous run of sectors [first, first + count) carrying data and tags.
class SectorBatch {
public:
    SectorBatch() = default;
    SectorBatch(std::uint64_t first, std::uint64_t count, std::uint32_t sector_size, std::uint32_t tag_size);

    std::uint64_t first() const noexcept { return first_; }
    std::uint64_t count() const noexcept { return count_; }
    std::uint32_t sector_size() const noexcept { return sector_size_; }
    std::uint32_t tag_size() const noexcept { return tag_size_; }

    ByteSpan data() noexcept { return data_; }
    ConstByteSpan data() const noexcept { return data_; }
    ByteSpan tags() noexcept { return tags_; }
    ConstByteSpan tags() const noexcept { return tags_; }

    /// Sector `i` of the batch, relative to first().
    ByteSpan data(std::uint64_t i) noexcept { return ByteSpan(data_).subspan(i * sector_size_, sector_size_); }
    ConstByteSpan data(std::uint64_t i) const noexcept
    {
        return ConstByteSpan(data_).subspan(i * sector_size_, sector_size_);
    }
    ByteSpan tag(std::uint64_t i) noexcept { return ByteSpan(tags_).subspan(i * tag_size_, tag_size_); }
    ConstByteSpan tag(std::uint64_t i) const noexcept { return ConstByteSpan(tags_).subspan(i * tag_size_, tag_size_); }

private:
    std::uint64_t first_ = 0;
    std::uint64_t count_ = 0;
    std::uint32_t sector_size_ = 0;
    std::uint32_t tag_size_ = 0;
    Bytes data_;
    Bytes tags_;
};

/// Lower device of the encryption layer: sectors with optional per-sector
/// metadata. Implementations are safe for concurrent use.
class SectorStore {
public:
    virtual ~SectorStore() = default;

    virtual std::uint32_t sector_size() const noexcept = 0;
    virtual std::uint32_t tag_size() const noexcept = 0;
    virtual std::uint64_t sector_count() const noexcept = 0;
    /// Largest write that commits atomically as one unit.
    virtual std::uint64_t max_transaction_sectors() const noexcept = 0;

    virtual SectorBatch read_sectors(std::uint64_t first, std::uint64_t count) = 0;
    virtual void write_sectors(const SectorBatch& batch) = 0;
    virtual void flush() = 0;
};

/// Plain sectors straight on the backing store, no metadata, no journal.
/// This is what length-preserving suites run over.
class RawSectorStore final : public SectorStore {
public:
    RawSectorStore(std::shared_ptr<BackingStore> backing, std::uint32_t sector_size);

    std::uint32_t sector_size() const noexcept override { return sector_size_; }
    std::uint32_t tag_size() const noexcept override { return 0; }
    std::uint64_t sector_count() const noexcept override { return sectors_; }
    std::uint64_t max_transaction_sectors() const noexcept override { return std::numeric_limits<std::uint64_t>::max(); }

    SectorBatch read_sectors(std::uint64_t first, std::uint64_t count) override;
    void write_sectors(const SectorBatch& batch) override;
    void flush() override { backing_->flush(); }

private:
    std::shared_ptr<BackingStore> backing_;
    std::uint32_t sector_size_;
    std::uint64_t sectors_;
};

struct MetaFormatOptions {
    std::uint32_t sector_size = 512;
    std::uint32_t tag_size = 4;
    bool journal = true;
    /// Defaults to default_journal_sectors() when journaling.
    std::optional<std::uint64_t> journal_sectors;
    /// Standalone mode keeps CRC-32 tags itself; provider mode leaves tags
    /// to the layer above.
    bool standalone = true;
};

/// Metadata-provider mode marks never-written tags with all-0xFF bytes.
inline constexpr std::byte untagged_marker{0xFF};
bool is_untagged(ConstByteSpan tag) noexcept;

/// Virtual block device with per-sector tags in interleaved metadata sectors
/// and an optional write-ahead data journal.
///
/// Reads run concurrently with each other; writes and checkpoints are
/// exclusive, so a read never sees a half-applied write.
class MetaStore final : public SectorStore {
public:
    /// Per-sector check used by verify_all() in provider mode. Returns true
    /// when the sector is intact.
    using SectorCheck = std::function<bool(std::uint64_t logical, ConstByteSpan data, ConstByteSpan tag)>;

    static Superblock format(BackingStore& backing, const MetaFormatOptions& options);

    /// Validates the superblock and replays the journal.
    static std::unique_ptr<MetaStore> open(std::shared_ptr<BackingStore> backing);

    ~MetaStore() override;
    MetaStore(const MetaStore&) = delete;
    MetaStore& operator=(const MetaStore&) = delete;

    std::uint32_t sector_size() const noexcept override { return layout_.sector_size; }
    std::uint32_t tag_size() const noexcept override { return layout_.tag_size; }
    std::uint64_t sector_count() const noexcept override { return layout_.data_sectors; }
    std::uint64_t max_transaction_sectors() const noexcept override;

    /// Standalone mode verifies each tag; one bad sector fails the request
    /// with Errc::integrity_violation naming the first offender.
    SectorBatch read_sectors(std::uint64_t first, std::uint64_t count) override;
    /// Atomic per journal transaction. Standalone mode computes tags itself and
    /// ignores the batch's tags. Requests larger than max_transaction_sectors()
    /// commit as several consecutive transactions.
    void write_sectors(const SectorBatch& batch) override;
    /// Checkpoints the journal and flushes.
    void flush() override;

    /// Reads every sector and reports the failing ones without aborting.
    std::vector<std::uint64_t> verify_all(const SectorCheck& check = {});

    std::uint64_t checkpoint();
    void set_flag(std::uint32_t flag);

    const Layout& layout() const noexcept { return layout_; }
    Superblock superblock() const;
    bool standalone() const noexcept { return superblock_.has(sb_standalone_crc); }
    bool journaled() const noexcept { return journal_.has_value(); }
    const RecoveryReport& recovery() const noexcept { return recovery_; }
    const std::shared_ptr<BackingStore>& backing() const noexcept { return backing_; }

private:
    MetaStore(std::shared_ptr<BackingStore> backing, const Superblock& superblock, const Layout& layout);

    void check_range(std::uint64_t first, std::uint64_t count) const;
    void write_direct(std::uint64_t first, std::uint64_t count, ConstByteSpan data, ConstByteSpan tags);
    void apply(const JournalTransaction& txn);
    void read_into(std::uint64_t first, std::uint64_t count, ByteSpan data, ByteSpan tags);
    void write_superblock();

    std::shared_ptr<BackingStore> backing_;
    Superblock superblock_;
    Layout layout_;
    std::optional<Journal> journal_;
    RecoveryReport recovery_;
    mutable std::shared_mutex mutex_;
};

} // namespace aeadfde
