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

#include "aeadfde/metastore.hpp"

#include <algorithm>
#include <mutex>
#include <string>

#include "aeadfde/crc32.hpp"
#include "aeadfde/error.hpp"

namespace aeadfde {

namespace {

/// Splits [first, first + count) into runs that share one metadata sector.
template <typename Fn>
void for_each_region_run(const Layout& layout, std::uint64_t first, std::uint64_t count, Fn&& fn)
{
    std::uint64_t done = 0;
    while (done < count) {
        const auto logical = first + done;
        const auto in_region = layout.tags_per_sector - logical % layout.tags_per_sector;
        const auto run = std::min<std::uint64_t>(in_region, count - done);
        fn(logical_to_physical(layout, logical), done, run);
        done += run;
    }
}

} // namespace

SectorBatch::SectorBatch(std::uint64_t first, std::uint64_t count, std::uint32_t sector_size, std::uint32_t tag_size)
    : first_(first), count_(count), sector_size_(sector_size), tag_size_(tag_size), data_(count * sector_size),
      tags_(count * tag_size)
{
}

bool is_untagged(ConstByteSpan tag) noexcept
{
    return !tag.empty() && all_equal(tag, untagged_marker);
}

RawSectorStore::RawSectorStore(std::shared_ptr<BackingStore> backing, std::uint32_t sector_size)
    : backing_(std::move(backing)), sector_size_(sector_size), sectors_(backing_->size() / sector_size)
{
    if (sector_size != 512 && sector_size != 4096) {
        throw Error(Errc::invalid_argument, "sector size must be 512 or 4096");
    }
    if (sectors_ == 0) {
        throw Error(Errc::too_small, "backing store smaller than one sector");
    }
}

SectorBatch RawSectorStore::read_sectors(std::uint64_t first, std::uint64_t count)
{
    if (first > sectors_ || count > sectors_ - first) {
        throw Error(Errc::out_of_range, "read beyond device", first);
    }
    SectorBatch batch(first, count, sector_size_, 0);
    backing_->read(first * sector_size_, batch.data());
    return batch;
}

void RawSectorStore::write_sectors(const SectorBatch& batch)
{
    if (batch.first() > sectors_ || batch.count() > sectors_ - batch.first()) {
        throw Error(Errc::out_of_range, "write beyond device", batch.first());
    }
    if (batch.sector_size() != sector_size_) {
        throw Error(Errc::invalid_argument, "batch sector size mismatch");
    }
    backing_->write(batch.first() * sector_size_, batch.data());
}

Superblock MetaStore::format(BackingStore& backing, const MetaFormatOptions& options)
{
    const auto ss = options.sector_size;
    const auto total = backing.size() / ss;
    std::uint64_t journal_sectors = 0;
    if (options.journal) {
        journal_sectors = options.journal_sectors.value_or(default_journal_sectors(total, ss));
        if (journal_sectors <= journal_header_sectors) {
            throw Error(Errc::invalid_argument, "journal needs more than " +
                                                    std::to_string(journal_header_sectors) + " sectors");
        }
    }
    const auto layout = layout_for_capacity(total, ss, options.tag_size, journal_sectors);

    Superblock sb;
    sb.sector_size = ss;
    sb.tag_size = options.tag_size;
    sb.total_sectors = total;
    sb.data_sectors = layout.data_sectors;
    sb.journal_sectors = journal_sectors;
    sb.flags = (options.journal ? sb_journal_enabled : 0u) | (options.standalone ? sb_standalone_crc : 0u);

    Bytes sector(ss);
    sb.encode(sector);
    backing.write(0, sector);

    if (options.journal) {
        JournalGeometry geometry{layout.journal_start(), journal_sectors, ss, options.tag_size, layout.data_sectors};
        Journal::initialize(backing, geometry);
    }

    if (options.standalone) {
        // Zeroed data with matching CRC tags, one region per write.
        Bytes region(layout.region_sectors() * ss);
        Bytes zero_tag(options.tag_size);
        crc32_tag(Bytes(ss), zero_tag);
        for (std::uint64_t r = 0; r < layout.meta_sectors; ++r) {
            const auto members = region_members(layout, r);
            std::fill(region.begin(), region.end(), std::byte{0});
            for (std::uint64_t i = 0; i < members.count; ++i) {
                std::copy(zero_tag.begin(), zero_tag.end(),
                          region.begin() + static_cast<std::ptrdiff_t>(i * options.tag_size));
            }
            const auto meta = logical_to_physical(layout, members.first).meta_sector;
            backing.write(meta * ss, ConstByteSpan(region).first((members.count + 1) * ss));
        }
    } else {
        Bytes marker(ss, untagged_marker);
        for (std::uint64_t r = 0; r < layout.meta_sectors; ++r) {
            const auto meta = layout.data_region_start + r * layout.region_sectors();
            backing.write(meta * ss, marker);
        }
    }
    backing.flush();

    sb.flags |= sb_formatted;
    sb.encode(sector);
    backing.write(0, sector);
    backing.flush();
    return sb;
}

std::unique_ptr<MetaStore> MetaStore::open(std::shared_ptr<BackingStore> backing)
{
    Bytes head(512);
    if (backing->size() < head.size()) {
        throw Error(Errc::bad_magic, "backing store too small for a superblock");
    }
    backing->read(0, head);
    const auto sb = Superblock::decode(head);
    if (!sb.has(sb_formatted)) {
        throw Error(Errc::unformatted, "format did not complete");
    }
    if (backing->size() / sb.sector_size < sb.total_sectors) {
        throw Error(Errc::geometry_mismatch, "backing store holds " + std::to_string(backing->size() / sb.sector_size) +
                                                 " sectors, superblock expects " + std::to_string(sb.total_sectors));
    }
    Layout layout;
    try {
        layout = layout_for_capacity(sb.total_sectors, sb.sector_size, sb.tag_size, sb.journal_sectors);
    } catch (const Error& e) {
        throw Error(Errc::geometry_mismatch, e.what());
    }
    if (layout.data_sectors != sb.data_sectors || sb.has(sb_journal_enabled) != (sb.journal_sectors > 0)) {
        throw Error(Errc::geometry_mismatch, "superblock geometry is inconsistent");
    }

    std::unique_ptr<MetaStore> store(new MetaStore(std::move(backing), sb, layout));
    if (store->journal_) {
        store->recovery_ = store->journal_->recover([&](const JournalTransaction& txn) { store->apply(txn); });
    }
    return store;
}

MetaStore::MetaStore(std::shared_ptr<BackingStore> backing, const Superblock& superblock, const Layout& layout)
    : backing_(std::move(backing)), superblock_(superblock), layout_(layout)
{
    if (superblock_.has(sb_journal_enabled)) {
        journal_.emplace(backing_, JournalGeometry{layout_.journal_start(), layout_.journal_sectors,
                                                   layout_.sector_size, layout_.tag_size, layout_.data_sectors});
    }
}

MetaStore::~MetaStore()
{
    try {
        flush();
    } catch (...) {
        // Destruction after a failed or crashed backing store; recovery on the
        // next open covers anything left in the journal.
    }
}

std::uint64_t MetaStore::max_transaction_sectors() const noexcept
{
    return journal_ ? journal_->max_entries() : std::numeric_limits<std::uint64_t>::max();
}

Superblock MetaStore::superblock() const
{
    std::shared_lock lock(mutex_);
    return superblock_;
}

void MetaStore::check_range(std::uint64_t first, std::uint64_t count) const
{
    if (first > layout_.data_sectors || count > layout_.data_sectors - first) {
        throw Error(Errc::out_of_range,
                    "range [" + std::to_string(first) + ", +" + std::to_string(count) + ") beyond " +
                        std::to_string(layout_.data_sectors) + " sectors",
                    first);
    }
}

void MetaStore::write_direct(std::uint64_t first, std::uint64_t count, ConstByteSpan data, ConstByteSpan tags)
{
    const auto ss = layout_.sector_size;
    const auto ts = layout_.tag_size;
    for_each_region_run(layout_, first, count, [&](const PhysicalAddress& addr, std::uint64_t offset, std::uint64_t run) {
        backing_->write(addr.data_sector * ss, data.subspan(offset * ss, run * ss));
        backing_->write(addr.meta_sector * ss + addr.tag_offset, tags.subspan(offset * ts, run * ts));
    });
}

void MetaStore::apply(const JournalTransaction& txn)
{
    const auto ss = layout_.sector_size;
    const auto ts = layout_.tag_size;
    std::size_t i = 0;
    while (i < txn.size()) {
        std::size_t j = i + 1;
        while (j < txn.size() && txn.logical[j] == txn.logical[j - 1] + 1) {
            ++j;
        }
        write_direct(txn.logical[i], j - i, ConstByteSpan(txn.data).subspan(i * ss, (j - i) * ss),
                     ConstByteSpan(txn.tags).subspan(i * ts, (j - i) * ts));
        i = j;
    }
}

void MetaStore::read_into(std::uint64_t first, std::uint64_t count, ByteSpan data, ByteSpan tags)
{
    const auto ss = layout_.sector_size;
    const auto ts = layout_.tag_size;
    for_each_region_run(layout_, first, count, [&](const PhysicalAddress& addr, std::uint64_t offset, std::uint64_t run) {
        backing_->read(addr.data_sector * ss, data.subspan(offset * ss, run * ss));
        backing_->read(addr.meta_sector * ss + addr.tag_offset, tags.subspan(offset * ts, run * ts));
    });
}

SectorBatch MetaStore::read_sectors(std::uint64_t first, std::uint64_t count)
{
    check_range(first, count);
    SectorBatch batch(first, count, layout_.sector_size, layout_.tag_size);
    {
        std::shared_lock lock(mutex_);
        read_into(first, count, batch.data(), batch.tags());
    }
    if (standalone()) {
        for (std::uint64_t i = 0; i < count; ++i) {
            if (!crc32_tag_matches(batch.data(i), batch.tag(i))) {
                throw Error(Errc::integrity_violation, "checksum mismatch at sector " + std::to_string(first + i),
                            first + i);
            }
        }
    }
    return batch;
}

void MetaStore::write_sectors(const SectorBatch& batch)
{
    check_range(batch.first(), batch.count());
    if (batch.sector_size() != layout_.sector_size ||
        (!standalone() && batch.tag_size() != layout_.tag_size)) {
        throw Error(Errc::invalid_argument, "batch geometry does not match device");
    }
    if (batch.count() == 0) {
        return;
    }

    const auto ss = layout_.sector_size;
    const auto ts = layout_.tag_size;
    Bytes computed;
    ConstByteSpan tags = batch.tags();
    if (standalone()) {
        computed.resize(batch.count() * ts);
        for (std::uint64_t i = 0; i < batch.count(); ++i) {
            crc32_tag(batch.data(i), ByteSpan(computed).subspan(i * ts, ts));
        }
        tags = computed;
    }

    std::unique_lock lock(mutex_);
    if (!journal_) {
        write_direct(batch.first(), batch.count(), batch.data(), tags);
        return;
    }

    const auto applier = [this](const JournalTransaction& txn) { apply(txn); };
    const auto chunk = journal_->max_entries();
    for (std::uint64_t done = 0; done < batch.count(); done += chunk) {
        const auto n = std::min(chunk, batch.count() - done);
        JournalTransaction txn;
        txn.logical.resize(n);
        for (std::uint64_t i = 0; i < n; ++i) {
            txn.logical[i] = batch.first() + done + i;
        }
        const auto data = batch.data().subspan(done * ss, n * ss);
        const auto tag_bytes = tags.subspan(done * ts, n * ts);
        txn.data.assign(data.begin(), data.end());
        txn.tags.assign(tag_bytes.begin(), tag_bytes.end());

        if (!journal_->fits(n)) {
            journal_->checkpoint(applier);
        }
        journal_->append(std::move(txn));
        journal_->apply_pending(applier);
    }
}

void MetaStore::flush()
{
    std::unique_lock lock(mutex_);
    if (journal_ && journal_->checkpoint([this](const JournalTransaction& txn) { apply(txn); }) > 0) {
        return;
    }
    backing_->flush();
}

std::uint64_t MetaStore::checkpoint()
{
    std::unique_lock lock(mutex_);
    if (!journal_) {
        backing_->flush();
        return 0;
    }
    return journal_->checkpoint([this](const JournalTransaction& txn) { apply(txn); });
}

std::vector<std::uint64_t> MetaStore::verify_all(const SectorCheck& check)
{
    if (!standalone() && !check) {
        throw Error(Errc::invalid_argument, "provider-mode verification needs a sector check");
    }
    std::vector<std::uint64_t> failures;
    const auto ss = layout_.sector_size;
    const auto ts = layout_.tag_size;
    Bytes data(std::uint64_t{layout_.tags_per_sector} * ss);
    Bytes tags(std::uint64_t{layout_.tags_per_sector} * ts);
    for (std::uint64_t r = 0; r < layout_.meta_sectors; ++r) {
        const auto members = region_members(layout_, r);
        {
            std::shared_lock lock(mutex_);
            read_into(members.first, members.count, data, tags);
        }
        for (std::uint64_t i = 0; i < members.count; ++i) {
            const auto d = ConstByteSpan(data).subspan(i * ss, ss);
            const auto t = ConstByteSpan(tags).subspan(i * ts, ts);
            const bool ok = standalone() ? crc32_tag_matches(d, t) : check(members.first + i, d, t);
            if (!ok) {
                failures.push_back(members.first + i);
            }
        }
    }
    return failures;
}

void MetaStore::write_superblock()
{
    Bytes sector(layout_.sector_size);
    superblock_.encode(sector);
    backing_->write(0, sector);
    backing_->flush();
}

void MetaStore::set_flag(std::uint32_t flag)
{
    std::unique_lock lock(mutex_);
    if (superblock_.has(flag)) {
        return;
    }
    superblock_.flags |= flag;
    write_superblock();
}

} // namespace aeadfde
