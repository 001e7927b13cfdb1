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

#include "aeadfde/journal.hpp"

#include <algorithm>
#include <array>
#include <string>

#include "aeadfde/crc32.hpp"
#include "aeadfde/error.hpp"

namespace aeadfde {

namespace {

constexpr std::size_t txn_header_bytes = 16;
constexpr std::size_t commit_bytes = 8;
constexpr std::size_t header_encoded_bytes = 32;

} // namespace

std::uint64_t journal_slot_bytes(std::uint64_t entries, std::uint32_t sector_size, std::uint32_t tag_size) noexcept
{
    return txn_header_bytes + entries * (8 + std::uint64_t{sector_size} + tag_size) + commit_bytes;
}

Bytes encode_journal_slot(const JournalTransaction& txn, std::uint32_t sector_size, std::uint32_t tag_size)
{
    const auto n = txn.size();
    Bytes out(journal_slot_bytes(n, sector_size, tag_size));
    ByteSpan view(out);
    store_le<std::uint32_t>(view, journal_txn_magic);
    store_le<std::uint64_t>(view.subspan(4), txn.sequence);
    store_le<std::uint32_t>(view.subspan(12), static_cast<std::uint32_t>(n));
    std::size_t at = txn_header_bytes;
    for (std::size_t i = 0; i < n; ++i) {
        store_le<std::uint64_t>(view.subspan(at), txn.logical[i]);
        at += 8;
        std::copy_n(txn.data.begin() + static_cast<std::ptrdiff_t>(i * sector_size), sector_size, out.begin() + static_cast<std::ptrdiff_t>(at));
        at += sector_size;
        std::copy_n(txn.tags.begin() + static_cast<std::ptrdiff_t>(i * tag_size), tag_size, out.begin() + static_cast<std::ptrdiff_t>(at));
        at += tag_size;
    }
    store_le<std::uint32_t>(view.subspan(at), journal_commit_magic);
    store_le<std::uint32_t>(view.subspan(at + 4), crc32(view.first(at)));
    return out;
}

Journal::Journal(std::shared_ptr<BackingStore> backing, JournalGeometry geometry)
    : backing_(std::move(backing)), geometry_(geometry)
{
    if (geometry_.ring_sectors() == 0 || max_entries() == 0) {
        throw Error(Errc::invalid_argument,
                    "journal of " + std::to_string(geometry_.length_sectors) + " sectors cannot hold one entry");
    }
}

void Journal::write_header(BackingStore& backing, const JournalGeometry& geometry, const Header& header)
{
    Bytes sector(geometry.sector_size);
    ByteSpan view(sector);
    store_le<std::uint32_t>(view, journal_header_magic);
    store_le<std::uint64_t>(view.subspan(4), header.generation);
    store_le<std::uint64_t>(view.subspan(12), header.checkpointed);
    store_le<std::uint64_t>(view.subspan(20), header.head);
    store_le<std::uint32_t>(view.subspan(28), crc32(view.first(28)));
    const auto slot = header.generation % 2;
    backing.write((geometry.start_sector + slot) * geometry.sector_size, sector);
}

std::optional<Journal::Header> Journal::read_header(BackingStore& backing, const JournalGeometry& geometry, int slot)
{
    Bytes buf(header_encoded_bytes);
    backing.read((geometry.start_sector + static_cast<std::uint64_t>(slot)) * geometry.sector_size, buf);
    ConstByteSpan view(buf);
    if (load_le<std::uint32_t>(view) != journal_header_magic ||
        load_le<std::uint32_t>(view.subspan(28)) != crc32(view.first(28))) {
        return std::nullopt;
    }
    Header h;
    h.generation = load_le<std::uint64_t>(view.subspan(4));
    h.checkpointed = load_le<std::uint64_t>(view.subspan(12));
    h.head = load_le<std::uint64_t>(view.subspan(20));
    if (h.generation % 2 != static_cast<std::uint64_t>(slot) || h.head >= geometry.ring_sectors()) {
        return std::nullopt;
    }
    return h;
}

void Journal::initialize(BackingStore& backing, const JournalGeometry& geometry)
{
    if (geometry.ring_sectors() == 0) {
        throw Error(Errc::invalid_argument, "journal needs at least one ring sector");
    }
    write_header(backing, geometry, Header{0, 0, 0});
    write_header(backing, geometry, Header{1, 0, 0});
    // Clears any slot a previous format left at ring position 0.
    Bytes zero(geometry.sector_size);
    backing.write((geometry.start_sector + journal_header_sectors) * geometry.sector_size, zero);
}

std::uint64_t Journal::slot_sectors(std::uint64_t entries) const noexcept
{
    const auto bytes = journal_slot_bytes(entries, geometry_.sector_size, geometry_.tag_size);
    return (bytes + geometry_.sector_size - 1) / geometry_.sector_size;
}

std::uint64_t Journal::max_entries() const noexcept
{
    const auto ring_bytes = geometry_.ring_sectors() * geometry_.sector_size;
    const auto fixed = txn_header_bytes + commit_bytes;
    if (ring_bytes <= fixed) return 0;
    return (ring_bytes - fixed) / (8 + std::uint64_t{geometry_.sector_size} + geometry_.tag_size);
}

bool Journal::fits(std::uint64_t entries) const noexcept
{
    return entries > 0 && slot_sectors(entries) <= free_sectors();
}

void Journal::ring_write(std::uint64_t ring_byte, ConstByteSpan data)
{
    const auto ring_bytes = geometry_.ring_sectors() * geometry_.sector_size;
    const auto base = (geometry_.start_sector + journal_header_sectors) * geometry_.sector_size;
    ring_byte %= ring_bytes;
    const auto first = std::min<std::uint64_t>(data.size(), ring_bytes - ring_byte);
    backing_->write(base + ring_byte, data.first(first));
    if (first < data.size()) {
        backing_->write(base, data.subspan(first));
    }
}

void Journal::ring_read(std::uint64_t ring_byte, ByteSpan out)
{
    const auto ring_bytes = geometry_.ring_sectors() * geometry_.sector_size;
    const auto base = (geometry_.start_sector + journal_header_sectors) * geometry_.sector_size;
    ring_byte %= ring_bytes;
    const auto first = std::min<std::uint64_t>(out.size(), ring_bytes - ring_byte);
    backing_->read(base + ring_byte, out.first(first));
    if (first < out.size()) {
        backing_->read(base, out.subspan(first));
    }
}

std::optional<JournalTransaction> Journal::read_slot(std::uint64_t position, std::uint64_t sequence, bool& corrupt)
{
    const auto ss = geometry_.sector_size;
    const auto ts = geometry_.tag_size;
    const auto start = position * ss;

    std::array<std::byte, txn_header_bytes> head{};
    ring_read(start, head);
    if (load_le<std::uint32_t>(head) != journal_txn_magic ||
        load_le<std::uint64_t>(ConstByteSpan(head).subspan(4)) != sequence) {
        return std::nullopt;
    }
    const auto count = load_le<std::uint32_t>(ConstByteSpan(head).subspan(12));
    if (count == 0 || count > max_entries()) {
        return std::nullopt;
    }

    Bytes slot(journal_slot_bytes(count, ss, ts));
    ring_read(start, slot);
    ConstByteSpan view(slot);
    const auto body = slot.size() - commit_bytes;
    if (load_le<std::uint32_t>(view.subspan(body)) != journal_commit_magic) {
        return std::nullopt;
    }
    if (load_le<std::uint32_t>(view.subspan(body + 4)) != crc32(view.first(body))) {
        corrupt = true;
        return std::nullopt;
    }

    JournalTransaction txn;
    txn.sequence = sequence;
    txn.logical.resize(count);
    txn.data.resize(std::size_t{count} * ss);
    txn.tags.resize(std::size_t{count} * ts);
    std::size_t at = txn_header_bytes;
    for (std::size_t i = 0; i < count; ++i) {
        txn.logical[i] = load_le<std::uint64_t>(view.subspan(at));
        at += 8;
        std::copy_n(slot.begin() + static_cast<std::ptrdiff_t>(at), ss, txn.data.begin() + static_cast<std::ptrdiff_t>(i * ss));
        at += ss;
        std::copy_n(slot.begin() + static_cast<std::ptrdiff_t>(at), ts, txn.tags.begin() + static_cast<std::ptrdiff_t>(i * ts));
        at += ts;
        if (txn.logical[i] >= geometry_.logical_limit) {
            corrupt = true;
            return std::nullopt;
        }
    }
    return txn;
}

RecoveryReport Journal::recover(const Applier& apply)
{
    const auto h0 = read_header(*backing_, geometry_, 0);
    const auto h1 = read_header(*backing_, geometry_, 1);
    if (!h0 && !h1) {
        throw Error(Errc::corrupt_journal, "both journal headers are damaged");
    }
    if (h0 && h1) {
        header_ = h0->generation > h1->generation ? *h0 : *h1;
    } else {
        header_ = h0 ? *h0 : *h1;
    }

    RecoveryReport report;
    std::uint64_t position = header_.head;
    std::uint64_t scanned = 0;
    std::uint64_t sequence = header_.checkpointed + 1;
    const auto ring = geometry_.ring_sectors();
    while (scanned < ring) {
        bool corrupt = false;
        auto txn = read_slot(position, sequence, corrupt);
        if (!txn) {
            report.discarded_corrupt = corrupt;
            break;
        }
        const auto sectors = slot_sectors(txn->size());
        if (scanned + sectors > ring) {
            break;
        }
        apply(*txn);
        ++report.replayed;
        scanned += sectors;
        position = (position + sectors) % ring;
        ++sequence;
    }

    next_sequence_ = sequence;
    tail_ = position;
    used_sectors_ = 0;
    pending_.clear();
    recovered_ = true;

    if (report.replayed > 0) {
        backing_->flush();
        header_ = Header{header_.generation + 1, sequence - 1, position};
        write_header(*backing_, geometry_, header_);
        backing_->flush();
    }
    return report;
}

std::uint64_t Journal::append(JournalTransaction txn)
{
    if (!recovered_) {
        throw Error(Errc::invalid_argument, "journal used before recovery");
    }
    if (txn.size() == 0) {
        throw Error(Errc::invalid_argument, "empty journal transaction");
    }
    if (txn.data.size() != txn.size() * geometry_.sector_size || txn.tags.size() != txn.size() * geometry_.tag_size) {
        throw Error(Errc::invalid_argument, "journal transaction payload size mismatch");
    }
    auto sorted = txn.logical;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw Error(Errc::invalid_argument, "duplicate logical sector in one transaction");
    }
    if (sorted.back() >= geometry_.logical_limit) {
        throw Error(Errc::out_of_range, "journal entry beyond device", sorted.back());
    }
    const auto sectors = slot_sectors(txn.size());
    if (sectors > free_sectors()) {
        throw Error(Errc::journal_full, "transaction needs " + std::to_string(sectors) + " sectors, " +
                                            std::to_string(free_sectors()) + " free");
    }

    txn.sequence = next_sequence_;
    const auto slot = encode_journal_slot(txn, geometry_.sector_size, geometry_.tag_size);
    const auto position = tail_;
    const auto start = position * geometry_.sector_size;
    const auto body = slot.size() - commit_bytes;

    ring_write(start, ConstByteSpan(slot).first(body));
    backing_->flush();
    ring_write(start + body, ConstByteSpan(slot).subspan(body));
    backing_->flush();

    ++next_sequence_;
    tail_ = (tail_ + sectors) % geometry_.ring_sectors();
    used_sectors_ += sectors;
    pending_.push_back(Pending{txn.sequence, std::move(txn)});
    return position;
}

std::uint64_t Journal::apply_pending(const Applier& apply)
{
    std::uint64_t applied = 0;
    for (auto& p : pending_) {
        if (p.unapplied) {
            apply(*p.unapplied);
            p.unapplied.reset();
            ++applied;
        }
    }
    return applied;
}

std::uint64_t Journal::checkpoint(const Applier& apply)
{
    if (pending_.empty()) {
        return 0;
    }
    apply_pending(apply);
    backing_->flush();
    header_ = Header{header_.generation + 1, next_sequence_ - 1, tail_};
    write_header(*backing_, geometry_, header_);
    backing_->flush();
    const auto retired = pending_.size();
    pending_.clear();
    used_sectors_ = 0;
    return retired;
}

} // namespace aeadfde
