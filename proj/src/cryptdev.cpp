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

#include "aeadfde/cryptdev.hpp"

#include <algorithm>
#include <string>

#include "aeadfde/error.hpp"

namespace aeadfde {

RawBlockDevice::RawBlockDevice(std::shared_ptr<BackingStore> backing, std::uint32_t sector_size)
    : backing_(std::move(backing)), sector_size_(sector_size)
{
}

void RawBlockDevice::read(std::uint64_t first, ByteSpan out)
{
    backing_->read(first * sector_size_, out);
}

void RawBlockDevice::write(std::uint64_t first, ConstByteSpan data)
{
    backing_->write(first * sector_size_, data);
}

void StoreBlockDevice::read(std::uint64_t first, ByteSpan out)
{
    const auto ss = store_->sector_size();
    if (out.size() % ss != 0) {
        throw Error(Errc::invalid_argument, "read size is not a whole number of sectors");
    }
    const auto batch = store_->read_sectors(first, out.size() / ss);
    std::copy(batch.data().begin(), batch.data().end(), out.begin());
}

void StoreBlockDevice::write(std::uint64_t first, ConstByteSpan data)
{
    const auto ss = store_->sector_size();
    if (data.size() % ss != 0) {
        throw Error(Errc::invalid_argument, "write size is not a whole number of sectors");
    }
    SectorBatch batch(first, data.size() / ss, ss, store_->tag_size());
    std::copy(data.begin(), data.end(), batch.data().begin());
    store_->write_sectors(batch);
}

CryptDevice::CryptDevice(DeviceConfig config)
    : cipher_(config.suite != nullptr ? *config.suite : throw Error(Errc::invalid_argument, "no suite configured"),
              config.master_key),
      lower_(std::move(config.lower)), entropy_(std::move(config.entropy))
{
    const auto& s = cipher_.suite();
    if (!lower_) {
        throw Error(Errc::invalid_argument, "no lower device configured");
    }
    if (!entropy_) {
        entropy_ = std::make_shared<SystemEntropy>();
    }
    if (lower_->tag_size() != s.metadata_size()) {
        throw Error(Errc::config_mismatch, std::string(s.name) + " needs " + std::to_string(s.metadata_size()) +
                                               " metadata bytes per sector, lower device has " +
                                               std::to_string(lower_->tag_size()));
    }
    if (const auto* meta = dynamic_cast<const MetaStore*>(lower_.get()); meta != nullptr && meta->standalone()) {
        throw Error(Errc::config_mismatch, "standalone CRC metadata cannot carry an encryption layer");
    }
    sector_size_ = config.encryption_sector_size == 0 ? lower_->sector_size() : config.encryption_sector_size;
    if ((sector_size_ != 512 && sector_size_ != 4096) || sector_size_ % lower_->sector_size() != 0) {
        throw Error(Errc::config_mismatch, "encryption sector size " + std::to_string(sector_size_) +
                                               " does not nest over lower sectors of " +
                                               std::to_string(lower_->sector_size()));
    }
    ratio_ = sector_size_ / lower_->sector_size();
    sectors_ = lower_->sector_count() / ratio_;
    if (lower_->max_transaction_sectors() < ratio_) {
        throw Error(Errc::config_mismatch, "lower journal cannot hold one encryption sector");
    }
}

SectorRequest CryptDevice::request_for(SectorBatch& batch, std::uint64_t index, std::uint64_t sector)
{
    const auto& s = cipher_.suite();
    SectorRequest req;
    req.sector = sector;
    req.payload = batch.data().subspan(index * sector_size_, sector_size_);
    if (batch.tag_size() > 0) {
        auto meta = batch.tag(index * ratio_);
        req.iv = meta.first(s.iv_size);
        req.tag = meta.subspan(s.iv_size, s.tag_size);
    }
    return req;
}

std::optional<std::pair<std::uint64_t, bool>> CryptDevice::decrypt_batch(SectorBatch& batch, std::uint64_t first,
                                                                         bool stop_at_first,
                                                                         std::vector<std::uint64_t>* failures)
{
    std::optional<std::pair<std::uint64_t, bool>> first_failure;
    const auto count = batch.count() / ratio_;
    for (std::uint64_t i = 0; i < count; ++i) {
        auto req = request_for(batch, i, first + i);
        const bool untagged = batch.tag_size() > 0 && is_untagged(batch.tag(i * ratio_));
        if (cipher_.decrypt(req)) {
            continue;
        }
        if (!first_failure) {
            first_failure = std::pair{i, untagged};
        }
        if (failures != nullptr) {
            failures->push_back(first + i);
        }
        if (stop_at_first) {
            break;
        }
    }
    return first_failure;
}

Bytes CryptDevice::encrypted_read(std::uint64_t first, std::uint64_t count)
{
    Bytes out(count * sector_size_);
    read(first, out);
    return out;
}

void CryptDevice::read(std::uint64_t first, ByteSpan out)
{
    if (out.size() % sector_size_ != 0) {
        throw Error(Errc::invalid_argument, "read size is not a whole number of sectors");
    }
    const auto count = out.size() / sector_size_;
    if (first > sectors_ || count > sectors_ - first) {
        throw Error(Errc::out_of_range, "read beyond device", first);
    }
    auto batch = lower_->read_sectors(first * ratio_, count * ratio_);
    if (const auto failure = decrypt_batch(batch, first, true, nullptr)) {
        const auto sector = first + failure->first;
        if (failure->second) {
            throw Error(Errc::integrity_unformatted,
                        "sector " + std::to_string(sector) + " has never been initialized", sector);
        }
        throw Error(Errc::integrity_violation, "authentication failed at sector " + std::to_string(sector), sector);
    }
    std::copy(batch.data().begin(), batch.data().end(), out.begin());
}

void CryptDevice::write_chunk(std::uint64_t first, ConstByteSpan plaintext)
{
    const auto count = plaintext.size() / sector_size_;
    SectorBatch batch(first * ratio_, count * ratio_, lower_->sector_size(), lower_->tag_size());
    std::copy(plaintext.begin(), plaintext.end(), batch.data().begin());
    for (std::uint64_t i = 0; i < count; ++i) {
        auto req = request_for(batch, i, first + i);
        cipher_.generate_iv(req, *entropy_);
        cipher_.encrypt(req);
    }
    lower_->write_sectors(batch);
}

void CryptDevice::encrypted_write(std::uint64_t first, ConstByteSpan plaintext)
{
    if (plaintext.size() % sector_size_ != 0) {
        throw Error(Errc::invalid_argument, "write size is not a whole number of sectors");
    }
    const auto count = plaintext.size() / sector_size_;
    if (first > sectors_ || count > sectors_ - first) {
        throw Error(Errc::out_of_range, "write beyond device", first);
    }
    const auto per_txn = std::max<std::uint64_t>(1, lower_->max_transaction_sectors() / ratio_);
    for (std::uint64_t done = 0; done < count; done += per_txn) {
        const auto n = std::min(per_txn, count - done);
        write_chunk(first + done, plaintext.subspan(done * sector_size_, n * sector_size_));
    }
}

std::vector<std::uint64_t> CryptDevice::verify_all()
{
    std::vector<std::uint64_t> failures;
    constexpr std::uint64_t chunk = 256;
    for (std::uint64_t first = 0; first < sectors_; first += chunk) {
        const auto n = std::min(chunk, sectors_ - first);
        auto batch = lower_->read_sectors(first * ratio_, n * ratio_);
        decrypt_batch(batch, first, false, &failures);
    }
    return failures;
}

std::uint64_t CryptDevice::reencrypt_format_pass(const ReencryptOptions& options)
{
    auto* meta = dynamic_cast<MetaStore*>(lower_.get());
    if (meta != nullptr && meta->superblock().has(sb_tags_initialized)) {
        return 0;
    }
    const bool has_marker = lower_->tag_size() > 0;
    const auto chunk = std::max<std::uint64_t>(
        1, std::min(options.chunk_sectors, lower_->max_transaction_sectors() / ratio_));
    const Bytes zeros(chunk * sector_size_);
    std::uint64_t written = 0;

    for (std::uint64_t first = 0; first < sectors_; first += chunk) {
        const auto n = std::min(chunk, sectors_ - first);
        std::vector<bool> pending(n, true);
        if (has_marker) {
            const auto batch = lower_->read_sectors(first * ratio_, n * ratio_);
            for (std::uint64_t i = 0; i < n; ++i) {
                pending[i] = is_untagged(batch.tag(i * ratio_));
            }
        }
        std::uint64_t i = 0;
        while (i < n) {
            if (!pending[i]) {
                ++i;
                continue;
            }
            std::uint64_t j = i;
            while (j < n && pending[j]) ++j;
            write_chunk(first + i, ConstByteSpan(zeros).first((j - i) * sector_size_));
            written += j - i;
            i = j;
        }
        if (options.progress && !options.progress(first + n, sectors_)) {
            lower_->flush();
            return written;
        }
    }
    lower_->flush();
    if (meta != nullptr) {
        meta->set_flag(sb_tags_initialized);
    }
    return written;
}

std::shared_ptr<SectorStore> format_lower(std::shared_ptr<BackingStore> backing, const CipherSuite& suite,
                                          const StackOptions& options)
{
    if (!suite.needs_metastore()) {
        return std::make_shared<RawSectorStore>(std::move(backing), options.sector_size);
    }
    MetaFormatOptions fmt;
    fmt.sector_size = options.sector_size;
    fmt.tag_size = suite.metadata_size();
    fmt.journal = options.journal;
    fmt.journal_sectors = options.journal_sectors;
    fmt.standalone = false;
    MetaStore::format(*backing, fmt);
    return MetaStore::open(std::move(backing));
}

std::shared_ptr<SectorStore> open_lower(std::shared_ptr<BackingStore> backing, const CipherSuite& suite,
                                        std::uint32_t sector_size)
{
    if (!suite.needs_metastore()) {
        return std::make_shared<RawSectorStore>(std::move(backing), sector_size);
    }
    return MetaStore::open(std::move(backing));
}

} // namespace aeadfde
