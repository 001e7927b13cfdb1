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
#include "aeadfde/entropy.hpp"
#include "aeadfde/metastore.hpp"
#include "aeadfde/sectorcrypt.hpp"

namespace aeadfde {

/// Plaintext sector device as seen by applications and the bench harness.
class BlockDevice {
public:
    virtual ~BlockDevice() = default;

    virtual std::uint32_t sector_size() const noexcept = 0;
    virtual std::uint64_t sector_count() const noexcept = 0;
    /// Fills `out`, a whole number of sectors starting at `first`.
    virtual void read(std::uint64_t first, ByteSpan out) = 0;
    virtual void write(std::uint64_t first, ConstByteSpan data) = 0;
    virtual void flush() = 0;
};

/// Backing store addressed directly in sectors; the throughput baseline.
class RawBlockDevice final : public BlockDevice {
public:
    RawBlockDevice(std::shared_ptr<BackingStore> backing, std::uint32_t sector_size);

    std::uint32_t sector_size() const noexcept override { return sector_size_; }
    std::uint64_t sector_count() const noexcept override { return backing_->size() / sector_size_; }
    void read(std::uint64_t first, ByteSpan out) override;
    void write(std::uint64_t first, ConstByteSpan data) override;
    void flush() override { backing_->flush(); }

private:
    std::shared_ptr<BackingStore> backing_;
    std::uint32_t sector_size_;
};

/// Data of a SectorStore without an encryption layer; standalone CRC
/// metastores are used this way.
class StoreBlockDevice final : public BlockDevice {
public:
    explicit StoreBlockDevice(std::shared_ptr<SectorStore> store) : store_(std::move(store)) {}

    std::uint32_t sector_size() const noexcept override { return store_->sector_size(); }
    std::uint64_t sector_count() const noexcept override { return store_->sector_count(); }
    void read(std::uint64_t first, ByteSpan out) override;
    void write(std::uint64_t first, ConstByteSpan data) override;
    void flush() override { store_->flush(); }

    const std::shared_ptr<SectorStore>& store() const noexcept { return store_; }

private:
    std::shared_ptr<SectorStore> store_;
};

struct DeviceConfig {
    const CipherSuite* suite = nullptr;
    Bytes master_key;
    /// Presented sector size; 0 means the lower device's sector size.
    std::uint32_t encryption_sector_size = 0;
    std::shared_ptr<SectorStore> lower;
    /// Defaults to SystemEntropy.
    std::shared_ptr<EntropySource> entropy;
};

struct ReencryptOptions {
    std::uint64_t chunk_sectors = 256;
    /// Called after each chunk with (sectors visited, total); returning false
    /// stops the pass early, leaving it resumable.
    std::function<bool(std::uint64_t, std::uint64_t)> progress;
};

/// Encryption layer stacked over a SectorStore. Each encryption sector maps
/// to encryption_sector_size / lower sector_size lower sectors; its
/// iv || tag lives in the metadata of the first of them and the other tags
/// stay zero.
///
/// Thread-safe: cipher state is immutable and the lower device serializes
/// its writes, so a read racing a write sees either the old or the new image.
class CryptDevice final : public BlockDevice {
public:
    /// Throws Errc::config_mismatch when the lower metadata size differs from
    /// the suite's iv + tag bytes, or the sector sizes do not nest;
    /// Errc::wrong_key_length for a bad master key.
    explicit CryptDevice(DeviceConfig config);

    std::uint32_t sector_size() const noexcept override { return sector_size_; }
    std::uint64_t sector_count() const noexcept override { return sectors_; }

    /// All sectors decrypt and authenticate, or the whole request fails with
    /// an integrity error naming the first bad sector.
    Bytes encrypted_read(std::uint64_t first, std::uint64_t count);
    /// Fresh IV per sector for random-IV suites, one lower transaction per
    /// request (split only where the journal cannot hold it).
    void encrypted_write(std::uint64_t first, ConstByteSpan plaintext);

    void read(std::uint64_t first, ByteSpan out) override;
    void write(std::uint64_t first, ConstByteSpan data) override { encrypted_write(first, data); }
    void flush() override { lower_->flush(); }

    /// Failing sectors across the whole device.
    std::vector<std::uint64_t> verify_all();

    /// Writes encrypted zeros to every sector still carrying the format-time
    /// marker, then records completion in the superblock. Resumable and
    /// idempotent. Returns the number of sectors written.
    std::uint64_t reencrypt_format_pass(const ReencryptOptions& options = {});

    const CipherSuite& suite() const noexcept { return cipher_.suite(); }
    const std::shared_ptr<SectorStore>& lower() const noexcept { return lower_; }
    std::uint32_t lower_per_sector() const noexcept { return ratio_; }

private:
    SectorRequest request_for(SectorBatch& batch, std::uint64_t index, std::uint64_t sector);
    /// Decrypts batch sectors in place; returns the index of the first
    /// failure and whether it was the untagged marker.
    std::optional<std::pair<std::uint64_t, bool>> decrypt_batch(SectorBatch& batch, std::uint64_t first,
                                                                bool stop_at_first,
                                                                std::vector<std::uint64_t>* failures);
    void write_chunk(std::uint64_t first, ConstByteSpan plaintext);

    SectorCipher cipher_;
    std::shared_ptr<SectorStore> lower_;
    std::shared_ptr<EntropySource> entropy_;
    std::uint32_t sector_size_ = 0;
    std::uint32_t ratio_ = 1;
    std::uint64_t sectors_ = 0;
};

struct StackOptions {
    std::uint32_t sector_size = 512;
    bool journal = true;
    std::optional<std::uint64_t> journal_sectors;
};

/// Prepares the lower device a suite needs: a provider-mode MetaStore with
/// suite.metadata_size() tags, or raw sectors for suites without metadata.
std::shared_ptr<SectorStore> format_lower(std::shared_ptr<BackingStore> backing, const CipherSuite& suite,
                                          const StackOptions& options = {});

/// Opens the lower device matching format_lower().
std::shared_ptr<SectorStore> open_lower(std::shared_ptr<BackingStore> backing, const CipherSuite& suite,
                                        std::uint32_t sector_size = 512);

} // namespace aeadfde
