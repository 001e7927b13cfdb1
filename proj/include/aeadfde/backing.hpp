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

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>

#include "aeadfde/bytes.hpp"

namespace aeadfde {

/// Flat byte-addressable persistent store with explicit durability barriers.
///
/// Writes issued before a flush() are durable once flush() returns. Out of
/// range accesses throw Errc::io_error. Implementations must tolerate
/// concurrent calls on disjoint ranges.
class BackingStore {
public:
    virtual ~BackingStore() = default;

    virtual std::uint64_t size() const = 0;
    virtual void read(std::uint64_t offset, ByteSpan out) = 0;
    virtual void write(std::uint64_t offset, ConstByteSpan in) = 0;
    virtual void flush() = 0;
};

class FileBacking final : public BackingStore {
public:
    /// Opens an existing file read-write.
    explicit FileBacking(const std::filesystem::path& path);
    /// Creates (or truncates/extends) `path` to exactly `size` bytes.
    static std::shared_ptr<FileBacking> create(const std::filesystem::path& path, std::uint64_t size);

    ~FileBacking() override;
    FileBacking(const FileBacking&) = delete;
    FileBacking& operator=(const FileBacking&) = delete;

    std::uint64_t size() const override { return size_; }
    void read(std::uint64_t offset, ByteSpan out) override;
    void write(std::uint64_t offset, ConstByteSpan in) override;
    void flush() override;

private:
    int fd_ = -1;
    std::uint64_t size_ = 0;
};

/// RAM-resident store. Also the durable image behind crash simulation.
class MemoryBacking final : public BackingStore {
public:
    explicit MemoryBacking(std::uint64_t size);
    explicit MemoryBacking(Bytes image);

    std::uint64_t size() const override { return bytes_.size(); }
    void read(std::uint64_t offset, ByteSpan out) override;
    void write(std::uint64_t offset, ConstByteSpan in) override;
    void flush() override { flushes_.fetch_add(1, std::memory_order_relaxed); }

    std::uint64_t flush_count() const noexcept { return flushes_.load(std::memory_order_relaxed); }

    /// Copy of the whole image. Callers must quiesce writers first.
    Bytes snapshot() const;
    void restore(ConstByteSpan image);
    ByteSpan raw() noexcept { return bytes_; }
    ConstByteSpan raw() const noexcept { return bytes_; }

private:
    Bytes bytes_;
    std::atomic<std::uint64_t> flushes_{0};
};

/// Thrown by CrashingBacking when the configured crash point is reached.
/// Deliberately not an aeadfde::Error so no layer handles it as an I/O error.
class SimulatedCrash : public std::runtime_error {
public:
    SimulatedCrash() : std::runtime_error("simulated power loss") {}
};

/// Forwards to an inner store, counting written bytes. Once `crash_after`
/// bytes have been written, the write in progress lands only up to that byte
/// (a torn write) and SimulatedCrash is thrown; every later call throws too.
/// Without a crash point it just measures the write stream.
class CrashingBacking final : public BackingStore {
public:
    explicit CrashingBacking(std::shared_ptr<BackingStore> inner,
                             std::optional<std::uint64_t> crash_after = std::nullopt);

    std::uint64_t size() const override { return inner_->size(); }
    void read(std::uint64_t offset, ByteSpan out) override;
    void write(std::uint64_t offset, ConstByteSpan in) override;
    void flush() override;

    std::uint64_t bytes_written() const noexcept { return written_; }
    std::uint64_t flushes() const noexcept { return flushes_; }
    bool crashed() const noexcept { return crashed_; }
    void arm(std::optional<std::uint64_t> crash_after);

private:
    std::shared_ptr<BackingStore> inner_;
    std::optional<std::uint64_t> crash_after_;
    std::uint64_t written_ = 0;
    std::uint64_t flushes_ = 0;
    bool crashed_ = false;
    std::mutex mutex_;
};

} // namespace aeadfde
