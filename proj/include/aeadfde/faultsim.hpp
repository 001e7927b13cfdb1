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
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "aeadfde/backing.hpp"
#include "aeadfde/bytes.hpp"
#include "aeadfde/cryptdev.hpp"
#include "aeadfde/layout.hpp"
#include "aeadfde/sectorcrypt.hpp"

namespace aeadfde {

enum class FaultKind {
    bit_flip_data,
    bit_flip_meta,
    /// Overwrites a sector with attacker-chosen bytes, recomputing unkeyed
    /// CRC tags where the device has them.
    tamper,
    /// Exchanges two sectors together with their metadata.
    sector_swap,
    snapshot_replay_full,
    snapshot_replay_sector,
    torn_write,
};

std::string_view fault_kind_name(FaultKind kind) noexcept;
/// Throws Errc::parse_error.
FaultKind fault_kind_from_name(std::string_view name);

/// Rows of the protection overview the detection matrix is checked against,
/// plus power loss, which no configuration should report.
enum class FaultClass { silent_corruption, tampering, relocation, replay, crash };

std::string_view fault_class_name(FaultClass c) noexcept;

/// One fault event. Sector coordinates are in device sectors (encryption
/// sectors when the geometry groups lower sectors).
///
/// Text form, one plan per line, `#` starts a comment:
///
///   bit_flip_data sector=5 bit=100 seed=7
///   sector_swap sector=3 other=9
///   snapshot_replay_sector sector=7 coherent=0
///   torn_write offset=1234
struct FaultPlan {
    FaultKind kind = FaultKind::bit_flip_data;
    std::uint64_t sector = 0;
    /// Second sector of a swap.
    std::uint64_t other = 0;
    /// Bit index within the sector data or within its metadata.
    std::uint64_t bit = 0;
    /// Crash point for torn_write, in bytes of the write stream.
    std::uint64_t offset = 0;
    /// Replays copy metadata along with data unless false.
    bool coherent = true;
    /// Drives attacker-chosen content for tamper.
    std::uint64_t seed = 0;

    FaultClass fault_class() const noexcept;
    friend bool operator==(const FaultPlan&, const FaultPlan&) = default;
};

std::string format_plan(const FaultPlan& plan);
/// Throws Errc::parse_error.
FaultPlan parse_plan(std::string_view line);
std::string format_plans(const std::vector<FaultPlan>& plans);
/// Skips blank and comment lines.
std::vector<FaultPlan> parse_plans(std::string_view text);

/// Where device sectors and their metadata live on the backing store.
struct FaultGeometry {
    /// Metastore layout; nullopt for raw sectors without metadata.
    std::optional<Layout> layout;
    std::uint32_t lower_sector_size = 512;
    std::uint64_t lower_sectors = 0;
    /// Lower sectors per device sector.
    std::uint32_t group = 1;
    /// Tags are unkeyed CRC-32, which a tampering attacker can recompute.
    bool crc_tags = false;

    std::uint32_t tag_size() const noexcept { return layout ? layout->tag_size : 0; }
    std::uint64_t device_sectors() const noexcept { return lower_sectors / group; }
    std::uint64_t sector_bytes() const noexcept { return std::uint64_t{lower_sector_size} * group; }

    /// Reads the superblock when there is one, otherwise treats the backing
    /// as raw sectors of `raw_sector_size`. crc_tags follows the standalone
    /// flag.
    static FaultGeometry probe(BackingStore& backing, std::uint32_t raw_sector_size = 512,
                               std::uint32_t group = 1);
};

/// Contiguous backing byte range belonging to one device sector.
struct ByteExtent {
    std::uint64_t offset = 0;
    std::uint64_t length = 0;
};

/// Data and metadata byte ranges of a device sector. Metadata extents cover
/// one tag per lower sector.
struct SectorLocation {
    std::vector<ByteExtent> data;
    std::vector<ByteExtent> meta;
};

/// Throws Errc::invalid_target for sectors beyond the device.
SectorLocation locate(const FaultGeometry& geometry, std::uint64_t sector);

/// Bytes overwritten by an injection, oldest first.
class MutationLog {
public:
    struct Entry {
        std::uint64_t offset;
        Bytes previous;
    };

    void record(BackingStore& backing, std::uint64_t offset, std::uint64_t length);
    /// Restores every recorded range, newest first.
    void revert(BackingStore& backing) const;
    const std::vector<Entry>& entries() const noexcept { return entries_; }
    bool empty() const noexcept { return entries_.empty(); }

private:
    std::vector<Entry> entries_;
};

/// Applies a plan to a quiesced backing store. Replay kinds need the earlier
/// image in `snapshot`. Throws Errc::invalid_target for coordinates that do
/// not resolve, for metadata flips on devices without metadata, for swaps
/// of a sector with itself, and for torn_write (see crash_after_bytes()).
MutationLog inject(const FaultPlan& plan, BackingStore& backing, const FaultGeometry& geometry,
                   ConstByteSpan snapshot = {});

/// Random plan of `kind` within the geometry.
FaultPlan random_plan(FaultKind kind, const FaultGeometry& geometry, std::mt19937_64& rng);

enum class Observation { integrity_violation, clean_read, garbage_read };

std::string_view observation_name(Observation o) noexcept;

struct DetectionVerdict {
    bool expected_detected = false;
    Observation observed = Observation::clean_read;
    /// First affected sector whose read produced `observed`.
    std::uint64_t sector = 0;

    bool detected() const noexcept { return observed == Observation::integrity_violation; }
    bool matches() const noexcept { return detected() == expected_detected; }
};

/// Protection level of a configuration, by what its tags can prove.
enum class Protection { none, checksum, authenticated };

Protection protection_of(const CipherSuite& suite) noexcept;

/// Expected detection for a protection level: checksums detect silent
/// corruption only; authenticated suites also detect tampering, relocation
/// and incoherent replay, but not a coherent replay. Incoherent replays
/// assume the sector changed after the snapshot; checksums catch those too.
bool expected_detection(Protection protection, const FaultPlan& plan) noexcept;

/// Device sectors whose reads show the fault.
std::vector<std::uint64_t> affected_sectors(const FaultPlan& plan);

/// True when `plaintext` is something the application legitimately stored,
/// at any time and any address.
using LegitimacyCheck = std::function<bool(std::uint64_t sector, ConstByteSpan plaintext)>;

/// Reads the affected sectors of a reopened device. The strongest outcome
/// wins: any integrity error, else any garbage, else clean. Never throws
/// for integrity errors.
DetectionVerdict classify(BlockDevice& device, const FaultPlan& plan, Protection protection,
                          const LegitimacyCheck& legitimate);

/// Torn writes: `action` runs against a store that loses power after
/// `crash_after` bytes; returns whether the crash point was reached. The
/// durable image is left in `image`.
bool crash_after_bytes(const std::shared_ptr<MemoryBacking>& image, std::uint64_t crash_after,
                       const std::function<void(const std::shared_ptr<BackingStore>&)>& action);

/// Bytes `action` writes when nothing crashes, measured on a copy.
std::uint64_t measure_write_bytes(const MemoryBacking& image,
                                  const std::function<void(const std::shared_ptr<BackingStore>&)>& action);

/// Replays a torn_write plan: copies `base`, crashes `action` at
/// plan.offset and returns the resulting image.
std::shared_ptr<MemoryBacking> torn_write(const FaultPlan& plan, const MemoryBacking& base,
                                          const std::function<void(const std::shared_ptr<BackingStore>&)>& action);

} // namespace aeadfde
