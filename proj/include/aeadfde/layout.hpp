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

namespace aeadfde {

/// Geometry of a formatted device, in sectors of `sector_size` bytes:
///
///   [superblock][journal ...][M D D ... D][M D D ... D] ... [M D ... D]
///
/// Each region is one metadata sector M followed by up to `tags_per_sector`
/// data sectors D whose tags it holds. Only the final region may be partial.
struct Layout {
    std::uint32_t sector_size = 0;
    std::uint32_t tag_size = 0;
    std::uint32_t tags_per_sector = 0;
    std::uint64_t data_sectors = 0;
    std::uint64_t meta_sectors = 0;
    std::uint64_t journal_sectors = 0;
    std::uint64_t superblock_sectors = 1;
    std::uint64_t total_sectors = 0;
    std::uint64_t data_region_start = 0;

    constexpr std::uint64_t region_sectors() const noexcept { return std::uint64_t{tags_per_sector} + 1; }
    constexpr std::uint64_t journal_start() const noexcept { return superblock_sectors; }
    /// Sectors actually occupied, which may be less than total_sectors.
    constexpr std::uint64_t used_sectors() const noexcept
    {
        return superblock_sectors + journal_sectors + data_sectors + meta_sectors;
    }

    friend bool operator==(const Layout&, const Layout&) = default;
};

struct PhysicalAddress {
    std::uint64_t data_sector = 0;
    std::uint64_t meta_sector = 0;
    std::uint32_t tag_offset = 0;

    friend bool operator==(const PhysicalAddress&, const PhysicalAddress&) = default;
};

std::uint32_t tags_per_sector(std::uint32_t sector_size, std::uint32_t tag_size);

std::uint64_t meta_sectors_required(std::uint64_t data_sectors, std::uint32_t tags_per_sector);

/// Share of the device used for metadata, in percent.
double overhead_percent(std::uint64_t data_sectors, std::uint64_t meta_sectors);

/// Asymptotic overhead for one full region, independent of device size.
double region_overhead_percent(std::uint32_t sector_size, std::uint32_t tag_size);

PhysicalAddress logical_to_physical(const Layout& layout, std::uint64_t logical);

/// Logical sectors [first, first + count) whose tags live in metadata region `region`.
struct RegionSpan {
    std::uint64_t first = 0;
    std::uint64_t count = 0;
};
RegionSpan region_members(const Layout& layout, std::uint64_t region);

/// Largest layout that fits `total_sectors`. Throws Errc::too_small when not
/// even one data sector fits after the superblock and journal.
Layout layout_for_capacity(std::uint64_t total_sectors, std::uint32_t sector_size, std::uint32_t tag_size,
                           std::uint64_t journal_sectors);

/// Format-time journal size: max(64 sectors, capacity / 128), capped at 16 MiB.
std::uint64_t default_journal_sectors(std::uint64_t total_sectors, std::uint32_t sector_size);

} // namespace aeadfde
