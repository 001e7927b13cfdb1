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

#include "aeadfde/layout.hpp"

#include <algorithm>
#include <string>

#include "aeadfde/error.hpp"

namespace aeadfde {

std::uint32_t tags_per_sector(std::uint32_t sector_size, std::uint32_t tag_size)
{
    if (tag_size == 0 || tag_size > sector_size) {
        throw Error(Errc::invalid_argument, "tag size " + std::to_string(tag_size) + " not in (0, " +
                                                std::to_string(sector_size) + "]");
    }
    return sector_size / tag_size;
}

std::uint64_t meta_sectors_required(std::uint64_t data_sectors, std::uint32_t tags_per_sector)
{
    if (tags_per_sector == 0) {
        throw Error(Errc::invalid_argument, "tags_per_sector must be positive");
    }
    return data_sectors / tags_per_sector + (data_sectors % tags_per_sector != 0 ? 1 : 0);
}

double overhead_percent(std::uint64_t data_sectors, std::uint64_t meta_sectors)
{
    const auto total = data_sectors + meta_sectors;
    if (total == 0) {
        throw Error(Errc::invalid_argument, "overhead of an empty device is undefined");
    }
    return 100.0 * static_cast<double>(meta_sectors) / static_cast<double>(total);
}

double region_overhead_percent(std::uint32_t sector_size, std::uint32_t tag_size)
{
    return overhead_percent(tags_per_sector(sector_size, tag_size), 1);
}

PhysicalAddress logical_to_physical(const Layout& layout, std::uint64_t logical)
{
    if (logical >= layout.data_sectors) {
        throw Error(Errc::out_of_range,
                    "logical sector " + std::to_string(logical) + " beyond " + std::to_string(layout.data_sectors),
                    logical);
    }
    const std::uint64_t region = logical / layout.tags_per_sector;
    const std::uint64_t index = logical % layout.tags_per_sector;
    PhysicalAddress addr;
    addr.meta_sector = layout.data_region_start + region * layout.region_sectors();
    addr.data_sector = addr.meta_sector + 1 + index;
    addr.tag_offset = static_cast<std::uint32_t>(index * layout.tag_size);
    return addr;
}

RegionSpan region_members(const Layout& layout, std::uint64_t region)
{
    if (region >= layout.meta_sectors) {
        throw Error(Errc::out_of_range, "metadata region " + std::to_string(region) + " does not exist");
    }
    RegionSpan span;
    span.first = region * layout.tags_per_sector;
    span.count = std::min<std::uint64_t>(layout.tags_per_sector, layout.data_sectors - span.first);
    return span;
}

Layout layout_for_capacity(std::uint64_t total_sectors, std::uint32_t sector_size, std::uint32_t tag_size,
                           std::uint64_t journal_sectors)
{
    if (sector_size != 512 && sector_size != 4096) {
        throw Error(Errc::invalid_argument, "sector size must be 512 or 4096, got " + std::to_string(sector_size));
    }
    Layout layout;
    layout.sector_size = sector_size;
    layout.tag_size = tag_size;
    layout.tags_per_sector = tags_per_sector(sector_size, tag_size);
    layout.journal_sectors = journal_sectors;
    layout.total_sectors = total_sectors;
    layout.data_region_start = layout.superblock_sectors + journal_sectors;

    if (total_sectors <= layout.data_region_start) {
        throw Error(Errc::too_small, "device of " + std::to_string(total_sectors) +
                                         " sectors holds only superblock and journal");
    }
    const std::uint64_t available = total_sectors - layout.data_region_start;
    const std::uint64_t full_regions = available / layout.region_sectors();
    const std::uint64_t remainder = available % layout.region_sectors();
    layout.data_sectors = full_regions * layout.tags_per_sector + (remainder > 1 ? remainder - 1 : 0);
    if (layout.data_sectors == 0) {
        throw Error(Errc::too_small, "device of " + std::to_string(total_sectors) + " sectors fits no data sector");
    }
    layout.meta_sectors = meta_sectors_required(layout.data_sectors, layout.tags_per_sector);
    return layout;
}

std::uint64_t default_journal_sectors(std::uint64_t total_sectors, std::uint32_t sector_size)
{
    const std::uint64_t cap = (16ull << 20) / sector_size;
    return std::min(std::max<std::uint64_t>(64, total_sectors / 128), cap);
}

} // namespace aeadfde
