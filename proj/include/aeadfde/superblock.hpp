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

#include <array>
#include <cstdint>
#include <string_view>

#include "aeadfde/bytes.hpp"

namespace aeadfde {

enum SuperblockFlags : std::uint32_t {
    sb_journal_enabled = 1u << 0,
    sb_standalone_crc = 1u << 1,
    // Set last during format, after journal and metadata sectors are initialized.
    sb_formatted = 1u << 2,
    // Provider mode: the encryption layer finished its initial tag pass.
    sb_tags_initialized = 1u << 3,
};

inline constexpr std::array<char, 8> superblock_magic{'A', 'E', 'A', 'D', 'F', 'D', 'E', '\0'};
inline constexpr std::uint16_t superblock_version = 1;
inline constexpr std::string_view integrity_profile_name = "DM-DIF-EXT-TAG";

/// On-disk superblock at offset 0, little-endian, packed:
///
///   off len field
///     0   8 magic "AEADFDE\0"
///     8   2 version
///    10   4 sector_size
///    14   4 tag_size
///    18   8 total_sectors
///    26   8 data_sectors
///    34   8 journal_sectors
///    42   4 flags
///    46  16 integrity profile name, NUL padded
///
/// The rest of the first sector is zero.
struct Superblock {
    std::uint16_t version = superblock_version;
    std::uint32_t sector_size = 0;
    std::uint32_t tag_size = 0;
    std::uint64_t total_sectors = 0;
    std::uint64_t data_sectors = 0;
    std::uint64_t journal_sectors = 0;
    std::uint32_t flags = 0;

    static constexpr std::size_t encoded_size = 62;

    bool has(std::uint32_t flag) const noexcept { return (flags & flag) == flag; }

    /// Serializes into `sector`, which must be at least encoded_size bytes; the
    /// remainder is zero-filled.
    void encode(ByteSpan sector) const;
    /// Throws Errc::bad_magic, Errc::bad_version or Errc::parse_error.
    static Superblock decode(ConstByteSpan sector);

    friend bool operator==(const Superblock&, const Superblock&) = default;
};

} // namespace aeadfde
