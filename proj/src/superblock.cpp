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

#include "aeadfde/superblock.hpp"

#include <algorithm>
#include <cstring>

#include "aeadfde/error.hpp"

namespace aeadfde {

namespace {
constexpr std::size_t profile_field = 16;
}

void Superblock::encode(ByteSpan sector) const
{
    if (sector.size() < encoded_size) {
        throw Error(Errc::invalid_argument, "superblock buffer too small");
    }
    std::fill(sector.begin(), sector.end(), std::byte{0});
    std::memcpy(sector.data(), superblock_magic.data(), superblock_magic.size());
    store_le<std::uint16_t>(sector.subspan(8), version);
    store_le<std::uint32_t>(sector.subspan(10), sector_size);
    store_le<std::uint32_t>(sector.subspan(14), tag_size);
    store_le<std::uint64_t>(sector.subspan(18), total_sectors);
    store_le<std::uint64_t>(sector.subspan(26), data_sectors);
    store_le<std::uint64_t>(sector.subspan(34), journal_sectors);
    store_le<std::uint32_t>(sector.subspan(42), flags);
    std::memcpy(sector.data() + 46, integrity_profile_name.data(), integrity_profile_name.size());
}

Superblock Superblock::decode(ConstByteSpan sector)
{
    if (sector.size() < encoded_size) {
        throw Error(Errc::parse_error, "superblock truncated");
    }
    if (std::memcmp(sector.data(), superblock_magic.data(), superblock_magic.size()) != 0) {
        throw Error(Errc::bad_magic, "no superblock signature");
    }
    Superblock sb;
    sb.version = load_le<std::uint16_t>(sector.subspan(8));
    if (sb.version != superblock_version) {
        throw Error(Errc::bad_version, "unsupported superblock version " + std::to_string(sb.version));
    }
    sb.sector_size = load_le<std::uint32_t>(sector.subspan(10));
    sb.tag_size = load_le<std::uint32_t>(sector.subspan(14));
    sb.total_sectors = load_le<std::uint64_t>(sector.subspan(18));
    sb.data_sectors = load_le<std::uint64_t>(sector.subspan(26));
    sb.journal_sectors = load_le<std::uint64_t>(sector.subspan(34));
    sb.flags = load_le<std::uint32_t>(sector.subspan(42));

    std::array<char, profile_field> expected{};
    std::memcpy(expected.data(), integrity_profile_name.data(), integrity_profile_name.size());
    if (std::memcmp(sector.data() + 46, expected.data(), expected.size()) != 0) {
        throw Error(Errc::parse_error, "unknown integrity profile");
    }
    return sb;
}

} // namespace aeadfde
