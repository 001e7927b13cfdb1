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

#include "aeadfde/crc32.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>

namespace aeadfde {

std::uint32_t crc32(ConstByteSpan data, std::uint32_t seed) noexcept
{
    // zlib takes uInt lengths; feed in chunks so sizes above 4 GiB stay correct.
    uLong crc = seed;
    while (!data.empty()) {
        const auto chunk = std::min<std::size_t>(data.size(), 1u << 30);
        crc = ::crc32(crc, as_uchar(data.first(chunk)), static_cast<uInt>(chunk));
        data = data.subspan(chunk);
    }
    return static_cast<std::uint32_t>(crc);
}

void crc32_tag(ConstByteSpan data, ByteSpan tag) noexcept
{
    std::array<std::byte, 4> le{};
    store_le<std::uint32_t>(le, crc32(data));
    const auto n = std::min<std::size_t>(tag.size(), le.size());
    std::copy_n(le.begin(), n, tag.begin());
    std::fill(tag.begin() + static_cast<std::ptrdiff_t>(n), tag.end(), std::byte{0});
}

bool crc32_tag_matches(ConstByteSpan data, ConstByteSpan tag) noexcept
{
    std::array<std::byte, 64> small{};
    Bytes large;
    ByteSpan expected;
    if (tag.size() <= small.size()) {
        expected = ByteSpan(small).first(tag.size());
    } else {
        large.resize(tag.size());
        expected = large;
    }
    crc32_tag(data, expected);
    return std::equal(expected.begin(), expected.end(), tag.begin(), tag.end());
}

} // namespace aeadfde
