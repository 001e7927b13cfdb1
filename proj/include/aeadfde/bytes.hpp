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

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace aeadfde {

using Bytes = std::vector<std::byte>;
using ByteSpan = std::span<std::byte>;
using ConstByteSpan = std::span<const std::byte>;

template <typename T>
    requires std::is_unsigned_v<T>
constexpr void store_le(ByteSpan out, T value) noexcept
{
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out[i] = static_cast<std::byte>(value >> (8 * i));
    }
}

template <typename T>
    requires std::is_unsigned_v<T>
constexpr T load_le(ConstByteSpan in) noexcept
{
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        value |= static_cast<T>(std::to_integer<T>(in[i])) << (8 * i);
    }
    return value;
}

inline bool all_equal(ConstByteSpan bytes, std::byte value) noexcept
{
    return std::all_of(bytes.begin(), bytes.end(), [value](std::byte b) { return b == value; });
}

inline ConstByteSpan as_bytes(std::string_view text) noexcept
{
    return {reinterpret_cast<const std::byte*>(text.data()), text.size()};
}

inline const unsigned char* as_uchar(ConstByteSpan bytes) noexcept
{
    return reinterpret_cast<const unsigned char*>(bytes.data());
}

inline unsigned char* as_uchar(ByteSpan bytes) noexcept
{
    return reinterpret_cast<unsigned char*>(bytes.data());
}

std::string to_hex(ConstByteSpan bytes);
Bytes from_hex(std::string_view hex);

} // namespace aeadfde
