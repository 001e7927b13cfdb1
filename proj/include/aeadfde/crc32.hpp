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

#include "aeadfde/bytes.hpp"

namespace aeadfde {

/// CRC-32 (IEEE 802.3, reflected, polynomial 0xEDB88320).
std::uint32_t crc32(ConstByteSpan data, std::uint32_t seed = 0) noexcept;

/// Standalone-mode tag: CRC-32 little-endian in the first four bytes (or its
/// low bytes when the tag is shorter), zeros in the remainder.
void crc32_tag(ConstByteSpan data, ByteSpan tag) noexcept;
bool crc32_tag_matches(ConstByteSpan data, ConstByteSpan tag) noexcept;

} // namespace aeadfde
