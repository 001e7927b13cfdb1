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

#include <cstddef>
#include <cstdint>
#include <vector>

#include "aeadfde/bytes.hpp"

namespace aeadfde {

/// Length-preserving modes whose error propagation can be profiled. CBC is an
/// analysis reference only and is never offered as a suite.
enum class PropagationMode { xts, cbc };

/// Half-open plaintext byte range [begin, end).
struct ByteRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    friend bool operator==(const ByteRange&, const ByteRange&) = default;
};

/// Encrypts `plaintext` as sector `sector` (plain64 tweak or IV), flips
/// ciphertext bit `flip_bit`, decrypts, and returns the maximal runs of
/// plaintext bytes that differ from the original.
///
/// `key` is 64 bytes for XTS and 32 bytes for CBC.
std::vector<ByteRange> propagation_profile(PropagationMode mode, ConstByteSpan key, std::uint64_t sector,
                                           ConstByteSpan plaintext, std::size_t flip_bit);

/// Maximal runs of bytes where `a` and `b` differ. Sizes must match.
std::vector<ByteRange> differing_ranges(ConstByteSpan a, ConstByteSpan b);

/// Fraction of differing bits between equally sized buffers.
double hamming_ratio(ConstByteSpan a, ConstByteSpan b);

} // namespace aeadfde
