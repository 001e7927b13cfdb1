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

#include "aeadfde/error.hpp"

#include "aeadfde/bytes.hpp"

namespace aeadfde {

std::string_view errc_name(Errc code) noexcept
{
    switch (code) {
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::out_of_range: return "out-of-range";
    case Errc::too_small: return "too-small";
    case Errc::io_error: return "io-error";
    case Errc::journal_full: return "journal-full";
    case Errc::corrupt_journal: return "corrupt-journal";
    case Errc::bad_magic: return "bad-magic";
    case Errc::bad_version: return "bad-version";
    case Errc::geometry_mismatch: return "geometry-mismatch";
    case Errc::unformatted: return "unformatted";
    case Errc::integrity_violation: return "integrity-violation";
    case Errc::integrity_unformatted: return "integrity-unformatted";
    case Errc::wrong_key_length: return "wrong-key-length";
    case Errc::config_mismatch: return "config-mismatch";
    case Errc::entropy_unavailable: return "entropy-unavailable";
    case Errc::invalid_target: return "invalid-target";
    case Errc::parse_error: return "parse-error";
    }
    return "unknown";
}

Error::Error(Errc code, const std::string& what, std::optional<std::uint64_t> sector)
    : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code), sector_(sector)
{
}

std::string to_hex(ConstByteSpan bytes)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        const auto v = std::to_integer<unsigned>(b);
        out.push_back(digits[v >> 4]);
        out.push_back(digits[v & 0xF]);
    }
    return out;
}

Bytes from_hex(std::string_view hex)
{
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    if (hex.size() % 2 != 0) {
        throw Error(Errc::parse_error, "odd-length hex string");
    }
    Bytes out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const int hi = nibble(hex[2 * i]);
        const int lo = nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) {
            throw Error(Errc::parse_error, "invalid hex digit");
        }
        out[i] = static_cast<std::byte>(hi << 4 | lo);
    }
    return out;
}

} // namespace aeadfde
