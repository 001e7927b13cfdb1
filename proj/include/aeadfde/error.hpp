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
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace aeadfde {

enum class Errc {
    invalid_argument,
    out_of_range,
    too_small,
    io_error,
    journal_full,
    corrupt_journal,
    bad_magic,
    bad_version,
    geometry_mismatch,
    unformatted,
    integrity_violation,
    // Metadata still holds the format-time marker; the sector was never
    // written by the encryption layer.
    integrity_unformatted,
    wrong_key_length,
    config_mismatch,
    entropy_unavailable,
    invalid_target,
    parse_error,
};

std::string_view errc_name(Errc code) noexcept;

/// True for the two codes that mean "data failed verification" (the EILSEQ
/// class), as opposed to usage or I/O failures.
constexpr bool is_integrity_error(Errc code) noexcept
{
    return code == Errc::integrity_violation || code == Errc::integrity_unformatted;
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what, std::optional<std::uint64_t> sector = std::nullopt);

    Errc code() const noexcept { return code_; }

    /// First offending logical sector, set for integrity errors and range errors.
    std::optional<std::uint64_t> sector() const noexcept { return sector_; }

private:
    Errc code_;
    std::optional<std::uint64_t> sector_;
};

} // namespace aeadfde
