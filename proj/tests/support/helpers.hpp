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
#include <filesystem>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "aeadfde/bytes.hpp"
#include "aeadfde/sectorcrypt.hpp"
#include "oracles/reference_crypto.hpp"

namespace testing_support {

inline aeadfde::Bytes to_bytes(const oracle::Buf& b)
{
    aeadfde::Bytes out(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) out[i] = static_cast<std::byte>(b[i]);
    return out;
}

inline oracle::Buf to_buf(aeadfde::ConstByteSpan b)
{
    oracle::Buf out(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) out[i] = static_cast<std::uint8_t>(b[i]);
    return out;
}

inline aeadfde::Bytes random_bytes(std::mt19937_64& rng, std::size_t n)
{
    aeadfde::Bytes out(n);
    for (auto& b : out) b = static_cast<std::byte>(rng());
    return out;
}

inline aeadfde::Bytes pattern(std::size_t n, unsigned mul = 1, unsigned add = 0)
{
    aeadfde::Bytes out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<std::byte>((i * mul + add) & 0xff);
    return out;
}

/// Sector content that names itself: sector number and generation in the
/// first 16 bytes, then a stream derived from both.
inline aeadfde::Bytes stamped(std::uint64_t sector, std::uint64_t generation, std::size_t size)
{
    aeadfde::Bytes out(size);
    aeadfde::store_le<std::uint64_t>(out, sector);
    aeadfde::store_le<std::uint64_t>(aeadfde::ByteSpan(out).subspan(8), generation);
    std::mt19937_64 rng(sector * 1000003u + generation);
    for (std::size_t i = 16; i < size; ++i) out[i] = static_cast<std::byte>(rng());
    return out;
}

inline std::string sha256_hex(aeadfde::ConstByteSpan b)
{
    return oracle::hex(oracle::sha256(to_buf(b)));
}

class TempDir {
public:
    TempDir()
    {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("aeadfde-test-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::filesystem::path file(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

} // namespace testing_support

namespace aeadfde {

inline void PrintTo(SuiteId id, std::ostream* os)
{
    *os << suite(id).name;
}

} // namespace aeadfde
