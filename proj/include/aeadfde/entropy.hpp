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
#include <mutex>
#include <random>

#include "aeadfde/bytes.hpp"

namespace aeadfde {

/// Source of IV bytes for random-IV suites. Implementations are safe to share
/// between concurrent writers. fill() throws Errc::entropy_unavailable rather
/// than returning weak bytes.
class EntropySource {
public:
    virtual ~EntropySource() = default;
    virtual void fill(ByteSpan out) = 0;
};

/// Kernel CSPRNG via getrandom(2). Fails instead of blocking while the pool
/// is not initialized.
class SystemEntropy final : public EntropySource {
public:
    void fill(ByteSpan out) override;
};

/// Seeded, reproducible stream for tests and crash-sweep replay. Not secure.
class DeterministicEntropy final : public EntropySource {
public:
    explicit DeterministicEntropy(std::uint64_t seed) : engine_(seed) {}
    void fill(ByteSpan out) override;

private:
    std::mutex mutex_;
    std::mt19937_64 engine_;
};

} // namespace aeadfde
