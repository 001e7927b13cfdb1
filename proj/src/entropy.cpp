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

#include "aeadfde/entropy.hpp"

#include <sys/random.h>

#include <cerrno>
#include <cstring>
#include <string>

#include "aeadfde/error.hpp"

namespace aeadfde {

void SystemEntropy::fill(ByteSpan out)
{
    std::size_t done = 0;
    while (done < out.size()) {
        const auto n = ::getrandom(out.data() + done, out.size() - done, GRND_NONBLOCK);
        if (n < 0) {
            if (errno == EINTR) continue;
            if (errno == EAGAIN) {
                throw Error(Errc::entropy_unavailable, "system RNG not yet initialized");
            }
            throw Error(Errc::entropy_unavailable, std::string("getrandom: ") + std::strerror(errno));
        }
        done += static_cast<std::size_t>(n);
    }
}

void DeterministicEntropy::fill(ByteSpan out)
{
    std::lock_guard lock(mutex_);
    std::size_t i = 0;
    while (i < out.size()) {
        auto word = engine_();
        for (int b = 0; b < 8 && i < out.size(); ++b, ++i) {
            out[i] = static_cast<std::byte>(word);
            word >>= 8;
        }
    }
}

} // namespace aeadfde
