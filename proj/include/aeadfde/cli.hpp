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

#include <iosfwd>
#include <string>
#include <vector>

namespace aeadfde::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_failure = 1;
/// An integrity violation was observed (the EILSEQ of a kernel device).
inline constexpr int exit_integrity = 2;

/// Runs one command line (without the program name):
///
///   format     IMAGE [--suite S] [--sector-size N] [--tag-size N]
///              [--journal-sectors N] [--no-journal] [--size BYTES]
///   info       IMAGE
///   verify     IMAGE [--suite S --key-file F]
///   scrub-pass IMAGE --suite S --key-file F
///   read       IMAGE --sector N [--count N] [--output FILE] [--suite S --key-file F]
///   write      IMAGE --sector N --input FILE [--suite S --key-file F]
///   corrupt    IMAGE --plan FILE [--snapshot FILE]
///   bench      IMAGE [--suite S] [--workload W] [--budget-bytes N] [--seed N] [--no-journal]
///
/// Without --suite the image is a standalone CRC metastore. Every command
/// accepts --machine for JSON output. Keys are read from files only.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace aeadfde::cli
