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
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "aeadfde/backing.hpp"
#include "aeadfde/cryptdev.hpp"
#include "aeadfde/sectorcrypt.hpp"

namespace aeadfde {

enum class WorkloadKind {
    linear_read,
    linear_write,
    mixed_random,
    /// Many small file writes, each followed by an update to a hot metadata
    /// area and a read of it, with periodic flushes.
    small_files,
};

std::string_view workload_name(WorkloadKind kind) noexcept;
/// Throws Errc::parse_error.
WorkloadKind workload_from_name(std::string_view name);

inline constexpr std::uint64_t default_byte_budget = 256ull << 20;

struct WorkloadSpec {
    WorkloadKind kind = WorkloadKind::linear_write;
    std::uint32_t block_size = 4096;
    double read_fraction = 0.0;
    std::uint32_t parallel_jobs = 1;
    /// Recorded for reproduction; submission is synchronous per job.
    std::uint32_t queue_depth = 1;
    /// Total bytes moved by all jobs together.
    std::uint64_t byte_budget = default_byte_budget;
    std::uint64_t seed = 1;

    static WorkloadSpec linear_read();
    static WorkloadSpec linear_write();
    /// 8 KiB blocks, 70% reads, 16 jobs at depth 16.
    static WorkloadSpec mixed_random();
    static WorkloadSpec small_files();

    /// Throws Errc::invalid_argument for a zero or misaligned block size,
    /// zero jobs, or a read fraction outside [0, 1].
    void validate(std::uint32_t device_sector_size) const;

    friend bool operator==(const WorkloadSpec&, const WorkloadSpec&) = default;
};

std::string spec_to_json(const WorkloadSpec& spec);
/// Missing fields keep their defaults. Throws Errc::parse_error.
WorkloadSpec spec_from_json(std::string_view text);

/// Identity of the stack under test, echoed into reports.
struct StackIdentity {
    std::string suite;
    bool journal = false;
    std::uint32_t encryption_sector_size = 512;
};

struct ThroughputReport {
    WorkloadSpec spec;
    StackIdentity stack;
    std::uint64_t read_ops = 0;
    std::uint64_t write_ops = 0;
    std::uint64_t read_bytes = 0;
    std::uint64_t write_bytes = 0;
    double seconds = 0.0;
    /// Set when an I/O or integrity error stopped the run; counts are partial.
    bool aborted = false;
    std::string error;

    double read_mib_s() const noexcept;
    double write_mib_s() const noexcept;
};

/// Runs `spec` against `device` with parallel_jobs threads. Offsets depend
/// on the seed and job index only, so op counts are reproducible. Reads need
/// initialized sectors on authenticated stacks.
ThroughputReport run_workload(BlockDevice& device, const WorkloadSpec& spec, const StackIdentity& stack = {});

/// Tab-separated, one header line and one line per report.
std::string report_tsv(const std::vector<ThroughputReport>& reports);
/// JSON array with specs and seeds for reproduction.
std::string report_json(const std::vector<ThroughputReport>& reports);

/// Freshly formatted stack over `backing`. A null suite pointer gives the raw
/// backing adapter. Random IVs come from a seeded stream.
struct BenchStack {
    std::shared_ptr<BackingStore> backing;
    std::shared_ptr<SectorStore> lower;
    std::unique_ptr<BlockDevice> device;
    StackIdentity identity;
};

BenchStack make_bench_stack(std::shared_ptr<BackingStore> backing, const CipherSuite* suite, bool journal,
                            std::uint32_t sector_size = 512, std::uint64_t seed = 1);

} // namespace aeadfde
