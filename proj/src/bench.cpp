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

#include "aeadfde/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "aeadfde/error.hpp"

namespace aeadfde {

namespace {

using json = nlohmann::json;

constexpr std::uint64_t metadata_area_bytes = 1u << 20;
constexpr std::uint64_t small_file_flush_every = 16;

struct JobCounters {
    std::uint64_t read_ops = 0;
    std::uint64_t write_ops = 0;
    std::uint64_t read_bytes = 0;
    std::uint64_t write_bytes = 0;
};

std::mt19937_64 job_rng(std::uint64_t seed, std::uint32_t job)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), job};
    return std::mt19937_64(seq);
}

class Job {
public:
    Job(BlockDevice& device, const WorkloadSpec& spec, std::uint32_t index, std::uint64_t ops)
        : device_(device), spec_(spec), index_(index), ops_(ops), rng_(job_rng(spec.seed, index)),
          buffer_(spec.block_size), blocks_(device.sector_count() * device.sector_size() / spec.block_size),
          sectors_per_block_(spec.block_size / device.sector_size())
    {
        for (auto& b : buffer_) {
            b = static_cast<std::byte>(rng_());
        }
    }

    JobCounters run()
    {
        switch (spec_.kind) {
        case WorkloadKind::linear_read:
        case WorkloadKind::linear_write: linear(); break;
        case WorkloadKind::mixed_random: mixed(); break;
        case WorkloadKind::small_files: small_files(); break;
        }
        return counters_;
    }

private:
    void read_block(std::uint64_t block)
    {
        device_.read(block * sectors_per_block_, buffer_);
        ++counters_.read_ops;
        counters_.read_bytes += buffer_.size();
    }

    void write_block(std::uint64_t block)
    {
        device_.write(block * sectors_per_block_, buffer_);
        ++counters_.write_ops;
        counters_.write_bytes += buffer_.size();
    }

    void linear()
    {
        // Each job sweeps its own stripe, wrapping when the budget exceeds it.
        const auto stripe = std::max<std::uint64_t>(1, blocks_ / spec_.parallel_jobs);
        const auto base = std::min<std::uint64_t>(index_ * stripe, blocks_ - 1);
        const auto span = std::min(stripe, blocks_ - base);
        for (std::uint64_t i = 0; i < ops_; ++i) {
            const auto block = base + i % span;
            if (spec_.kind == WorkloadKind::linear_read) {
                read_block(block);
            } else {
                write_block(block);
            }
        }
    }

    void mixed()
    {
        std::uniform_int_distribution<std::uint64_t> where(0, blocks_ - 1);
        std::bernoulli_distribution is_read(spec_.read_fraction);
        for (std::uint64_t i = 0; i < ops_; ++i) {
            const auto block = where(rng_);
            if (is_read(rng_)) {
                read_block(block);
            } else {
                write_block(block);
            }
        }
    }

    void small_files()
    {
        const auto meta_blocks = std::clamp<std::uint64_t>(metadata_area_bytes / spec_.block_size, 1, blocks_);
        std::uniform_int_distribution<std::uint64_t> file_at(0, blocks_ - 1);
        std::uniform_int_distribution<std::uint64_t> meta_at(0, meta_blocks - 1);
        std::uniform_int_distribution<std::uint64_t> file_len(1, 4);
        std::uint64_t done = 0;
        std::uint64_t files = 0;
        while (done < ops_) {
            const auto first = file_at(rng_);
            const auto len = std::min({file_len(rng_), blocks_ - first, ops_ - done});
            for (std::uint64_t b = 0; b < len; ++b) {
                write_block(first + b);
            }
            done += len;
            if (done < ops_) {
                write_block(meta_at(rng_));
                ++done;
            }
            if (done < ops_) {
                read_block(meta_at(rng_));
                ++done;
            }
            if (++files % small_file_flush_every == 0) {
                device_.flush();
            }
        }
    }

    BlockDevice& device_;
    const WorkloadSpec& spec_;
    std::uint32_t index_;
    std::uint64_t ops_;
    std::mt19937_64 rng_;
    Bytes buffer_;
    std::uint64_t blocks_;
    std::uint64_t sectors_per_block_;
    JobCounters counters_;
};

json spec_json(const WorkloadSpec& spec)
{
    return json{{"kind", workload_name(spec.kind)},       {"block_size", spec.block_size},
                {"read_fraction", spec.read_fraction},    {"parallel_jobs", spec.parallel_jobs},
                {"queue_depth", spec.queue_depth},        {"byte_budget", spec.byte_budget},
                {"seed", spec.seed}};
}

std::string fixed(double v, int precision)
{
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(precision);
    out << v;
    return out.str();
}

} // namespace

std::string_view workload_name(WorkloadKind kind) noexcept
{
    switch (kind) {
    case WorkloadKind::linear_read: return "linear_read";
    case WorkloadKind::linear_write: return "linear_write";
    case WorkloadKind::mixed_random: return "mixed_random";
    case WorkloadKind::small_files: return "small_files";
    }
    return "unknown";
}

WorkloadKind workload_from_name(std::string_view name)
{
    for (auto k : {WorkloadKind::linear_read, WorkloadKind::linear_write, WorkloadKind::mixed_random,
                   WorkloadKind::small_files}) {
        if (workload_name(k) == name) {
            return k;
        }
    }
    throw Error(Errc::parse_error, "unknown workload '" + std::string(name) + "'");
}

WorkloadSpec WorkloadSpec::linear_read()
{
    WorkloadSpec s;
    s.kind = WorkloadKind::linear_read;
    s.read_fraction = 1.0;
    return s;
}

WorkloadSpec WorkloadSpec::linear_write()
{
    WorkloadSpec s;
    s.kind = WorkloadKind::linear_write;
    return s;
}

WorkloadSpec WorkloadSpec::mixed_random()
{
    WorkloadSpec s;
    s.kind = WorkloadKind::mixed_random;
    s.block_size = 8192;
    s.read_fraction = 0.7;
    s.parallel_jobs = 16;
    s.queue_depth = 16;
    return s;
}

WorkloadSpec WorkloadSpec::small_files()
{
    WorkloadSpec s;
    s.kind = WorkloadKind::small_files;
    s.parallel_jobs = 4;
    return s;
}

void WorkloadSpec::validate(std::uint32_t device_sector_size) const
{
    if (block_size == 0 || device_sector_size == 0 || block_size % device_sector_size != 0) {
        throw Error(Errc::invalid_argument,
                    "block size " + std::to_string(block_size) + " is not a multiple of the sector size");
    }
    if (parallel_jobs == 0 || queue_depth == 0) {
        throw Error(Errc::invalid_argument, "jobs and queue depth must be positive");
    }
    if (!(read_fraction >= 0.0 && read_fraction <= 1.0)) {
        throw Error(Errc::invalid_argument, "read fraction must lie in [0, 1]");
    }
}

std::string spec_to_json(const WorkloadSpec& spec)
{
    return spec_json(spec).dump();
}

WorkloadSpec spec_from_json(std::string_view text)
{
    WorkloadSpec spec;
    try {
        const auto j = json::parse(text);
        if (!j.is_object()) {
            throw Error(Errc::parse_error, "workload spec must be a JSON object");
        }
        if (j.contains("kind")) spec.kind = workload_from_name(j.at("kind").get<std::string>());
        if (j.contains("block_size")) spec.block_size = j.at("block_size").get<std::uint32_t>();
        if (j.contains("read_fraction")) spec.read_fraction = j.at("read_fraction").get<double>();
        if (j.contains("parallel_jobs")) spec.parallel_jobs = j.at("parallel_jobs").get<std::uint32_t>();
        if (j.contains("queue_depth")) spec.queue_depth = j.at("queue_depth").get<std::uint32_t>();
        if (j.contains("byte_budget")) spec.byte_budget = j.at("byte_budget").get<std::uint64_t>();
        if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw Error(Errc::parse_error, std::string("workload spec: ") + e.what());
    }
    return spec;
}

double ThroughputReport::read_mib_s() const noexcept
{
    return seconds > 0 ? static_cast<double>(read_bytes) / (1 << 20) / seconds : 0.0;
}

double ThroughputReport::write_mib_s() const noexcept
{
    return seconds > 0 ? static_cast<double>(write_bytes) / (1 << 20) / seconds : 0.0;
}

ThroughputReport run_workload(BlockDevice& device, const WorkloadSpec& spec, const StackIdentity& stack)
{
    spec.validate(device.sector_size());
    const auto device_bytes = device.sector_count() * device.sector_size();
    if (device_bytes < spec.block_size) {
        throw Error(Errc::invalid_argument, "device smaller than one block");
    }

    ThroughputReport report;
    report.spec = spec;
    report.stack = stack;

    const auto total_ops = spec.byte_budget / spec.block_size;
    std::vector<JobCounters> counters(spec.parallel_jobs);
    std::mutex error_mutex;
    std::atomic<bool> failed{false};

    const auto start = std::chrono::steady_clock::now();
    std::vector<std::thread> threads;
    threads.reserve(spec.parallel_jobs);
    for (std::uint32_t j = 0; j < spec.parallel_jobs; ++j) {
        const auto ops = total_ops / spec.parallel_jobs + (j < total_ops % spec.parallel_jobs ? 1 : 0);
        threads.emplace_back([&, j, ops] {
            Job job(device, spec, j, ops);
            try {
                counters[j] = job.run();
            } catch (const Error& e) {
                std::lock_guard lock(error_mutex);
                if (!failed.exchange(true)) {
                    report.error = e.what();
                }
            }
        });
    }
    for (auto& t : threads) {
        t.join();
    }
    try {
        device.flush();
    } catch (const Error& e) {
        if (!failed.exchange(true)) {
            report.error = e.what();
        }
    }
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.aborted = failed.load();
    for (const auto& c : counters) {
        report.read_ops += c.read_ops;
        report.write_ops += c.write_ops;
        report.read_bytes += c.read_bytes;
        report.write_bytes += c.write_bytes;
    }
    return report;
}

std::string report_tsv(const std::vector<ThroughputReport>& reports)
{
    std::ostringstream out;
    out << "suite\tjournal\tworkload\tblock_size\tjobs\tdepth\tseed\tread_ops\twrite_ops\tseconds\tread_mib_s\t"
           "write_mib_s\tstatus\n";
    for (const auto& r : reports) {
        out << (r.stack.suite.empty() ? "-" : r.stack.suite) << '\t' << (r.stack.journal ? "on" : "off") << '\t'
            << workload_name(r.spec.kind) << '\t' << r.spec.block_size << '\t' << r.spec.parallel_jobs << '\t'
            << r.spec.queue_depth << '\t' << r.spec.seed << '\t' << r.read_ops << '\t' << r.write_ops << '\t'
            << fixed(r.seconds, 3) << '\t' << fixed(r.read_mib_s(), 1) << '\t' << fixed(r.write_mib_s(), 1) << '\t'
            << (r.aborted ? "aborted" : "ok") << '\n';
    }
    return out.str();
}

std::string report_json(const std::vector<ThroughputReport>& reports)
{
    json arr = json::array();
    for (const auto& r : reports) {
        json j{{"spec", spec_json(r.spec)},
               {"stack",
                {{"suite", r.stack.suite},
                 {"journal", r.stack.journal},
                 {"encryption_sector_size", r.stack.encryption_sector_size}}},
               {"read_ops", r.read_ops},
               {"write_ops", r.write_ops},
               {"read_bytes", r.read_bytes},
               {"write_bytes", r.write_bytes},
               {"seconds", r.seconds},
               {"read_mib_s", r.read_mib_s()},
               {"write_mib_s", r.write_mib_s()},
               {"aborted", r.aborted}};
        if (r.aborted) {
            j["error"] = r.error;
        }
        arr.push_back(std::move(j));
    }
    return arr.dump(2);
}

BenchStack make_bench_stack(std::shared_ptr<BackingStore> backing, const CipherSuite* suite, bool journal,
                            std::uint32_t sector_size, std::uint64_t seed)
{
    BenchStack stack;
    stack.backing = backing;
    stack.identity.journal = journal;
    stack.identity.encryption_sector_size = sector_size;
    if (suite == nullptr) {
        stack.identity.suite = "raw";
        stack.identity.journal = false;
        stack.device = std::make_unique<RawBlockDevice>(std::move(backing), sector_size);
        return stack;
    }
    stack.identity.suite = std::string(suite->name);
    if (!suite->needs_metastore()) {
        stack.identity.journal = false;
    }
    StackOptions opts;
    opts.sector_size = sector_size;
    opts.journal = journal;
    stack.lower = format_lower(std::move(backing), *suite, opts);

    auto entropy = std::make_shared<DeterministicEntropy>(seed);
    Bytes key(suite->master_key_size);
    entropy->fill(key);

    DeviceConfig cfg;
    cfg.suite = suite;
    cfg.master_key = std::move(key);
    cfg.lower = stack.lower;
    cfg.entropy = entropy;
    stack.device = std::make_unique<CryptDevice>(std::move(cfg));
    return stack;
}

} // namespace aeadfde
