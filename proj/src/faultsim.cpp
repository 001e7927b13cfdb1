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

#include "aeadfde/faultsim.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <sstream>

#include "aeadfde/crc32.hpp"
#include "aeadfde/error.hpp"
#include "aeadfde/superblock.hpp"

namespace aeadfde {

namespace {

constexpr std::array<std::pair<FaultKind, std::string_view>, 7> kind_names{{
    {FaultKind::bit_flip_data, "bit_flip_data"},
    {FaultKind::bit_flip_meta, "bit_flip_meta"},
    {FaultKind::tamper, "tamper"},
    {FaultKind::sector_swap, "sector_swap"},
    {FaultKind::snapshot_replay_full, "snapshot_replay_full"},
    {FaultKind::snapshot_replay_sector, "snapshot_replay_sector"},
    {FaultKind::torn_write, "torn_write"},
}};

std::uint64_t parse_u64(std::string_view key, std::string_view value)
{
    std::uint64_t out = 0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc{} || ptr != end || value.empty()) {
        throw Error(Errc::parse_error, "bad value for " + std::string(key) + ": '" + std::string(value) + "'");
    }
    return out;
}

void check_extent(const BackingStore& backing, const ByteExtent& e)
{
    if (e.offset + e.length > backing.size()) {
        throw Error(Errc::invalid_target, "target lies beyond the backing store");
    }
}

void copy_extents(BackingStore& backing, MutationLog& log, const std::vector<ByteExtent>& extents,
                  ConstByteSpan source)
{
    for (const auto& e : extents) {
        log.record(backing, e.offset, e.length);
        backing.write(e.offset, source.subspan(e.offset, e.length));
    }
}

Bytes read_extents(BackingStore& backing, const std::vector<ByteExtent>& extents)
{
    Bytes out;
    for (const auto& e : extents) {
        const auto at = out.size();
        out.resize(at + e.length);
        backing.read(e.offset, ByteSpan(out).subspan(at, e.length));
    }
    return out;
}

void write_extents(BackingStore& backing, MutationLog& log, const std::vector<ByteExtent>& extents,
                   ConstByteSpan bytes)
{
    std::size_t at = 0;
    for (const auto& e : extents) {
        log.record(backing, e.offset, e.length);
        backing.write(e.offset, bytes.subspan(at, e.length));
        at += e.length;
    }
}

void flip_bit(BackingStore& backing, MutationLog& log, const std::vector<ByteExtent>& extents, std::uint64_t bit)
{
    auto byte = bit / 8;
    for (const auto& e : extents) {
        if (byte < e.length) {
            log.record(backing, e.offset + byte, 1);
            std::array<std::byte, 1> b{};
            backing.read(e.offset + byte, b);
            b[0] ^= std::byte{static_cast<unsigned char>(1u << (bit % 8))};
            backing.write(e.offset + byte, b);
            return;
        }
        byte -= e.length;
    }
    throw Error(Errc::invalid_target, "bit " + std::to_string(bit) + " lies outside the target");
}

} // namespace

std::string_view fault_kind_name(FaultKind kind) noexcept
{
    for (const auto& [k, name] : kind_names) {
        if (k == kind) {
            return name;
        }
    }
    return "unknown";
}

FaultKind fault_kind_from_name(std::string_view name)
{
    for (const auto& [k, n] : kind_names) {
        if (n == name) {
            return k;
        }
    }
    throw Error(Errc::parse_error, "unknown fault kind '" + std::string(name) + "'");
}

std::string_view fault_class_name(FaultClass c) noexcept
{
    switch (c) {
    case FaultClass::silent_corruption: return "silent-corruption";
    case FaultClass::tampering: return "tampering";
    case FaultClass::relocation: return "relocation";
    case FaultClass::replay: return "replay";
    case FaultClass::crash: return "crash";
    }
    return "unknown";
}

FaultClass FaultPlan::fault_class() const noexcept
{
    switch (kind) {
    case FaultKind::bit_flip_data:
    case FaultKind::bit_flip_meta: return FaultClass::silent_corruption;
    case FaultKind::tamper: return FaultClass::tampering;
    case FaultKind::sector_swap: return FaultClass::relocation;
    case FaultKind::snapshot_replay_full:
    case FaultKind::snapshot_replay_sector: return FaultClass::replay;
    case FaultKind::torn_write: return FaultClass::crash;
    }
    return FaultClass::crash;
}

std::string format_plan(const FaultPlan& plan)
{
    std::ostringstream out;
    out << fault_kind_name(plan.kind);
    switch (plan.kind) {
    case FaultKind::bit_flip_data:
    case FaultKind::bit_flip_meta: out << " sector=" << plan.sector << " bit=" << plan.bit; break;
    case FaultKind::tamper: out << " sector=" << plan.sector; break;
    case FaultKind::sector_swap: out << " sector=" << plan.sector << " other=" << plan.other; break;
    case FaultKind::snapshot_replay_full:
    case FaultKind::snapshot_replay_sector:
        out << " sector=" << plan.sector << " coherent=" << (plan.coherent ? 1 : 0);
        break;
    case FaultKind::torn_write: out << " offset=" << plan.offset; break;
    }
    out << " seed=" << plan.seed;
    return out.str();
}

FaultPlan parse_plan(std::string_view line)
{
    std::istringstream in{std::string(line)};
    std::string token;
    if (!(in >> token)) {
        throw Error(Errc::parse_error, "empty fault plan");
    }
    FaultPlan plan;
    plan.kind = fault_kind_from_name(token);
    std::vector<std::string> seen;
    while (in >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos) {
            throw Error(Errc::parse_error, "expected key=value, got '" + token + "'");
        }
        const std::string_view key = std::string_view(token).substr(0, eq);
        const std::string_view value = std::string_view(token).substr(eq + 1);
        if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
            throw Error(Errc::parse_error, "duplicate plan key '" + std::string(key) + "'");
        }
        seen.emplace_back(key);
        if (key == "sector") {
            plan.sector = parse_u64(key, value);
        } else if (key == "other") {
            plan.other = parse_u64(key, value);
        } else if (key == "bit") {
            plan.bit = parse_u64(key, value);
        } else if (key == "offset") {
            plan.offset = parse_u64(key, value);
        } else if (key == "seed") {
            plan.seed = parse_u64(key, value);
        } else if (key == "coherent") {
            const auto v = parse_u64(key, value);
            if (v > 1) {
                throw Error(Errc::parse_error, "coherent must be 0 or 1");
            }
            plan.coherent = v == 1;
        } else {
            throw Error(Errc::parse_error, "unknown plan key '" + std::string(key) + "'");
        }
    }
    return plan;
}

std::string format_plans(const std::vector<FaultPlan>& plans)
{
    std::string out;
    for (const auto& p : plans) {
        out += format_plan(p);
        out += '\n';
    }
    return out;
}

std::vector<FaultPlan> parse_plans(std::string_view text)
{
    std::vector<FaultPlan> plans;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            plans.push_back(parse_plan(line));
        } catch (const Error& e) {
            throw Error(Errc::parse_error, "line " + std::to_string(number) + ": " + e.what());
        }
    }
    return plans;
}

FaultGeometry FaultGeometry::probe(BackingStore& backing, std::uint32_t raw_sector_size, std::uint32_t group)
{
    FaultGeometry g;
    g.group = group == 0 ? 1 : group;
    Bytes head(512);
    if (backing.size() >= head.size()) {
        backing.read(0, head);
        try {
            const auto sb = Superblock::decode(head);
            g.layout = layout_for_capacity(sb.total_sectors, sb.sector_size, sb.tag_size, sb.journal_sectors);
            g.lower_sector_size = sb.sector_size;
            g.lower_sectors = g.layout->data_sectors;
            g.crc_tags = sb.has(sb_standalone_crc);
            return g;
        } catch (const Error&) {
            // No superblock: raw sectors.
        }
    }
    g.lower_sector_size = raw_sector_size;
    g.lower_sectors = backing.size() / raw_sector_size;
    return g;
}

SectorLocation locate(const FaultGeometry& geometry, std::uint64_t sector)
{
    if (sector >= geometry.device_sectors()) {
        throw Error(Errc::invalid_target,
                    "sector " + std::to_string(sector) + " beyond " + std::to_string(geometry.device_sectors()),
                    sector);
    }
    SectorLocation loc;
    const std::uint64_t ss = geometry.lower_sector_size;
    for (std::uint32_t i = 0; i < geometry.group; ++i) {
        const auto lower = sector * geometry.group + i;
        if (geometry.layout) {
            const auto addr = logical_to_physical(*geometry.layout, lower);
            loc.data.push_back({addr.data_sector * ss, ss});
            loc.meta.push_back({addr.meta_sector * ss + addr.tag_offset, geometry.layout->tag_size});
        } else {
            loc.data.push_back({lower * ss, ss});
        }
    }
    return loc;
}

void MutationLog::record(BackingStore& backing, std::uint64_t offset, std::uint64_t length)
{
    Entry e{offset, Bytes(length)};
    backing.read(offset, e.previous);
    entries_.push_back(std::move(e));
}

void MutationLog::revert(BackingStore& backing) const
{
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
        backing.write(it->offset, it->previous);
    }
}

MutationLog inject(const FaultPlan& plan, BackingStore& backing, const FaultGeometry& geometry,
                   ConstByteSpan snapshot)
{
    MutationLog log;
    const auto needs_snapshot = [&] {
        if (snapshot.size() != backing.size()) {
            throw Error(Errc::invalid_target, "replay needs a snapshot of the whole backing store");
        }
    };

    switch (plan.kind) {
    case FaultKind::bit_flip_data: {
        const auto loc = locate(geometry, plan.sector);
        flip_bit(backing, log, loc.data, plan.bit);
        break;
    }
    case FaultKind::bit_flip_meta: {
        if (geometry.tag_size() == 0) {
            throw Error(Errc::invalid_target, "device keeps no metadata");
        }
        const auto loc = locate(geometry, plan.sector);
        flip_bit(backing, log, {loc.meta.front()}, plan.bit);
        break;
    }
    case FaultKind::tamper: {
        const auto loc = locate(geometry, plan.sector);
        std::mt19937_64 rng(plan.seed);
        for (std::size_t i = 0; i < loc.data.size(); ++i) {
            Bytes forged(loc.data[i].length);
            for (auto& b : forged) {
                b = static_cast<std::byte>(rng());
            }
            check_extent(backing, loc.data[i]);
            log.record(backing, loc.data[i].offset, forged.size());
            backing.write(loc.data[i].offset, forged);
            if (geometry.crc_tags) {
                Bytes tag(loc.meta[i].length);
                crc32_tag(forged, tag);
                log.record(backing, loc.meta[i].offset, tag.size());
                backing.write(loc.meta[i].offset, tag);
            }
        }
        break;
    }
    case FaultKind::sector_swap: {
        if (plan.sector == plan.other) {
            throw Error(Errc::invalid_target, "cannot swap a sector with itself", plan.sector);
        }
        const auto a = locate(geometry, plan.sector);
        const auto b = locate(geometry, plan.other);
        const auto a_data = read_extents(backing, a.data);
        const auto b_data = read_extents(backing, b.data);
        const auto a_meta = read_extents(backing, a.meta);
        const auto b_meta = read_extents(backing, b.meta);
        write_extents(backing, log, a.data, b_data);
        write_extents(backing, log, b.data, a_data);
        write_extents(backing, log, a.meta, b_meta);
        write_extents(backing, log, b.meta, a_meta);
        break;
    }
    case FaultKind::snapshot_replay_sector: {
        needs_snapshot();
        const auto loc = locate(geometry, plan.sector);
        copy_extents(backing, log, loc.data, snapshot);
        if (plan.coherent) {
            copy_extents(backing, log, loc.meta, snapshot);
        }
        break;
    }
    case FaultKind::snapshot_replay_full: {
        needs_snapshot();
        locate(geometry, plan.sector);
        if (plan.coherent) {
            copy_extents(backing, log, {{0, backing.size()}}, snapshot);
            break;
        }
        for (std::uint64_t s = 0; s < geometry.device_sectors(); ++s) {
            copy_extents(backing, log, locate(geometry, s).data, snapshot);
        }
        break;
    }
    case FaultKind::torn_write:
        throw Error(Errc::invalid_target, "torn writes run through the crash driver, not inject()");
    }
    return log;
}

FaultPlan random_plan(FaultKind kind, const FaultGeometry& geometry, std::mt19937_64& rng)
{
    const auto sectors = geometry.device_sectors();
    if (sectors == 0 || (kind == FaultKind::sector_swap && sectors < 2)) {
        throw Error(Errc::invalid_target, "device too small for a " + std::string(fault_kind_name(kind)) + " plan");
    }
    std::uniform_int_distribution<std::uint64_t> pick(0, sectors - 1);
    FaultPlan plan;
    plan.kind = kind;
    plan.sector = pick(rng);
    plan.seed = rng();
    switch (kind) {
    case FaultKind::bit_flip_data:
        plan.bit = std::uniform_int_distribution<std::uint64_t>(0, geometry.sector_bytes() * 8 - 1)(rng);
        break;
    case FaultKind::bit_flip_meta:
        if (geometry.tag_size() == 0) {
            throw Error(Errc::invalid_target, "device keeps no metadata");
        }
        plan.bit = std::uniform_int_distribution<std::uint64_t>(0, std::uint64_t{geometry.tag_size()} * 8 - 1)(rng);
        break;
    case FaultKind::sector_swap:
        do {
            plan.other = pick(rng);
        } while (plan.other == plan.sector);
        break;
    case FaultKind::torn_write:
        plan.sector = 0;
        plan.offset = rng() % (1u << 20);
        break;
    default: break;
    }
    return plan;
}

std::string_view observation_name(Observation o) noexcept
{
    switch (o) {
    case Observation::integrity_violation: return "integrity-violation";
    case Observation::clean_read: return "clean-read";
    case Observation::garbage_read: return "garbage-read";
    }
    return "unknown";
}

Protection protection_of(const CipherSuite& suite) noexcept
{
    if (suite.authenticated) {
        return Protection::authenticated;
    }
    return suite.tag_size > 0 ? Protection::checksum : Protection::none;
}

bool expected_detection(Protection protection, const FaultPlan& plan) noexcept
{
    const auto c = plan.fault_class();
    const bool incoherent_replay = c == FaultClass::replay && !plan.coherent;
    switch (protection) {
    case Protection::none: return false;
    case Protection::checksum: return c == FaultClass::silent_corruption || incoherent_replay;
    case Protection::authenticated: return c != FaultClass::crash && (c != FaultClass::replay || incoherent_replay);
    }
    return false;
}

std::vector<std::uint64_t> affected_sectors(const FaultPlan& plan)
{
    if (plan.kind == FaultKind::sector_swap) {
        return {plan.sector, plan.other};
    }
    return {plan.sector};
}

DetectionVerdict classify(BlockDevice& device, const FaultPlan& plan, Protection protection,
                          const LegitimacyCheck& legitimate)
{
    DetectionVerdict verdict;
    verdict.expected_detected = expected_detection(protection, plan);
    verdict.observed = Observation::clean_read;
    verdict.sector = plan.sector;
    bool garbage_seen = false;
    Bytes buffer(device.sector_size());
    for (const auto sector : affected_sectors(plan)) {
        try {
            device.read(sector, buffer);
        } catch (const Error& e) {
            if (!is_integrity_error(e.code())) {
                throw;
            }
            verdict.observed = Observation::integrity_violation;
            verdict.sector = sector;
            return verdict;
        }
        if (!garbage_seen && !legitimate(sector, buffer)) {
            garbage_seen = true;
            verdict.observed = Observation::garbage_read;
            verdict.sector = sector;
        }
    }
    return verdict;
}

bool crash_after_bytes(const std::shared_ptr<MemoryBacking>& image, std::uint64_t crash_after,
                       const std::function<void(const std::shared_ptr<BackingStore>&)>& action)
{
    auto crashing = std::make_shared<CrashingBacking>(image, crash_after);
    try {
        action(crashing);
    } catch (const SimulatedCrash&) {
        return true;
    }
    return crashing->crashed();
}

std::uint64_t measure_write_bytes(const MemoryBacking& image,
                                  const std::function<void(const std::shared_ptr<BackingStore>&)>& action)
{
    auto copy = std::make_shared<MemoryBacking>(image.snapshot());
    auto counting = std::make_shared<CrashingBacking>(copy);
    action(counting);
    return counting->bytes_written();
}

std::shared_ptr<MemoryBacking> torn_write(const FaultPlan& plan, const MemoryBacking& base,
                                          const std::function<void(const std::shared_ptr<BackingStore>&)>& action)
{
    if (plan.kind != FaultKind::torn_write) {
        throw Error(Errc::invalid_target, "not a torn_write plan");
    }
    auto image = std::make_shared<MemoryBacking>(base.snapshot());
    crash_after_bytes(image, plan.offset, action);
    return image;
}

} // namespace aeadfde
