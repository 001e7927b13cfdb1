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

#include "aeadfde/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <utility>

#include <CLI11.hpp>
#include <json.hpp>

#include "aeadfde/bench.hpp"
#include "aeadfde/cryptdev.hpp"
#include "aeadfde/error.hpp"
#include "aeadfde/faultsim.hpp"
#include "aeadfde/layout.hpp"
#include "aeadfde/metastore.hpp"
#include "aeadfde/superblock.hpp"

namespace aeadfde::cli {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

struct Options {
    std::string image;
    std::string suite;
    std::string key_file;
    std::uint32_t sector_size = 512;
    std::uint32_t encryption_sector_size = 0;
    std::uint32_t tag_size = 4;
    std::optional<std::uint64_t> journal_sectors;
    bool no_journal = false;
    std::optional<std::uint64_t> size;
    std::uint64_t sector = 0;
    std::uint64_t count = 1;
    std::string input;
    std::string output;
    std::string plan;
    std::string snapshot;
    std::string workload = "linear_write";
    std::optional<std::uint64_t> budget_bytes;
    std::uint64_t seed = 1;
    std::optional<std::uint32_t> jobs;
    bool machine = false;
};

Bytes read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::io_error, "cannot read " + path);
    }
    Bytes out;
    std::transform(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>(), std::back_inserter(out),
                   [](char c) { return static_cast<std::byte>(c); });
    return out;
}

void write_file(const std::string& path, ConstByteSpan data)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) {
        throw Error(Errc::io_error, "cannot write " + path);
    }
}

std::shared_ptr<BackingStore> open_image(const Options& o)
{
    if (!fs::exists(o.image)) {
        throw Error(Errc::io_error, o.image + " does not exist");
    }
    return std::make_shared<FileBacking>(o.image);
}

const CipherSuite* selected_suite(const Options& o)
{
    return o.suite.empty() ? nullptr : &suite_by_name(o.suite);
}

Bytes load_key(const Options& o, const CipherSuite& s)
{
    if (s.master_key_size == 0) {
        return {};
    }
    if (o.key_file.empty()) {
        throw Error(Errc::invalid_argument, std::string(s.name) + " needs --key-file");
    }
    return read_file(o.key_file);
}

/// Encryption stack over an existing image, or the standalone metastore when
/// no suite is selected.
struct Opened {
    std::shared_ptr<SectorStore> lower;
    std::unique_ptr<BlockDevice> device;
    CryptDevice* crypt = nullptr;
};

Opened open_device(const Options& o)
{
    Opened d;
    auto backing = open_image(o);
    const auto* s = selected_suite(o);
    if (s == nullptr) {
        auto store = MetaStore::open(std::move(backing));
        if (!store->standalone()) {
            throw Error(Errc::invalid_argument, "provider-mode image needs --suite and --key-file");
        }
        d.lower = std::move(store);
        d.device = std::make_unique<StoreBlockDevice>(d.lower);
        return d;
    }
    d.lower = open_lower(std::move(backing), *s);
    DeviceConfig cfg;
    cfg.suite = s;
    cfg.master_key = load_key(o, *s);
    cfg.encryption_sector_size = o.encryption_sector_size;
    cfg.lower = d.lower;
    auto crypt = std::make_unique<CryptDevice>(std::move(cfg));
    d.crypt = crypt.get();
    d.device = std::move(crypt);
    return d;
}

std::string flag_names(std::uint32_t flags)
{
    std::string out;
    const std::pair<std::uint32_t, const char*> names[] = {{sb_journal_enabled, "journal"},
                                                           {sb_standalone_crc, "standalone-crc"},
                                                           {sb_formatted, "formatted"},
                                                           {sb_tags_initialized, "tags-initialized"}};
    for (const auto& [bit, name] : names) {
        if ((flags & bit) != 0) {
            out += out.empty() ? "" : ",";
            out += name;
        }
    }
    return out.empty() ? "none" : out;
}

json info_json(const Superblock& sb, const Layout& layout)
{
    return json{{"magic", "AEADFDE"},
                {"version", sb.version},
                {"sector_size", sb.sector_size},
                {"tag_size", sb.tag_size},
                {"total_sectors", sb.total_sectors},
                {"data_sectors", sb.data_sectors},
                {"journal_sectors", sb.journal_sectors},
                {"flags", sb.flags},
                {"flag_names", flag_names(sb.flags)},
                {"profile", std::string(integrity_profile_name)},
                {"tags_per_sector", layout.tags_per_sector},
                {"meta_sectors", layout.meta_sectors},
                {"overhead_percent", overhead_percent(layout.data_sectors, layout.meta_sectors)},
                {"region_overhead_percent", region_overhead_percent(sb.sector_size, sb.tag_size)}};
}

void print_info(std::ostream& out, const Options& o, const Superblock& sb, const Layout& layout)
{
    const auto j = info_json(sb, layout);
    if (o.machine) {
        out << j.dump(2) << '\n';
        return;
    }
    for (const char* key : {"magic", "version", "sector_size", "tag_size", "total_sectors", "data_sectors",
                            "journal_sectors", "flag_names", "profile", "tags_per_sector", "meta_sectors"}) {
        const auto& v = j.at(key);
        out << std::left << std::setw(24) << (std::string(key) == "flag_names" ? "flags" : key)
            << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
    }
    out << std::left << std::setw(24) << "overhead_percent" << std::fixed << std::setprecision(2)
        << j.at("overhead_percent").get<double>() << '\n';
    out << std::left << std::setw(24) << "region_overhead_percent" << std::fixed << std::setprecision(2)
        << j.at("region_overhead_percent").get<double>() << '\n';
    out.unsetf(std::ios::fixed);
}

int cmd_format(const Options& o, std::ostream& out)
{
    std::shared_ptr<BackingStore> backing;
    if (o.size) {
        backing = FileBacking::create(o.image, *o.size);
    } else {
        backing = open_image(o);
    }
    const auto* s = selected_suite(o);
    if (s != nullptr && !s->needs_metastore()) {
        if (o.machine) {
            out << json{{"suite", s->name}, {"metadata", false}}.dump(2) << '\n';
        } else {
            out << s->name << " keeps no per-sector metadata; nothing to format\n";
        }
        return exit_ok;
    }
    MetaFormatOptions fmt;
    fmt.sector_size = o.sector_size;
    fmt.tag_size = s != nullptr ? s->metadata_size() : o.tag_size;
    fmt.journal = !o.no_journal;
    fmt.journal_sectors = o.journal_sectors;
    fmt.standalone = s == nullptr;
    const auto sb = MetaStore::format(*backing, fmt);
    backing->flush();
    print_info(out, o, sb, layout_for_capacity(sb.total_sectors, sb.sector_size, sb.tag_size, sb.journal_sectors));
    return exit_ok;
}

int cmd_info(const Options& o, std::ostream& out)
{
    auto backing = open_image(o);
    Bytes head(512);
    if (backing->size() < head.size()) {
        throw Error(Errc::bad_magic, "image too small for a superblock");
    }
    backing->read(0, head);
    const auto sb = Superblock::decode(head);
    print_info(out, o, sb, layout_for_capacity(sb.total_sectors, sb.sector_size, sb.tag_size, sb.journal_sectors));
    return exit_ok;
}

int cmd_verify(const Options& o, std::ostream& out)
{
    auto d = open_device(o);
    std::vector<std::uint64_t> failing;
    std::uint64_t checked = 0;
    if (d.crypt != nullptr) {
        failing = d.crypt->verify_all();
        checked = d.crypt->sector_count();
    } else {
        auto* meta = dynamic_cast<MetaStore*>(d.lower.get());
        failing = meta->verify_all();
        checked = meta->sector_count();
    }
    if (o.machine) {
        out << json{{"sectors", checked}, {"failing", failing}}.dump(2) << '\n';
    } else {
        out << checked << " sectors checked, " << failing.size() << " failing\n";
        for (const auto s : failing) {
            out << "integrity violation at sector " << s << '\n';
        }
    }
    return failing.empty() ? exit_ok : exit_integrity;
}

int cmd_scrub(const Options& o, std::ostream& out)
{
    if (o.suite.empty()) {
        throw Error(Errc::invalid_argument, "scrub-pass needs --suite");
    }
    auto d = open_device(o);
    const auto written = d.crypt->reencrypt_format_pass();
    if (o.machine) {
        out << json{{"sectors", d.crypt->sector_count()}, {"initialized", written}}.dump(2) << '\n';
    } else {
        out << written << " of " << d.crypt->sector_count() << " sectors initialized\n";
    }
    return exit_ok;
}

int cmd_read(const Options& o, std::ostream& out)
{
    auto d = open_device(o);
    Bytes data(o.count * d.device->sector_size());
    d.device->read(o.sector, data);
    if (!o.output.empty()) {
        write_file(o.output, data);
    } else if (o.machine) {
        out << json{{"sector", o.sector}, {"count", o.count}, {"data", to_hex(data)}}.dump(2) << '\n';
    } else {
        const auto ss = d.device->sector_size();
        for (std::uint64_t i = 0; i < o.count; ++i) {
            out << (o.sector + i) << ' ' << to_hex(ConstByteSpan(data).subspan(i * ss, ss)) << '\n';
        }
    }
    return exit_ok;
}

int cmd_write(const Options& o, std::ostream& out)
{
    auto d = open_device(o);
    auto data = read_file(o.input);
    const auto ss = d.device->sector_size();
    const auto sectors = std::max<std::uint64_t>(1, (data.size() + ss - 1) / ss);
    data.resize(sectors * ss);
    d.device->write(o.sector, data);
    d.device->flush();
    if (o.machine) {
        out << json{{"sector", o.sector}, {"count", sectors}}.dump(2) << '\n';
    } else {
        out << sectors << " sectors written at " << o.sector << '\n';
    }
    return exit_ok;
}

int cmd_corrupt(const Options& o, std::ostream& out)
{
    auto backing = open_image(o);
    const auto text = read_file(o.plan);
    const auto plans = parse_plans(std::string_view(reinterpret_cast<const char*>(text.data()), text.size()));
    Bytes snapshot;
    if (!o.snapshot.empty()) {
        snapshot = read_file(o.snapshot);
    }
    const auto group = o.encryption_sector_size == 0 ? 1 : std::max(1u, o.encryption_sector_size / 512);
    const auto geometry = FaultGeometry::probe(*backing, 512, group);
    json log = json::array();
    for (const auto& plan : plans) {
        const auto mutation = inject(plan, *backing, geometry, snapshot);
        std::uint64_t bytes = 0;
        for (const auto& e : mutation.entries()) {
            bytes += e.previous.size();
        }
        if (o.machine) {
            log.push_back({{"plan", format_plan(plan)}, {"bytes", bytes}});
        } else {
            out << format_plan(plan) << ": " << bytes << " bytes rewritten\n";
        }
    }
    backing->flush();
    if (o.machine) {
        out << log.dump(2) << '\n';
    }
    return exit_ok;
}

int cmd_bench(const Options& o, std::ostream& out)
{
    std::shared_ptr<BackingStore> backing;
    if (o.size) {
        backing = FileBacking::create(o.image, *o.size);
    } else {
        backing = open_image(o);
    }
    const auto* s = selected_suite(o);
    auto stack = make_bench_stack(std::move(backing), s, !o.no_journal, o.sector_size, o.seed);

    WorkloadSpec spec;
    switch (workload_from_name(o.workload)) {
    case WorkloadKind::linear_read: spec = WorkloadSpec::linear_read(); break;
    case WorkloadKind::linear_write: spec = WorkloadSpec::linear_write(); break;
    case WorkloadKind::mixed_random: spec = WorkloadSpec::mixed_random(); break;
    case WorkloadKind::small_files: spec = WorkloadSpec::small_files(); break;
    }
    spec.seed = o.seed;
    if (o.budget_bytes) spec.byte_budget = *o.budget_bytes;
    if (o.jobs) spec.parallel_jobs = *o.jobs;

    if (spec.read_fraction > 0 || spec.kind == WorkloadKind::small_files) {
        if (auto* crypt = dynamic_cast<CryptDevice*>(stack.device.get())) {
            crypt->reencrypt_format_pass();
        }
    }
    const auto report = run_workload(*stack.device, spec, stack.identity);
    out << (o.machine ? report_json({report}) + "\n" : report_tsv({report}));
    if (report.aborted) {
        throw Error(Errc::io_error, "bench aborted: " + report.error);
    }
    return exit_ok;
}

void add_crypt_options(CLI::App* cmd, Options& o)
{
    cmd->add_option("--suite", o.suite, "Cipher suite name");
    cmd->add_option("--key-file", o.key_file, "File holding the raw master key");
    cmd->add_option("--encryption-sector-size", o.encryption_sector_size, "Sector size seen above the device");
}

} // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Authenticated sector encryption over a backing file", "aeadfde"};
    app.require_subcommand(1);
    Options o;

    const auto image = [&](CLI::App* cmd) {
        cmd->add_option("image", o.image, "Backing image file")->required();
        cmd->add_flag("--machine", o.machine, "JSON output");
        return cmd;
    };

    auto* format = image(app.add_subcommand("format", "Format an image"));
    format->add_option("--suite", o.suite, "Cipher suite the metadata is sized for");
    format->add_option("--sector-size", o.sector_size, "Sector size (512 or 4096)");
    format->add_option("--tag-size", o.tag_size, "Tag bytes per sector in standalone mode");
    format->add_option("--journal-sectors", o.journal_sectors, "Journal length in sectors");
    format->add_flag("--no-journal", o.no_journal, "Disable the data journal");
    format->add_option("--size", o.size, "Create or resize the image to this many bytes");

    auto* info = image(app.add_subcommand("info", "Print the superblock and layout"));

    auto* verify = image(app.add_subcommand("verify", "Check every sector"));
    add_crypt_options(verify, o);

    auto* scrub = image(app.add_subcommand("scrub-pass", "Initialize tags by re-encrypting every sector"));
    add_crypt_options(scrub, o);

    auto* read = image(app.add_subcommand("read", "Read sectors"));
    add_crypt_options(read, o);
    read->add_option("--sector", o.sector, "First sector")->required();
    read->add_option("--count", o.count, "Number of sectors");
    read->add_option("--output", o.output, "Write raw bytes to this file instead of hex");

    auto* write = image(app.add_subcommand("write", "Write a file's bytes at a sector"));
    add_crypt_options(write, o);
    write->add_option("--sector", o.sector, "First sector")->required();
    write->add_option("--input", o.input, "File to write, zero padded to whole sectors")->required();

    auto* corrupt = image(app.add_subcommand("corrupt", "Apply fault plans to an image"));
    corrupt->add_option("--plan", o.plan, "Fault plan file")->required();
    corrupt->add_option("--snapshot", o.snapshot, "Earlier image for replay plans");
    corrupt->add_option("--encryption-sector-size", o.encryption_sector_size, "Sector size seen above the device");

    auto* bench = image(app.add_subcommand("bench", "Format a fresh stack on the image and run a workload"));
    bench->add_option("--suite", o.suite, "Cipher suite; omit for the raw baseline");
    bench->add_option("--workload", o.workload, "linear_read, linear_write, mixed_random or small_files");
    bench->add_option("--budget-bytes", o.budget_bytes, "Bytes moved by all jobs together");
    bench->add_option("--seed", o.seed, "Workload and key seed");
    bench->add_option("--jobs", o.jobs, "Parallel jobs");
    bench->add_option("--sector-size", o.sector_size, "Sector size (512 or 4096)");
    bench->add_option("--size", o.size, "Create or resize the image to this many bytes");
    bench->add_flag("--no-journal", o.no_journal, "Disable the data journal");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_failure;
    }

    try {
        if (format->parsed()) return cmd_format(o, out);
        if (info->parsed()) return cmd_info(o, out);
        if (verify->parsed()) return cmd_verify(o, out);
        if (scrub->parsed()) return cmd_scrub(o, out);
        if (read->parsed()) return cmd_read(o, out);
        if (write->parsed()) return cmd_write(o, out);
        if (corrupt->parsed()) return cmd_corrupt(o, out);
        if (bench->parsed()) return cmd_bench(o, out);
    } catch (const Error& e) {
        err << "aeadfde: " << e.what() << '\n';
        return is_integrity_error(e.code()) ? exit_integrity : exit_failure;
    } catch (const std::exception& e) {
        err << "aeadfde: " << e.what() << '\n';
        return exit_failure;
    }
    return exit_failure;
}

} // namespace aeadfde::cli
