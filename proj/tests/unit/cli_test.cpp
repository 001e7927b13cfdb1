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

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "aeadfde/cli.hpp"
#include "aeadfde/cryptdev.hpp"
#include "aeadfde/error.hpp"
#include "aeadfde/faultsim.hpp"
#include "support/helpers.hpp"

using namespace aeadfde;
using nlohmann::json;
using testing_support::TempDir;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args)
{
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::dispatch(args, out, err);
    return {code, out.str(), err.str()};
}

void put_file(const std::filesystem::path& p, ConstByteSpan data)
{
    std::ofstream f(p, std::ios::binary);
    f.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

Bytes get_file(const std::filesystem::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::string s((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return Bytes(reinterpret_cast<const std::byte*>(s.data()), reinterpret_cast<const std::byte*>(s.data()) + s.size());
}

class CliTest : public ::testing::Test {
protected:
    TempDir dir;
    std::string image = dir.file("disk.img").string();
    std::string key = dir.file("key.bin").string();

    void write_key(std::size_t n)
    {
        put_file(key, testing_support::pattern(n, 17, 3));
    }

    std::unique_ptr<CryptDevice> library_device(const CipherSuite& s)
    {
        DeviceConfig cfg;
        cfg.suite = &s;
        cfg.master_key = get_file(key);
        cfg.lower = open_lower(std::make_shared<FileBacking>(image), s);
        return std::make_unique<CryptDevice>(cfg);
    }
};

} // namespace

TEST_F(CliTest, FormatReportsCombinedTagSize)
{
    const auto r = run({"format", image, "--suite", "aes256-xts-hmac-sha256-random", "--sector-size", "512",
                        "--size", "4194304", "--machine"});
    ASSERT_EQ(r.code, cli::exit_ok) << r.err;
    const auto j = json::parse(r.out);
    EXPECT_EQ(j["tag_size"], 48);
    EXPECT_EQ(j["tags_per_sector"], 10);
    EXPECT_NEAR(j["region_overhead_percent"].get<double>(), 100.0 / 11.0, 1e-9);

    const auto info = run({"info", image});
    EXPECT_EQ(info.code, cli::exit_ok);
    EXPECT_NE(info.out.find("tag_size                48"), std::string::npos) << info.out;
    EXPECT_NE(info.out.find("region_overhead_percent 9.09"), std::string::npos) << info.out;

    // Same geometry through the library.
    const auto sb = MetaStore::open(std::make_shared<FileBacking>(image))->superblock();
    EXPECT_EQ(sb.tag_size, 48u);
    EXPECT_EQ(j["data_sectors"].get<std::uint64_t>(), sb.data_sectors);
}

TEST_F(CliTest, VerifyTamperedStandaloneImage)
{
    ASSERT_EQ(run({"format", image, "--size", "2097152"}).code, cli::exit_ok);
    EXPECT_EQ(run({"verify", image}).code, cli::exit_ok);

    const auto plan = dir.file("plan.txt");
    std::ofstream(plan) << "# one flipped bit\nbit_flip_data sector=21 bit=7\n";
    ASSERT_EQ(run({"corrupt", image, "--plan", plan.string()}).code, cli::exit_ok);

    const auto r = run({"verify", image});
    EXPECT_EQ(r.code, cli::exit_integrity);
    EXPECT_NE(r.out.find("integrity violation at sector 21"), std::string::npos) << r.out;
    const auto m = json::parse(run({"verify", image, "--machine"}).out);
    EXPECT_EQ(m["failing"], json::array({21}));

    // Library route on the same image.
    EXPECT_EQ(MetaStore::open(std::make_shared<FileBacking>(image))->verify_all(), std::vector<std::uint64_t>{21});
    const auto read = run({"read", image, "--sector", "21"});
    EXPECT_EQ(read.code, cli::exit_integrity);
}

TEST_F(CliTest, EncryptedReadWriteAndTamper)
{
    const auto& s = suite(SuiteId::aes256_gcm_random);
    write_key(s.master_key_size);
    ASSERT_EQ(run({"format", image, "--suite", s.name.data(), "--size", "2097152"}).code, cli::exit_ok);
    const std::vector<std::string> crypt = {"--suite", std::string(s.name), "--key-file", key};

    auto with = [&](std::vector<std::string> a) {
        a.insert(a.end(), crypt.begin(), crypt.end());
        return run(a);
    };
    EXPECT_EQ(with({"read", image, "--sector", "4"}).code, cli::exit_integrity);
    EXPECT_EQ(with({"verify", image}).code, cli::exit_integrity);
    const auto scrub = with({"scrub-pass", image, "--machine"});
    ASSERT_EQ(scrub.code, cli::exit_ok) << scrub.err;
    EXPECT_EQ(with({"verify", image}).code, cli::exit_ok);

    const auto payload = testing_support::stamped(4, 1, 700);
    put_file(dir.file("in.bin"), payload);
    ASSERT_EQ(with({"write", image, "--sector", "4", "--input", dir.file("in.bin").string()}).code, cli::exit_ok);
    ASSERT_EQ(with({"read", image, "--sector", "4", "--count", "2", "--output", dir.file("out.bin").string()}).code,
              cli::exit_ok);
    auto expect = payload;
    expect.resize(1024);
    EXPECT_EQ(get_file(dir.file("out.bin")), expect);
    EXPECT_EQ(library_device(s)->encrypted_read(4, 2), expect);

    const auto plan = dir.file("plan.txt");
    std::ofstream(plan) << "tamper sector=5 seed=1\n";
    ASSERT_EQ(run({"corrupt", image, "--plan", plan.string()}).code, cli::exit_ok);
    const auto v = with({"verify", image});
    EXPECT_EQ(v.code, cli::exit_integrity);
    EXPECT_NE(v.out.find("integrity violation at sector 5"), std::string::npos);
    EXPECT_EQ(library_device(s)->verify_all(), std::vector<std::uint64_t>{5});
}

TEST_F(CliTest, CorruptThenVerifyMatchesExpectations)
{
    const auto& s = suite(SuiteId::aes256_xts_hmac_sha256_random);
    write_key(s.master_key_size);
    ASSERT_EQ(run({"format", image, "--suite", s.name.data(), "--size", "2097152"}).code, cli::exit_ok);
    const std::vector<std::string> crypt = {"--suite", std::string(s.name), "--key-file", key};
    auto with = [&](std::vector<std::string> a) {
        a.insert(a.end(), crypt.begin(), crypt.end());
        return run(a);
    };
    ASSERT_EQ(with({"scrub-pass", image}).code, cli::exit_ok);
    const auto base = get_file(image);

    struct Case {
        const char* plan;
        bool detected;
    };
    const Case cases[] = {
        {"bit_flip_data sector=3 bit=11", true},
        {"bit_flip_meta sector=3 bit=130", true},
        {"tamper sector=8 seed=4", true},
        {"sector_swap sector=2 other=9", true},
    };
    for (const auto& c : cases) {
        put_file(image, base);
        std::ofstream(dir.file("p.txt")) << c.plan << '\n';
        ASSERT_EQ(run({"corrupt", image, "--plan", dir.file("p.txt").string()}).code, cli::exit_ok);
        const auto cli_detected = with({"verify", image}).code == cli::exit_integrity;
        EXPECT_EQ(cli_detected, c.detected) << c.plan;
        const auto plan = parse_plan(c.plan);
        EXPECT_EQ(expected_detection(Protection::authenticated, plan), c.detected);
        EXPECT_EQ(!library_device(s)->verify_all().empty(), c.detected) << c.plan;
    }

    // Coherent sector replay is not detected.
    put_file(image, base);
    const auto snap = dir.file("snap.img");
    put_file(snap, base);
    put_file(dir.file("in.bin"), testing_support::stamped(6, 2, 512));
    ASSERT_EQ(with({"write", image, "--sector", "6", "--input", dir.file("in.bin").string()}).code, cli::exit_ok);
    std::ofstream(dir.file("p.txt")) << "snapshot_replay_sector sector=6\n";
    ASSERT_EQ(run({"corrupt", image, "--plan", dir.file("p.txt").string(), "--snapshot", snap.string()}).code,
              cli::exit_ok);
    EXPECT_EQ(with({"verify", image}).code, cli::exit_ok);
    EXPECT_TRUE(all_equal(library_device(s)->encrypted_read(6, 1), std::byte{0}));
}

TEST_F(CliTest, UsageErrors)
{
    EXPECT_EQ(run({}).code, cli::exit_failure);
    EXPECT_EQ(run({"frobnicate"}).code, cli::exit_failure);
    EXPECT_EQ(run({"info", dir.file("missing.img").string()}).code, cli::exit_failure);
    ASSERT_EQ(run({"format", image, "--suite", "aes256-gcm-random", "--size", "1048576"}).code, cli::exit_ok);
    // Provider-mode images need the suite and key.
    EXPECT_EQ(run({"verify", image}).code, cli::exit_failure);
    EXPECT_EQ(run({"verify", image, "--suite", "aes256-gcm-random"}).code, cli::exit_failure);
    write_key(31);
    EXPECT_EQ(run({"verify", image, "--suite", "aes256-gcm-random", "--key-file", key}).code, cli::exit_failure);
    EXPECT_EQ(run({"verify", image, "--suite", "no-such-suite", "--key-file", key}).code, cli::exit_failure);
    EXPECT_EQ(run({"read", image}).code, cli::exit_failure);
}

TEST_F(CliTest, BenchEmitsReport)
{
    const auto r = run({"bench", image, "--suite", "aes256-xts-plain64", "--size", "4194304", "--workload",
                        "mixed_random", "--budget-bytes", "1048576", "--jobs", "2", "--machine"});
    ASSERT_EQ(r.code, cli::exit_ok) << r.err;
    const auto j = json::parse(r.out);
    EXPECT_EQ(j[0]["stack"]["suite"], "aes256-xts-plain64");
    EXPECT_EQ(j[0]["spec"]["kind"], "mixed_random");
    EXPECT_GT(j[0]["read_ops"].get<std::uint64_t>(), 0u);
}
