#include "doctest.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "ybcav/cli.hpp"
#include "ybcav/config.hpp"
#include "ybcav/errors.hpp"
#include "ybcav/output.hpp"

using namespace ybcav;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("ybcav-test-" + std::to_string(std::rand()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_SUITE("config_cli") {

TEST_CASE("empty config produces pure defaults with a full audit") {
    const RunConfig cfg = parse_config_text("{}");
    CHECK(cfg.cavity.quality_factor == 5300.0);
    CHECK(cfg.site.depth_nm == 0.0);
    CHECK(cfg.master_seed == 1);
    CHECK(!cfg.audit.empty());
    for (const auto& entry : cfg.audit) {
        CHECK(entry.defaulted);
        const bool known = entry.provenance == "device" ||
                           entry.provenance == "derived" ||
                           entry.provenance == "placeholder" ||
                           entry.provenance == "plumbing";
        CHECK(known);
    }
    CHECK_NOTHROW(cfg.validate_all());
}

TEST_CASE("file values override defaults and are flagged in the audit") {
    const RunConfig cfg = parse_config_text(
        R"({"cavity": {"quality_factor": 6000}, "master_seed": 9})");
    CHECK(cfg.cavity.quality_factor == 6000.0);
    CHECK(cfg.master_seed == 9);
    CHECK(cfg.cavity.nu0_GHz == 304505.0); // untouched default

    bool found = false;
    for (const auto& entry : cfg.audit) {
        if (entry.field == "cavity.quality_factor") {
            found = true;
            CHECK_FALSE(entry.defaulted);
            CHECK(entry.value.find("6000") != std::string::npos);
            CHECK(entry.provenance == "device");
        }
        if (entry.field == "noise.tau_c_s") {
            CHECK(entry.defaulted);
        }
    }
    CHECK(found);
}

TEST_CASE("unknown keys and wrong types are rejected with their path") {
    CHECK_THROWS_WITH_AS(parse_config_text(R"({"cavity": {"q": 5300}})"),
                         doctest::Contains("cavity.q"), config_error);
    CHECK_THROWS_AS(parse_config_text(R"({"nonsense": 1})"), config_error);
    CHECK_THROWS_AS(
        parse_config_text(R"({"cavity": {"quality_factor": "high"}})"),
        config_error);
    CHECK_THROWS_AS(parse_config_text("not json at all"), config_error);
    CHECK_THROWS_AS(parse_config_text(R"({"cavity": 5})"), config_error);
}

TEST_CASE("resolved config round-trips") {
    const RunConfig cfg = parse_config_text(
        R"({"site": {"depth_nm": 42.5}, "g2": {"emitters": 2},
            "protocol": {"ramsey_delays_s": [0.0, 1e-9, 2e-9, 3e-9]}})");
    const std::string text = resolved_config_json(cfg);
    const RunConfig back = parse_config_text(text);
    CHECK(back.equivalent(cfg));
    CHECK(back.site.depth_nm == 42.5);
    CHECK(back.g2.emitters == 2);
    CHECK(back.protocol.ramsey_delays_s.size() == 4);
}

TEST_CASE("custom transitions survive the round trip") {
    const RunConfig cfg = parse_config_text(R"({"levels": {"transitions": [
        {"name": "A", "lower": "g1", "upper": "e0", "dipole_axis": "c",
         "frequency_GHz": 304600.0},
        {"name": "C", "lower": "g0", "upper": "e0", "dipole_axis": "a",
         "frequency_GHz": 304598.0}]}})");
    REQUIRE(cfg.levels.transitions.size() == 2);
    CHECK(cfg.levels.transitions[0].frequency_GHz == 304600.0);
    const RunConfig back = parse_config_text(resolved_config_json(cfg));
    CHECK(back.equivalent(cfg));
}

TEST_CASE("validate_all covers every block") {
    RunConfig cfg = parse_config_text("{}");
    cfg.g2.emitters = 3;
    CHECK_THROWS_AS(cfg.validate_all(), config_error);
    cfg = parse_config_text("{}");
    cfg.reflection.coupling_ratio = 1.5;
    CHECK_THROWS_AS(cfg.validate_all(), config_error);
    cfg = parse_config_text("{}");
    cfg.bragg.n_high = 0.0;
    CHECK_THROWS_AS(cfg.validate_all(), config_error);
    cfg = parse_config_text("{}");
    cfg.calibration.tolerance = 0.0;
    CHECK_THROWS_AS(cfg.validate_all(), config_error);
}

TEST_CASE("number formatting and csv assembly") {
    CHECK(format_number(0.0) == "0");
    CHECK(format_number(1.0) == "1");
    CHECK(format_number(0.25) == "0.25");
    CHECK(format_number(1e-9) == "1e-09");
    CsvTable table;
    table.header = {"a", "b"};
    table.rows = {{1.0, 2.0}, {3.0, 4.5}};
    CHECK(csv_text(table) == "a,b\n1,2\n3,4.5\n");
    table.rows.push_back({1.0});
    CHECK_THROWS_AS(csv_text(table), config_error);
}

TEST_CASE("execute writes the artifact trio") {
    TempDir dir;
    RunConfig cfg = parse_config_text("{}");
    cfg.out_dir = dir.path.string();
    const RunArtifacts arts = execute("purcell", cfg);
    CHECK(fs::exists(arts.csv_path));
    CHECK(fs::exists(arts.summary_path));
    CHECK(fs::exists(arts.config_path));

    const auto summary = nlohmann::json::parse(slurp(arts.summary_path));
    CHECK(summary.at("subcommand") == "purcell");
    CHECK(summary.at("seed") == 1);
    CHECK(summary.contains("config_hash"));
    CHECK(summary.at("derived").at("f_max").get<double>() ==
          doctest::Approx(236.9128).epsilon(1e-6));
    CHECK(summary.at("audit").is_array());

    // the resolved config re-parses to an equivalent run
    const RunConfig resolved = parse_config_file(arts.config_path);
    CHECK(resolved.equivalent(cfg));
}

TEST_CASE("repeat runs are byte-identical; new seeds are not") {
    TempDir dir;
    RunConfig cfg = parse_config_text("{}");
    cfg.out_dir = dir.path.string();
    const RunArtifacts first = execute("ple", cfg);
    const std::string csv1 = slurp(first.csv_path);
    const std::string sum1 = slurp(first.summary_path);
    const RunArtifacts second = execute("ple", cfg);
    CHECK(slurp(second.csv_path) == csv1);
    CHECK(slurp(second.summary_path) == sum1);

    cfg.master_seed = 2;
    const RunArtifacts third = execute("ple", cfg);
    CHECK(slurp(third.csv_path) != csv1);
}

TEST_CASE("unknown subcommand is a config error") {
    RunConfig cfg = parse_config_text("{}");
    CHECK_THROWS_AS(execute("frobnicate", cfg), config_error);
    CHECK(std::find(subcommand_names().begin(), subcommand_names().end(),
                    "frobnicate") == subcommand_names().end());
    CHECK(subcommand_names().size() == 12);
}

TEST_CASE("run_cli maps errors to exit codes") {
    TempDir dir;
    RunConfig cfg = parse_config_text("{}");
    cfg.out_dir = dir.path.string();
    std::ostringstream log;
    CHECK(run_cli("purcell", cfg, log) == 0);
    CHECK(log.str().find("purcell") != std::string::npos);

    cfg.g2.emitters = 7; // invalid; validate_all runs for every subcommand
    CHECK(run_cli("purcell", cfg, log) == 2);
}

TEST_CASE("write_text_file reports unwritable paths") {
    CHECK_THROWS_AS(
        write_text_file("/nonexistent-dir-xyz/file.txt", "data"),
        config_error);
}

} // TEST_SUITE
