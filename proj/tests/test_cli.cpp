#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "test_util.hpp"

using cvstest::TempDir;
using cvstest::read_file;
using cvstest::write_file;
using nlohmann::json;

#ifndef CVS_CLI_PATH
#error "CVS_CLI_PATH must point at the cvs-select binary"
#endif

namespace {

struct CliResult {
    int exit_code;
    std::string out;
    std::string err;
};

CliResult run_cli(const TempDir& dir, const std::string& args) {
    const std::string out_path = dir.file("_stdout.txt").string();
    const std::string err_path = dir.file("_stderr.txt").string();
    const std::string command =
        std::string(CVS_CLI_PATH) + " " + args + " > " + out_path + " 2> " + err_path;
    const int rc = std::system(command.c_str());
    CliResult result;
    result.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    result.out = read_file(out_path);
    result.err = read_file(err_path);
    return result;
}

void write_pool(const TempDir& dir, int n, const std::string& name = "manifest.jsonl") {
    std::string manifest;
    for (int i = 0; i < n; ++i) {
        char line[160];
        std::snprintf(line, sizeof(line),
                      R"({"id":"s%04d","image":"img%d.png","question":"what is %d?","answer":"item %d"})",
                      i, i % 7, i, i);
        manifest += line;
        manifest += "\n";
    }
    write_file(dir.file(name), manifest);
}

// Table where sample i passes the alignment filter iff i < pass_count.
void write_mock_table(const TempDir& dir, int n, int pass_count,
                      const std::string& name = "mock.jsonl") {
    std::string table;
    for (int i = 0; i < n; ++i) {
        char id[16];
        std::snprintf(id, sizeof(id), "s%04d", i);
        char lines[512];
        if (i < pass_count) {
            std::snprintf(lines, sizeof(lines),
                          "{\"id\":\"%s\",\"context\":\"full\",\"p_yes\":%.6f,\"p_no\":0.05}\n"
                          "{\"id\":\"%s\",\"context\":\"prior\",\"p_yes\":0.3,\"p_no\":0.4}\n",
                          id, 0.5 + 0.0004 * i, id);
        } else {
            std::snprintf(lines, sizeof(lines),
                          "{\"id\":\"%s\",\"context\":\"full\",\"p_yes\":0.2,\"p_no\":0.7}\n"
                          "{\"id\":\"%s\",\"context\":\"prior\",\"p_yes\":0.6,\"p_no\":0.2}\n",
                          id, id);
        }
        table += lines;
    }
    write_file(dir.file(name), table);
}

}  // namespace

TEST_CASE("score-select-stats happy path with the mock evaluator") {
    TempDir dir;
    write_pool(dir, 50);
    write_mock_table(dir, 50, 30);

    auto score = run_cli(dir, "score --manifest " + dir.file("manifest.jsonl").string() +
                                  " --cache " + dir.file("cache.jsonl").string() +
                                  " --mock-table " + dir.file("mock.jsonl").string());
    CHECK(score.exit_code == 0);
    CHECK(score.out.find("scored=50 cached=0 failed=0") != std::string::npos);

    auto select = run_cli(dir, "select --manifest " + dir.file("manifest.jsonl").string() +
                                   " --cache " + dir.file("cache.jsonl").string() + " --out " +
                                   dir.file("subset.jsonl").string() +
                                   " --strategy low --budget-ratio 0.10");
    CHECK(select.exit_code == 0);

    auto report = json::parse(read_file(dir.file("subset.jsonl.selection.json")));
    CHECK(report["strategy"] == "low");
    CHECK(report["budget_requested"] == 5);
    CHECK(report["budget_effective"] == 5);
    CHECK(report["pool_size"] == 50);
    CHECK(report["filtered_pool_size"] == 30);
    CHECK(report["retention_fraction"] == 0.6);
    CHECK(report["rng_seed"].is_null());

    auto stats = run_cli(dir, "stats --cache " + dir.file("cache.jsonl").string() + " --out " +
                                  dir.file("stats").string());
    CHECK(stats.exit_code == 0);
    CHECK(stats.out.find("retention fraction") != std::string::npos);
    auto summary = json::parse(read_file(dir.file("stats") / "summary.json"));
    CHECK(summary["pool_size"] == 50);
    CHECK(summary["retention_fraction"] == 0.6);
    CHECK(read_file(dir.file("stats") / "histogram_cvs_yes.txt").find("bin_left") !=
          std::string::npos);
}

TEST_CASE("score rerun is idempotent and resumes") {
    TempDir dir;
    write_pool(dir, 50);
    write_pool(dir, 20, "prefix.jsonl");
    write_mock_table(dir, 50, 50);

    auto first = run_cli(dir, "score --manifest " + dir.file("prefix.jsonl").string() +
                                  " --cache " + dir.file("cache.jsonl").string() +
                                  " --mock-table " + dir.file("mock.jsonl").string());
    CHECK(first.exit_code == 0);
    CHECK(first.out.find("scored=20") != std::string::npos);

    auto second = run_cli(dir, "score --manifest " + dir.file("manifest.jsonl").string() +
                                   " --cache " + dir.file("cache.jsonl").string() +
                                   " --mock-table " + dir.file("mock.jsonl").string());
    CHECK(second.exit_code == 0);
    CHECK(second.out.find("scored=30 cached=20 failed=0") != std::string::npos);

    auto third = run_cli(dir, "score --manifest " + dir.file("manifest.jsonl").string() +
                                  " --cache " + dir.file("cache.jsonl").string() +
                                  " --mock-table " + dir.file("mock.jsonl").string());
    CHECK(third.exit_code == 0);
    CHECK(third.out.find("scored=0 cached=50 failed=0") != std::string::npos);
}

TEST_CASE("configuration errors exit with code 2 before any work") {
    TempDir dir;
    write_pool(dir, 3);

    auto bad_endpoint = run_cli(dir, "score --manifest " + dir.file("manifest.jsonl").string() +
                                         " --cache " + dir.file("cache.jsonl").string() +
                                         " --model judge --endpoint not-a-uri");
    CHECK(bad_endpoint.exit_code == 2);
    CHECK(bad_endpoint.err.find("http://") != std::string::npos);
    CHECK_FALSE(std::filesystem::exists(dir.file("cache.jsonl")));

    auto no_evaluator = run_cli(dir, "score --manifest " + dir.file("manifest.jsonl").string() +
                                         " --cache " + dir.file("cache.jsonl").string());
    CHECK(no_evaluator.exit_code == 2);

    auto same_path = run_cli(dir, "score --manifest " + dir.file("manifest.jsonl").string() +
                                      " --cache " + dir.file("manifest.jsonl").string() +
                                      " --mock-table " + dir.file("manifest.jsonl").string());
    CHECK(same_path.exit_code == 2);

    auto bad_strategy = run_cli(dir, "select --manifest " + dir.file("manifest.jsonl").string() +
                                         " --cache " + dir.file("cache.jsonl").string() +
                                         " --out " + dir.file("o.jsonl").string() +
                                         " --strategy sideways --budget-count 1");
    CHECK(bad_strategy.exit_code == 2);

    auto no_budget = run_cli(dir, "select --manifest " + dir.file("manifest.jsonl").string() +
                                      " --cache " + dir.file("cache.jsonl").string() + " --out " +
                                      dir.file("o.jsonl").string() + " --strategy low");
    CHECK(no_budget.exit_code == 2);

    auto bad_templates = run_cli(dir, "score --manifest " + dir.file("manifest.jsonl").string() +
                                          " --cache " + dir.file("cache.jsonl").string() +
                                          " --mock-table " + dir.file("mock.jsonl").string() +
                                          " --templates " + dir.file("absent.json").string());
    CHECK(bad_templates.exit_code == 2);
}

TEST_CASE("data errors exit with code 3") {
    TempDir dir;
    write_pool(dir, 5);
    write_mock_table(dir, 5, 5);

    // cache that covers only 2 of 5 ids
    write_pool(dir, 2, "partial.jsonl");
    auto seed = run_cli(dir, "score --manifest " + dir.file("partial.jsonl").string() +
                                 " --cache " + dir.file("cache.jsonl").string() +
                                 " --mock-table " + dir.file("mock.jsonl").string());
    REQUIRE(seed.exit_code == 0);

    auto strict = run_cli(dir, "select --manifest " + dir.file("manifest.jsonl").string() +
                                   " --cache " + dir.file("cache.jsonl").string() + " --out " +
                                   dir.file("o.jsonl").string() +
                                   " --strategy low --budget-count 2 --failure-policy strict");
    CHECK(strict.exit_code == 3);
    CHECK(strict.err.find("s0002") != std::string::npos);
    CHECK(strict.err.find("s0003") != std::string::npos);
    CHECK(strict.err.find("s0004") != std::string::npos);

    auto skip = run_cli(dir, "select --manifest " + dir.file("manifest.jsonl").string() +
                                 " --cache " + dir.file("cache.jsonl").string() + " --out " +
                                 dir.file("o.jsonl").string() +
                                 " --strategy low --budget-count 2 --failure-policy skip");
    CHECK(skip.exit_code == 0);

    auto malformed = run_cli(dir, "score --manifest " + dir.file("mock.jsonl").string() +
                                      " --cache " + dir.file("c2.jsonl").string() +
                                      " --mock-table " + dir.file("mock.jsonl").string());
    CHECK(malformed.exit_code == 3);

    auto empty_cache = run_cli(dir, "stats --cache " + dir.file("nocache.jsonl").string() +
                                        " --out " + dir.file("stats").string());
    CHECK(empty_cache.exit_code == 3);
}

TEST_CASE("stats folds in benchmark results when supplied") {
    TempDir dir;
    write_pool(dir, 10);
    write_mock_table(dir, 10, 6);
    run_cli(dir, "score --manifest " + dir.file("manifest.jsonl").string() + " --cache " +
                     dir.file("cache.jsonl").string() + " --mock-table " +
                     dir.file("mock.jsonl").string());

    write_file(dir.file("bench.jsonl"),
               R"({"benchmark":"gqa","subset_score":52.4,"full_score":50.0})"
               "\n");
    auto stats = run_cli(dir, "stats --cache " + dir.file("cache.jsonl").string() + " --out " +
                                  dir.file("stats").string() + " --benchmarks " +
                                  dir.file("bench.jsonl").string());
    CHECK(stats.exit_code == 0);
    auto summary = json::parse(read_file(dir.file("stats") / "summary.json"));
    CHECK(std::abs(summary["arp"]["value"].get<double>() - 104.8) <= 1e-9);

    write_file(dir.file("bad_bench.jsonl"), "{\"benchmark\":\"gqa\"}\n");
    auto bad = run_cli(dir, "stats --cache " + dir.file("cache.jsonl").string() + " --out " +
                                dir.file("stats2").string() + " --benchmarks " +
                                dir.file("bad_bench.jsonl").string());
    CHECK(bad.exit_code == 3);
    CHECK(bad.err.find("line 1") != std::string::npos);
}

TEST_CASE("export joins records with scores") {
    TempDir dir;
    write_pool(dir, 5);
    write_mock_table(dir, 5, 3);
    run_cli(dir, "score --manifest " + dir.file("manifest.jsonl").string() + " --cache " +
                     dir.file("cache.jsonl").string() + " --mock-table " +
                     dir.file("mock.jsonl").string());

    auto exported = run_cli(dir, "export --manifest " + dir.file("manifest.jsonl").string() +
                                     " --cache " + dir.file("cache.jsonl").string() + " --out " +
                                     dir.file("joined.jsonl").string());
    CHECK(exported.exit_code == 0);
    CHECK(exported.out.find("exported=5") != std::string::npos);

    std::istringstream lines(read_file(dir.file("joined.jsonl")));
    std::string line;
    int count = 0;
    while (std::getline(lines, line)) {
        auto obj = json::parse(line);
        CHECK(obj.contains("question"));
        CHECK(obj.contains("cvs_yes"));
        CHECK(obj["variant"] == "standard");
        ++count;
    }
    CHECK(count == 5);
}

TEST_CASE("selected subset preserves records and selection order") {
    TempDir dir;
    write_pool(dir, 20);
    write_mock_table(dir, 20, 20);
    run_cli(dir, "score --manifest " + dir.file("manifest.jsonl").string() + " --cache " +
                     dir.file("cache.jsonl").string() + " --mock-table " +
                     dir.file("mock.jsonl").string());
    // the mock table ramps p_yes_full upward, so LOW order is s0000, s0001, ...
    auto select = run_cli(dir, "select --manifest " + dir.file("manifest.jsonl").string() +
                                   " --cache " + dir.file("cache.jsonl").string() + " --out " +
                                   dir.file("subset.jsonl").string() +
                                   " --strategy low --budget-count 3");
    REQUIRE(select.exit_code == 0);
    std::istringstream lines(read_file(dir.file("subset.jsonl")));
    std::string line;
    std::vector<std::string> ids;
    while (std::getline(lines, line)) {
        ids.push_back(json::parse(line)["id"].get<std::string>());
    }
    CHECK(ids == std::vector<std::string>{"s0000", "s0001", "s0002"});
}
