#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <string>

#include "helpers.hpp"
#include "stanloop/io.hpp"
#include "stanloop/loop.hpp"
#include "stanloop/subprocess.hpp"

using namespace stanloop;

#ifndef STANLOOP_CLI
#error "STANLOOP_CLI must point at the built command line binary"
#endif

namespace {

subprocess::CommandResult cli(std::vector<std::string> args) {
    args.insert(args.begin(), STANLOOP_CLI);
    return subprocess::run_command(args, "", 60'000);
}

}  // namespace

TEST_CASE("usage errors exit 2") {
    CHECK(cli({}).exit_code == 2);
    CHECK(cli({"gen-data"}).exit_code == 2);
    CHECK(cli({"gen-data", "not-a-preset"}).exit_code == 2);
    CHECK(cli({"frobnicate"}).exit_code == 2);
    // the evaluation entry point mandates both annotation flags
    CHECK(cli({"evaluate", "--dataset", "d", "--rationale", "r"}).exit_code == 2);
    CHECK(cli({"evaluate", "--dataset", "d", "--notes", "n"}).exit_code == 2);
    CHECK(cli({"--help"}).exit_code == 0);
}

TEST_CASE("gen-data produces the workspace and prints the oracle NLPD") {
    testutil::TempDir tmp("cli-gen");
    const auto res =
        cli({"gen-data", "regression-1d-small", "--seed", "7", "--root", tmp.path().string()});
    CHECK(res.exit_code == 0);
    CHECK(res.out.find("train rows: 68") != std::string::npos);
    CHECK(res.out.find("test rows: 30") != std::string::npos);
    CHECK(res.out.find("oracle NLPD:") != std::string::npos);
    CHECK(std::filesystem::exists(tmp.path() / "datasets/regression-1d-small/train.csv"));
    CHECK(std::filesystem::exists(tmp.path() / "AGENTS.md"));

    // same seed, same bytes
    testutil::TempDir tmp2("cli-gen2");
    cli({"gen-data", "regression-1d-small", "--seed", "7", "--root", tmp2.path().string()});
    CHECK(io::read_file(tmp.path() / "datasets/regression-1d-small/train.csv") ==
          io::read_file(tmp2.path() / "datasets/regression-1d-small/train.csv"));
}

TEST_CASE("gen-data hierarchical preset splits 160/40") {
    testutil::TempDir tmp("cli-hier");
    const auto res = cli({"gen-data", "hierarchical-small", "--root", tmp.path().string()});
    CHECK(res.exit_code == 0);
    CHECK(res.out.find("train rows: 160") != std::string::npos);
    CHECK(res.out.find("test rows: 40") != std::string::npos);
}

TEST_CASE("oracle prints for synthetic data, errors for real data") {
    testutil::TempDir tmp("cli-oracle");
    cli({"gen-data", "regression-1d-small", "--seed", "3", "--root", tmp.path().string()});
    auto res = cli({"oracle", "--dataset", "regression-1d-small", "--root", tmp.path().string()});
    CHECK(res.exit_code == 0);
    CHECK(res.out.find("oracle NLPD: ") != std::string::npos);

    // soccer has no oracle: synthesize one via an unavailable marker
    const auto dir = tmp.path() / "datasets/soccer/protected";
    std::filesystem::create_directories(dir);
    io::atomic_write(dir / "oracle.json", "{\"available\": false}\n");
    res = cli({"oracle", "--dataset", "soccer", "--root", tmp.path().string()});
    CHECK(res.exit_code == 1);
    CHECK(res.err.find("real data") != std::string::npos);

    res = cli({"oracle", "--dataset", "absent", "--root", tmp.path().string()});
    CHECK(res.exit_code == 1);
}

TEST_CASE("evaluate without a dataset or sampler is a domain error") {
    testutil::TempDir tmp("cli-eval");
    auto res = cli({"evaluate", "--dataset", "absent", "--root", tmp.path().string(), "--notes",
                    "n", "--rationale", "r"});
    CHECK(res.exit_code == 1);
    CHECK(res.err.find("gen-data") != std::string::npos);

    cli({"gen-data", "regression-1d-small", "--root", tmp.path().string()});
    res = cli({"evaluate", "--dataset", "regression-1d-small", "--root", tmp.path().string(),
               "--notes", "n", "--rationale", "r"});
    CHECK(res.exit_code == 1);  // no model.stan yet
    CHECK(res.err.find("model.stan") != std::string::npos);
}

TEST_CASE("report regenerates markdown from an existing log") {
    testutil::TempDir tmp("cli-report");
    std::filesystem::create_directories(tmp.path() / "results/d");
    loop::IterationRecord rec;
    rec.iteration = 0;
    rec.timestamp = "2024-01-01T00:00:00Z";
    rec.nlpd = 1.5;
    rec.accepted = true;
    rec.best_so_far = 1.5;
    rec.notes = "baseline";
    rec.model_hash = "h";
    io::append_line(tmp.path() / "results/d/log.jsonl", rec.to_json_line());

    const auto res = cli({"report", "--dataset", "d", "--root", tmp.path().string()});
    CHECK(res.exit_code == 0);
    const auto report = io::read_file(tmp.path() / "results/d/report.md");
    CHECK(report.find("1.5000") != std::string::npos);
    CHECK(report.find("baseline") != std::string::npos);

    CHECK(cli({"report", "--dataset", "empty", "--root", tmp.path().string()}).exit_code == 1);
}
