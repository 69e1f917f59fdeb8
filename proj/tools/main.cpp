#include <cmath>
#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stanloop/backend.hpp"
#include "stanloop/datagen.hpp"
#include "stanloop/errors.hpp"
#include "stanloop/io.hpp"
#include "stanloop/loop.hpp"
#include "stanloop/proposer.hpp"
#include "stanloop/workspace.hpp"

namespace fs = std::filesystem;
using namespace stanloop;

namespace {

constexpr int kOk = 0;
constexpr int kDomainError = 1;
constexpr int kUsageError = 2;

std::string fmt4(double v) {
    if (!std::isfinite(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

struct Options {
    std::string preset;
    std::string dataset;
    std::string root = ".";
    std::uint64_t seed = 1;
    std::string soccer_csv;
    int split_matchday = 23;

    std::string notes;
    std::string rationale;
    backend::SamplerConfig sampler;

    std::string proposer_spec;
    loop::LoopConfig loop_cfg;
};

backend::CmdStanBackend require_cmdstan(const fs::path& root) {
    const auto cmdstan = backend::CmdStanBackend::discover_root();
    if (!cmdstan)
        throw config_error(
            "no external sampler found: set STANLOOP_CMDSTAN (or CMDSTAN) to a CmdStan root");
    return backend::CmdStanBackend(*cmdstan, root / ".model-cache");
}

int cmd_gen_data(const Options& opt) {
    datagen::GeneratedDataset ds;
    if (opt.preset == "soccer") {
        if (opt.soccer_csv.empty())
            throw config_error("soccer preset needs --matches <csv> with real match data");
        ds = datagen::load_soccer(opt.soccer_csv, opt.split_matchday);
    } else {
        ds = datagen::generate(datagen::DatasetSpec::preset(opt.preset, opt.seed));
    }

    auto ws = workspace::Workspace::init(ds, opt.root);
    io::atomic_write(ws.root() / "AGENTS.md", proposer::agent_instructions());

    std::cout << "dataset: " << ds.spec.name << "\n"
              << "train rows: " << ds.train.rows.size() << "\n"
              << "test rows: " << ds.test.rows.size() << "\n";
    if (ds.oracle.available)
        std::cout << "oracle NLPD: " << fmt4(ds.oracle.nlpd) << "\n";
    else
        std::cout << "oracle NLPD: n/a (real data)\n";
    std::cout << ws.verify_protection().pretty();
    return kOk;
}

int cmd_evaluate(const Options& opt) {
    workspace::Workspace ws(opt.root, opt.dataset);
    if (!fs::exists(ws.descriptor_path()))
        throw config_error("dataset '" + opt.dataset + "' not found under " + opt.root +
                           " (run gen-data first)");
    if (!ws.has_model())
        throw config_error("no model.stan in workspace " + opt.root);

    auto cmdstan = require_cmdstan(opt.root);
    loop::BackendEvaluator evaluator(cmdstan, ws, opt.sampler);
    loop::Loop lp(ws, evaluator, loop::LoopConfig{});

    proposer::Proposal p;
    p.model_text = ws.current_model();
    p.notes = opt.notes;
    p.rationale = opt.rationale;
    const auto rec = lp.run_iteration(p);

    if (!std::isfinite(rec.nlpd)) {
        std::cerr << "evaluation failed: " << rec.notes << "\n";
        return kDomainError;
    }
    std::cout << "NLPD: " << fmt4(rec.nlpd) << "\n"
              << "max_rhat: " << rec.diagnostics.max_rhat
              << "  min_ess: " << rec.diagnostics.min_ess
              << "  divergences: " << rec.diagnostics.divergences
              << "  health: " << rec.diagnostics.health << "\n"
              << (rec.accepted ? "accepted" : "reverted")
              << " (best so far: " << fmt4(rec.best_so_far) << ")\n";
    return kOk;
}

// scripted:<set> accepts dataset-flavored aliases for the fixture sets
std::string resolve_script_name(std::string name) {
    if (name.rfind("regression", 0) == 0) return "regression";
    if (name.rfind("hier", 0) == 0) return "hierarchical";
    if (name.find("slope") != std::string::npos) return "varying-slopes";
    return name;
}

std::unique_ptr<proposer::Proposer> make_proposer(const std::string& spec,
                                                  workspace::Workspace& ws) {
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
    if (kind == "scripted")
        return std::make_unique<proposer::ScriptedProposer>(
            proposer::fixture_script(resolve_script_name(arg)));
    if (kind == "external")
        return std::make_unique<proposer::ExternalProposer>(
            std::vector<std::string>{"/bin/sh", "-c", arg});
    if (kind == "agent")
        return std::make_unique<proposer::WorkspaceAgentProposer>(
            std::vector<std::string>{"/bin/sh", "-c", arg}, ws);
    throw config_error("unknown proposer '" + spec +
                       "' (expected scripted:<set>, external:<command>, or agent:<command>)");
}

int cmd_loop(const Options& opt) {
    workspace::Workspace ws(opt.root, opt.dataset);
    if (!fs::exists(ws.descriptor_path()))
        throw config_error("dataset '" + opt.dataset + "' not found under " + opt.root +
                           " (run gen-data first)");

    auto cmdstan = require_cmdstan(opt.root);
    loop::BackendEvaluator evaluator(cmdstan, ws, opt.sampler);
    loop::Loop lp(ws, evaluator, opt.loop_cfg);
    auto prop = make_proposer(opt.proposer_spec, ws);

    const auto log = lp.run(*prop);
    for (const auto& rec : log.records)
        std::cout << "iter " << rec.iteration << "  NLPD " << fmt4(rec.nlpd) << "  "
                  << (rec.accepted ? "accepted" : "reverted") << "\n";
    std::cout << "best NLPD: " << fmt4(lp.best_nlpd()) << "\n";

    loop::write_report(log, ws.report_path(), [&ws](const std::string& hash) {
        try {
            return std::optional<std::string>(ws.snapshot_text(hash));
        } catch (const std::exception&) {
            return std::optional<std::string>();
        }
    });
    std::cout << "report: " << ws.report_path().string() << "\n";
    return kOk;
}

int cmd_report(const Options& opt) {
    workspace::Workspace ws(opt.root, opt.dataset);
    const auto log = loop::ExperimentLog::load(ws.log_path());
    if (log.empty()) throw config_error("no log at " + ws.log_path().string());
    loop::write_report(log, ws.report_path(), [&ws](const std::string& hash) {
        try {
            return std::optional<std::string>(ws.snapshot_text(hash));
        } catch (const std::exception&) {
            return std::optional<std::string>();
        }
    });
    std::cout << "report: " << ws.report_path().string() << "\n";
    return kOk;
}

int cmd_oracle(const Options& opt) {
    workspace::Workspace ws(opt.root, opt.dataset);
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(ws.read_protected("oracle.json"));
    } catch (const std::exception& e) {
        throw config_error("cannot read oracle metadata for '" + opt.dataset + "': " + e.what());
    }
    if (!meta.value("available", false))
        throw invalid_input("no oracle NLPD for '" + opt.dataset + "' (real data)");
    std::cout << "oracle NLPD: " << fmt4(meta.at("nlpd").get<double>()) << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian model-improvement harness"};
    app.require_subcommand(1);
    Options opt;

    auto add_root = [&](CLI::App* sub) {
        sub->add_option("--root", opt.root, "workspace root directory")
            ->capture_default_str();
    };
    auto add_dataset = [&](CLI::App* sub) {
        sub->add_option("--dataset", opt.dataset, "dataset name")->required();
        add_root(sub);
    };
    auto add_sampler = [&](CLI::App* sub) {
        sub->add_option("--chains", opt.sampler.chains)->capture_default_str();
        sub->add_option("--warmup", opt.sampler.warmup_draws)->capture_default_str();
        sub->add_option("--draws", opt.sampler.sampling_draws, "post-warmup draws per chain")
            ->capture_default_str();
        sub->add_option("--seed", opt.sampler.seed, "sampler seed")->capture_default_str();
        sub->add_option("--parallel-chains", opt.sampler.parallel_chains)->capture_default_str();
    };

    auto* gen = app.add_subcommand("gen-data", "generate a dataset into a workspace");
    gen->add_option("preset", opt.preset, "dataset preset or 'soccer'")
        ->required()
        ->check(CLI::IsMember(datagen::DatasetSpec::preset_names()));
    gen->add_option("--seed", opt.seed, "generation seed")->capture_default_str();
    gen->add_option("--matches", opt.soccer_csv, "real match CSV (soccer preset)");
    gen->add_option("--split-matchday", opt.split_matchday,
                    "last matchday included in training (soccer preset)")
        ->capture_default_str();
    add_root(gen);

    auto* ev = app.add_subcommand("evaluate", "fit model.stan and score it on the test split");
    add_dataset(ev);
    ev->add_option("--notes", opt.notes, "what changed in this model")->required();
    ev->add_option("--rationale", opt.rationale, "why, referencing previous iterations")
        ->required();
    add_sampler(ev);

    auto* lo = app.add_subcommand("loop", "run the improve-evaluate-decide loop to a halt");
    add_dataset(lo);
    lo->add_option("--proposer", opt.proposer_spec,
                   "scripted:<set>, external:<command>, or agent:<command>")
        ->required();
    lo->add_option("--max-iterations", opt.loop_cfg.max_iterations)->capture_default_str();
    lo->add_option("--patience", opt.loop_cfg.patience)->capture_default_str();
    add_sampler(lo);

    auto* rep = app.add_subcommand("report", "regenerate report.md from log.jsonl");
    add_dataset(rep);

    auto* ora = app.add_subcommand("oracle", "print the oracle NLPD for a synthetic dataset");
    add_dataset(ora);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return kUsageError;
    }

    try {
        if (gen->parsed()) return cmd_gen_data(opt);
        if (ev->parsed()) return cmd_evaluate(opt);
        if (lo->parsed()) return cmd_loop(opt);
        if (rep->parsed()) return cmd_report(opt);
        if (ora->parsed()) return cmd_oracle(opt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDomainError;
    }
    return kUsageError;
}
