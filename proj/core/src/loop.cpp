#include "stanloop/loop.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <sstream>

#include <json.hpp>

#include "stanloop/errors.hpp"
#include "stanloop/proposer.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace stanloop::loop {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string rfc3339_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm {};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

ordered_json nlpd_to_json(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;  // +inf (failed evaluation) has no JSON number
}

double nlpd_from_json(const ordered_json& j) {
    if (j.is_null()) return kInf;
    return j.get<double>();
}

std::string fmt4(double v) {
    if (!std::isfinite(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

}  // namespace

void LoopConfig::validate() const {
    if (max_iterations < 1) throw invalid_input("loop config: max_iterations must be >= 1");
    if (patience < 1) throw invalid_input("loop config: patience must be >= 1");
}

std::string IterationRecord::to_json_line() const {
    ordered_json j;
    j["iteration"] = iteration;
    j["timestamp"] = timestamp;
    j["nlpd"] = nlpd_to_json(nlpd);
    j["accepted"] = accepted;
    j["best_so_far"] = nlpd_to_json(best_so_far);
    j["notes"] = notes;
    j["rationale"] = rationale;
    j["model_hash"] = model_hash;
    j["diagnostics"] = {{"max_rhat", diagnostics.max_rhat},
                        {"min_ess", diagnostics.min_ess},
                        {"divergences", diagnostics.divergences},
                        {"health", diagnostics.health}};
    j["wall_time_s"] = wall_time_s;
    return j.dump();
}

IterationRecord IterationRecord::from_json_line(const std::string& line) {
    ordered_json j;
    try {
        j = ordered_json::parse(line);
    } catch (const ordered_json::parse_error& e) {
        throw parse_error(std::string("bad log record: ") + e.what());
    }
    IterationRecord r;
    r.iteration = j.at("iteration").get<int>();
    r.timestamp = j.at("timestamp").get<std::string>();
    r.nlpd = nlpd_from_json(j.at("nlpd"));
    r.accepted = j.at("accepted").get<bool>();
    r.best_so_far = nlpd_from_json(j.at("best_so_far"));
    r.notes = j.at("notes").get<std::string>();
    r.rationale = j.at("rationale").get<std::string>();
    r.model_hash = j.at("model_hash").get<std::string>();
    const auto& d = j.at("diagnostics");
    r.diagnostics.max_rhat = d.at("max_rhat").get<double>();
    r.diagnostics.min_ess = d.at("min_ess").get<double>();
    r.diagnostics.divergences = d.at("divergences").get<long>();
    r.diagnostics.health = d.at("health").get<std::string>();
    r.wall_time_s = j.at("wall_time_s").get<double>();
    return r;
}

ExperimentLog ExperimentLog::load(const fs::path& jsonl_path) {
    ExperimentLog log;
    if (!fs::exists(jsonl_path)) return log;
    std::istringstream in(io::read_file(jsonl_path));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        log.records.push_back(IterationRecord::from_json_line(line));
    }
    for (std::size_t i = 0; i < log.records.size(); ++i)
        if (log.records[i].iteration != static_cast<int>(i))
            throw parse_error("log records are not contiguous from 0 at index " +
                              std::to_string(i));
    return log;
}

Decision decide(double new_nlpd, double best_nlpd) {
    if (std::isnan(new_nlpd) || std::isnan(best_nlpd))
        throw invalid_input("decide: NaN NLPD");
    return new_nlpd < best_nlpd ? Decision::accept : Decision::revert;
}

std::string Evaluation::summary() const {
    std::ostringstream out;
    if (failed()) {
        out << "evaluation failed:\n" << error << "\n";
        return out.str();
    }
    out << "NLPD: " << fmt4(nlpd) << "\n"
        << "max_rhat: " << diag.max_rhat << "  min_ess: " << diag.min_ess
        << "  divergences: " << diag.divergences << "  health: " << diag.health << "\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// BackendEvaluator

backend::StanData stan_data_from_tables(const io::Table& train, const io::Table& test) {
    backend::StanData data;
    data["N_train"] = static_cast<long>(train.rows.size());
    data["N_test"] = static_cast<long>(test.rows.size());

    auto int_column = [](const io::Table& t, const char* name) {
        std::vector<long> out;
        for (double v : t.column(name)) out.push_back(static_cast<long>(v));
        return out;
    };

    if (train.has_column("predictor")) {
        data["predictor_train"] = train.column("predictor");
        data["predictor_test"] = test.column("predictor");
        data["response_train"] = train.column("response");
        data["response_test"] = test.column("response");
    } else if (train.has_column("unit")) {
        const auto unit_train = int_column(train, "unit");
        const auto unit_test = int_column(test, "unit");
        long j = 0;
        for (long u : unit_train) j = std::max(j, u);
        for (long u : unit_test) j = std::max(j, u);
        data["J"] = j;
        data["unit_train"] = unit_train;
        data["unit_test"] = unit_test;
        if (train.has_column("input")) {
            data["input_train"] = train.column("input");
            data["input_test"] = test.column("input");
        }
        data["effect_train"] = train.column("effect");
        data["effect_test"] = test.column("effect");
    } else if (train.has_column("home_team_id")) {
        long teams = 0;
        for (const char* c : {"home_team_id", "away_team_id"}) {
            for (double v : train.column(c)) teams = std::max(teams, static_cast<long>(v));
            for (double v : test.column(c)) teams = std::max(teams, static_cast<long>(v));
        }
        data["n_teams"] = teams;
        data["home_team_train"] = int_column(train, "home_team_id");
        data["away_team_train"] = int_column(train, "away_team_id");
        data["home_goals_train"] = int_column(train, "home_goals");
        data["away_goals_train"] = int_column(train, "away_goals");
        data["home_team_test"] = int_column(test, "home_team_id");
        data["away_team_test"] = int_column(test, "away_team_id");
        data["home_goals_test"] = int_column(test, "home_goals");
        data["away_goals_test"] = int_column(test, "away_goals");
    } else {
        throw invalid_input("unrecognized dataset columns; cannot build Stan data block");
    }
    return data;
}

BackendEvaluator::BackendEvaluator(backend::CmdStanBackend& cmdstan, workspace::Workspace& ws,
                                   backend::SamplerConfig sampler)
    : cmdstan_(cmdstan), ws_(ws), sampler_(sampler) {}

Evaluation BackendEvaluator::evaluate(const backend::ModelSource& model) {
    Evaluation ev;
    backend::CmdStanBackend::Executable exe;
    try {
        exe = cmdstan_.compile(model);
    } catch (const compile_error& e) {
        ev.error = e.what();
        return ev;
    }

    const auto train = io::read_numeric_csv(ws_.train_path());
    const auto test = io::read_numeric_csv_text(ws_.read_protected("test.csv"));
    const auto data = stan_data_from_tables(train, test);

    try {
        const auto fit = cmdstan_.sample(exe, data, sampler_);
        const auto sc = scoring::score(fit.loglik);
        ev.nlpd = sc.nlpd;
        const auto rep = diagnostics::summarize(fit.draws);
        ev.diag = {rep.max_rhat, rep.min_ess, rep.divergences, diagnostics::to_string(rep.health)};
        ev.wall_time_s = fit.wall_time_s;
    } catch (const sampler_error& e) {
        ev.error = e.what();
    } catch (const invalid_input& e) {
        ev.error = e.what();
    }
    return ev;
}

// ---------------------------------------------------------------------------
// Loop

Loop::Loop(workspace::Workspace& ws, Evaluator& evaluator, LoopConfig cfg)
    : ws_(ws), evaluator_(evaluator), cfg_(cfg) {
    cfg_.validate();
    fs::create_directories(ws_.results_dir());
    log_ = ExperimentLog::load(ws_.log_path());
    for (const auto& rec : log_.records)
        if (rec.accepted) {
            best_ = rec.best_so_far;
            best_hash_ = rec.model_hash;
        }
}

void Loop::append_record(const IterationRecord& rec) {
    log_.records.push_back(rec);
    io::append_line(ws_.log_path(), rec.to_json_line());
}

IterationRecord Loop::run_iteration(const proposer::Proposal& proposal) {
    if (proposal.model_text.empty()) throw invalid_input("run_iteration: empty proposal");
    const int iteration = static_cast<int>(log_.records.size());

    std::string pre_hash;
    if (iteration > 0) {
        if (!ws_.has_model())
            throw std::runtime_error("workspace corrupted: model.stan missing before iteration " +
                                     std::to_string(iteration));
        pre_hash = ws_.snapshot();
    }

    const auto model = backend::ModelSource::from_text(proposal.model_text);
    ws_.install_model(model.text);

    const auto t0 = std::chrono::steady_clock::now();
    Evaluation ev = evaluator_.evaluate(model);
    if (ev.wall_time_s == 0.0)
        ev.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const double nlpd = ev.failed() ? kInf : ev.nlpd;
    const bool accepted =
        iteration == 0 || decide(nlpd, best_) == Decision::accept;

    IterationRecord rec;
    rec.iteration = iteration;
    rec.timestamp = rfc3339_now();
    rec.nlpd = nlpd;
    rec.accepted = accepted;
    rec.notes = proposal.notes;
    if (ev.failed()) rec.notes += (rec.notes.empty() ? "" : " | ") + ev.error;
    rec.rationale = proposal.rationale;
    rec.model_hash = model.hash;
    rec.diagnostics = ev.diag;
    rec.wall_time_s = ev.wall_time_s;

    if (accepted) {
        best_ = nlpd;
        best_hash_ = ws_.snapshot();
    } else {
        ws_.restore(pre_hash);
    }
    rec.best_so_far = best_;
    append_record(rec);
    last_summary_ = ev.summary();
    return rec;
}

ExperimentLog Loop::run(proposer::Proposer& proposer) {
    int streak = 0;
    // resuming: count trailing non-improving iterations already logged
    for (auto it = log_.records.rbegin(); it != log_.records.rend() && it->iteration > 0; ++it) {
        if (it->accepted) break;
        ++streak;
    }

    while (static_cast<int>(log_.records.size()) < cfg_.max_iterations && streak < cfg_.patience) {
        proposer::ProposerContext ctx;
        ctx.dataset_md =
            fs::exists(ws_.descriptor_path()) ? io::read_file(ws_.descriptor_path()) : "";
        ctx.history = &log_;
        ctx.current_model = ws_.current_model();
        ctx.last_summary = last_summary_;

        const proposer::Proposal proposal = proposer.next(ctx);
        if (proposal.stop) break;

        const auto rec = run_iteration(proposal);
        if (rec.iteration == 0 || rec.accepted)
            streak = 0;  // the baseline cannot trigger patience
        else
            ++streak;
    }
    return log_;
}

// ---------------------------------------------------------------------------
// Report

void write_report(const ExperimentLog& log, const fs::path& path,
                  const std::function<std::optional<std::string>(const std::string&)>& lookup) {
    if (log.empty()) throw invalid_input("write_report: empty log");

    const IterationRecord* best = &log.records.front();
    for (const auto& rec : log.records)
        if (rec.accepted && rec.nlpd <= best->nlpd) best = &rec;

    std::ostringstream out;
    out << "# Experiment report\n\n"
        << "Iterations: " << log.records.size() << "\n"
        << "Best NLPD: " << fmt4(best->nlpd) << " (iteration " << best->iteration << ")\n\n"
        << "## Trajectory\n\n"
        << "| Iter | NLPD | Delta | | Notes |\n"
        << "|---:|---:|---:|:--:|:---|\n";

    double prev_best = kInf;
    for (const auto& rec : log.records) {
        out << "| " << rec.iteration << " | " << fmt4(rec.nlpd) << " | ";
        if (rec.iteration == 0 || !std::isfinite(rec.nlpd) || !std::isfinite(prev_best))
            out << "---";
        else
            out << fmt4(rec.nlpd - prev_best);
        out << " | " << (rec.accepted ? "✓" : "×") << " | " << rec.notes << " |\n";
        prev_best = rec.best_so_far;
    }

    out << "\n## Best model\n\n"
        << "Iteration " << best->iteration << ", NLPD " << fmt4(best->nlpd) << ", model `"
        << best->model_hash << "`\n";
    if (lookup) {
        if (const auto text = lookup(best->model_hash)) out << "\n```stan\n" << *text << "```\n";
    }
    io::atomic_write(path, out.str());
}

}  // namespace stanloop::loop
