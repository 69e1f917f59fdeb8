#pragma once

#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "stanloop/backend.hpp"
#include "stanloop/workspace.hpp"

namespace stanloop::proposer {
class Proposer;
struct Proposal;
}  // namespace stanloop::proposer

namespace stanloop::loop {

struct LoopConfig {
    int max_iterations = 20;  // includes the baseline iteration
    int patience = 3;         // consecutive non-improving iterations before halting

    void validate() const;
};

struct DiagSummary {
    double max_rhat = 1.0;
    double min_ess = 0.0;
    long divergences = 0;
    std::string health = "ok";
};

struct IterationRecord {
    int iteration = 0;
    std::string timestamp;  // RFC 3339 UTC
    double nlpd = 0.0;      // +inf when evaluation failed
    bool accepted = false;
    double best_so_far = 0.0;
    std::string notes;
    std::string rationale;
    std::string model_hash;
    DiagSummary diagnostics;
    double wall_time_s = 0.0;

    /// One JSON object, non-finite nlpd serialized as null.
    std::string to_json_line() const;
    static IterationRecord from_json_line(const std::string& line);
};

struct ExperimentLog {
    std::vector<IterationRecord> records;

    static ExperimentLog load(const std::filesystem::path& jsonl_path);
    bool empty() const { return records.empty(); }
    const IterationRecord& back() const { return records.back(); }
};

enum class Decision { accept, revert };

/// Accept iff new_nlpd < best_nlpd at full precision; +inf always
/// reverts. NaN is an error.
Decision decide(double new_nlpd, double best_nlpd);

/// Result of evaluating one candidate model.
struct Evaluation {
    double nlpd = std::numeric_limits<double>::infinity();
    DiagSummary diag;
    double wall_time_s = 0.0;
    std::string error;  // nonempty when compile/sampling failed

    bool failed() const { return !error.empty(); }
    std::string summary() const;  // printed block the proposer sees
};

class Evaluator {
public:
    virtual ~Evaluator() = default;
    virtual Evaluation evaluate(const backend::ModelSource& model) = 0;
};

/// Real evaluation path: CmdStan fit against the workspace dataset,
/// scored on the protected test split.
class BackendEvaluator : public Evaluator {
public:
    BackendEvaluator(backend::CmdStanBackend& cmdstan, workspace::Workspace& ws,
                     backend::SamplerConfig sampler);
    Evaluation evaluate(const backend::ModelSource& model) override;

private:
    backend::CmdStanBackend& cmdstan_;
    workspace::Workspace& ws_;
    backend::SamplerConfig sampler_;
};

/// The improve-evaluate-decide cycle over one workspace.
class Loop {
public:
    Loop(workspace::Workspace& ws, Evaluator& evaluator, LoopConfig cfg);

    /// Evaluate one proposal: snapshot, install, evaluate, decide,
    /// restore on revert, append the record to log.jsonl.
    IterationRecord run_iteration(const proposer::Proposal& proposal);

    /// Iteration 0 is the proposer's baseline and always becomes the
    /// initial best. Halts on patience, max_iterations, or a stop
    /// signal; the best model is installed on exit.
    ExperimentLog run(proposer::Proposer& proposer);

    double best_nlpd() const { return best_; }
    const ExperimentLog& log() const { return log_; }

private:
    workspace::Workspace& ws_;
    Evaluator& evaluator_;
    LoopConfig cfg_;
    ExperimentLog log_;
    double best_ = std::numeric_limits<double>::infinity();
    std::string best_hash_;
    std::string last_summary_;

    void append_record(const IterationRecord& rec);
};

/// Markdown report: trajectory table, best-model identification, best
/// model source. model_lookup maps a model hash to its source text
/// (snapshot store); unknown hashes omit the source section.
void write_report(
    const ExperimentLog& log, const std::filesystem::path& path,
    const std::function<std::optional<std::string>(const std::string&)>& model_lookup = {});

/// Builds the Stan data block from the emitted train/test tables; the
/// dataset kind is recognized from the column names.
backend::StanData stan_data_from_tables(const io::Table& train, const io::Table& test);

}  // namespace stanloop::loop
