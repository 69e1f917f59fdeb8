#pragma once

#include <map>
#include <string>
#include <vector>

#include "stanloop/loop.hpp"
#include "stanloop/workspace.hpp"

namespace stanloop::proposer {

/// Candidate model plus the mandatory notes/rationale pair. stop=true
/// ends the loop; the model may then be empty.
struct Proposal {
    std::string model_text;
    std::string notes;
    std::string rationale;
    bool stop = false;
};

/// Everything a proposer gets to see. The log is the authoritative
/// history; protected files are never part of the context.
struct ProposerContext {
    std::string dataset_md;
    const loop::ExperimentLog* history = nullptr;
    std::string current_model;
    std::string last_summary;

    std::string to_json() const;
    static ProposerContext from_json(const std::string& doc, loop::ExperimentLog& history_storage);
};

class Proposer {
public:
    virtual ~Proposer() = default;
    virtual Proposal next(const ProposerContext& ctx) = 0;
};

/// Deterministic replay of an ordered model list; ignores the context
/// and signals stop once exhausted.
class ScriptedProposer : public Proposer {
public:
    explicit ScriptedProposer(std::vector<Proposal> script) : script_(std::move(script)) {}
    Proposal next(const ProposerContext& ctx) override;

private:
    std::vector<Proposal> script_;
    std::size_t pos_ = 0;
};

/// Delegates to a child process: the context is written as one JSON
/// document to the child's stdin, and one JSON document with fields
/// model_text, notes, rationale, stop is read from its stdout.
/// Timeout, nonzero exit, and malformed JSON raise proposer_error.
class ExternalProposer : public Proposer {
public:
    ExternalProposer(std::vector<std::string> argv, long timeout_ms = 600'000)
        : argv_(std::move(argv)), timeout_ms_(timeout_ms) {}
    Proposal next(const ProposerContext& ctx) override;

private:
    std::vector<std::string> argv_;
    long timeout_ms_;
};

/// Workspace-mode adapter: the agent command edits model.stan in place;
/// the harness re-reads it after the command exits.
class WorkspaceAgentProposer : public Proposer {
public:
    WorkspaceAgentProposer(std::vector<std::string> argv, workspace::Workspace& ws,
                           long timeout_ms = 3'600'000)
        : argv_(std::move(argv)), ws_(ws), timeout_ms_(timeout_ms) {}
    Proposal next(const ProposerContext& ctx) override;

private:
    std::vector<std::string> argv_;
    workspace::Workspace& ws_;
    long timeout_ms_;
};

/// Shipped model catalog, keyed by name. Every model emits a log_lik
/// vector of length N_test in generated quantities.
const std::map<std::string, std::string>& fixture_models();

/// Ordered replay scripts over the fixture catalog. Known sets:
/// regression, hierarchical, varying-slopes, soccer.
std::vector<Proposal> fixture_script(const std::string& set_name);
std::vector<std::string> fixture_script_names();

/// Instruction file handed to workspace-mode agents.
std::string agent_instructions();

}  // namespace stanloop::proposer
