#include "stanloop/proposer.hpp"

#include <json.hpp>

#include "stanloop/errors.hpp"
#include "stanloop/subprocess.hpp"

using ordered_json = nlohmann::ordered_json;

namespace stanloop::proposer {

std::string ProposerContext::to_json() const {
    ordered_json j;
    j["dataset_md"] = dataset_md;
    auto& hist = j["history"] = ordered_json::array();
    if (history)
        for (const auto& rec : history->records)
            hist.push_back(ordered_json::parse(rec.to_json_line()));
    j["current_model"] = current_model;
    j["last_summary"] = last_summary;
    return j.dump();
}

ProposerContext ProposerContext::from_json(const std::string& doc,
                                           loop::ExperimentLog& history_storage) {
    ordered_json j;
    try {
        j = ordered_json::parse(doc);
    } catch (const ordered_json::parse_error& e) {
        throw proposer_error(std::string("malformed proposer context JSON: ") + e.what());
    }
    ProposerContext ctx;
    ctx.dataset_md = j.at("dataset_md").get<std::string>();
    history_storage.records.clear();
    for (const auto& rec : j.at("history"))
        history_storage.records.push_back(loop::IterationRecord::from_json_line(rec.dump()));
    ctx.history = &history_storage;
    ctx.current_model = j.at("current_model").get<std::string>();
    ctx.last_summary = j.at("last_summary").get<std::string>();
    return ctx;
}

Proposal ScriptedProposer::next(const ProposerContext&) {
    if (pos_ >= script_.size()) {
        Proposal stop;
        stop.stop = true;
        return stop;
    }
    return script_[pos_++];
}

Proposal ExternalProposer::next(const ProposerContext& ctx) {
    const auto res = subprocess::run_command(argv_, ctx.to_json() + "\n", timeout_ms_);
    if (res.timed_out)
        throw proposer_error("proposer command timed out after " + std::to_string(timeout_ms_) +
                             " ms");
    if (res.exit_code != 0)
        throw proposer_error("proposer command exited with code " +
                             std::to_string(res.exit_code) + ":\n" + res.err);

    ordered_json j;
    try {
        j = ordered_json::parse(res.out);
    } catch (const ordered_json::parse_error& e) {
        throw proposer_error(std::string("malformed proposer response JSON: ") + e.what() +
                             "\noutput was:\n" + res.out);
    }
    Proposal p;
    p.stop = j.value("stop", false);
    p.model_text = j.value("model_text", std::string{});
    p.notes = j.value("notes", std::string{});
    p.rationale = j.value("rationale", std::string{});
    if (!p.stop && p.model_text.empty())
        throw proposer_error("proposer response has empty model_text without stop=true");
    return p;
}

Proposal WorkspaceAgentProposer::next(const ProposerContext& ctx) {
    const std::string before = ws_.current_model();
    const auto res = subprocess::run_command(argv_, "", timeout_ms_);
    if (res.timed_out) throw proposer_error("agent command timed out");
    if (res.exit_code != 0)
        throw proposer_error("agent command exited with code " + std::to_string(res.exit_code) +
                             ":\n" + res.err);
    const std::string after = ws_.current_model();
    if (after.empty() || after == before) {
        Proposal stop;
        stop.stop = true;
        return stop;
    }
    Proposal p;
    p.model_text = after;
    p.notes = "workspace edit by agent";
    p.rationale = ctx.last_summary.empty() ? "agent-driven change" : "response to last evaluation";
    return p;
}

}  // namespace stanloop::proposer
