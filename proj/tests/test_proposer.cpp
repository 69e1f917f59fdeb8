#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "helpers.hpp"
#include "stanloop/datagen.hpp"
#include "stanloop/errors.hpp"
#include "stanloop/io.hpp"
#include "stanloop/proposer.hpp"
#include "stanloop/workspace.hpp"

using namespace stanloop;
using namespace stanloop::proposer;

namespace {

ProposerContext empty_ctx() {
    ProposerContext ctx;
    ctx.dataset_md = "# Dataset";
    ctx.current_model = "model {}";
    ctx.last_summary = "NLPD: 1.5";
    return ctx;
}

}  // namespace

TEST_CASE("scripted proposer replays in order and then stops") {
    std::vector<Proposal> script(2);
    script[0].model_text = "a";
    script[1].model_text = "b";
    ScriptedProposer prop(script);
    const auto ctx = empty_ctx();
    CHECK(prop.next(ctx).model_text == "a");
    CHECK(prop.next(ctx).model_text == "b");
    CHECK(prop.next(ctx).stop);
    CHECK(prop.next(ctx).stop);
}

TEST_CASE("context JSON round trip including history") {
    loop::ExperimentLog log;
    loop::IterationRecord rec;
    rec.iteration = 0;
    rec.timestamp = "2024-01-01T00:00:00Z";
    rec.nlpd = 2.0;
    rec.accepted = true;
    rec.best_so_far = 2.0;
    rec.model_hash = "h";
    log.records.push_back(rec);

    auto ctx = empty_ctx();
    ctx.history = &log;
    const auto doc = ctx.to_json();

    loop::ExperimentLog storage;
    const auto back = ProposerContext::from_json(doc, storage);
    CHECK(back.dataset_md == ctx.dataset_md);
    CHECK(back.current_model == ctx.current_model);
    CHECK(back.last_summary == ctx.last_summary);
    REQUIRE(back.history != nullptr);
    REQUIRE(back.history->records.size() == 1);
    CHECK(back.history->records[0].nlpd == 2.0);

    CHECK_THROWS_AS(ProposerContext::from_json("{bad", storage), proposer_error);
}

TEST_CASE("external proposer: protocol over stdin/stdout") {
    // the child reads the context and answers with a fixed proposal
    ExternalProposer prop({"/bin/sh", "-c",
                           "cat > /dev/null; printf '%s' "
                           "'{\"model_text\":\"data {}\",\"notes\":\"n\",\"rationale\":\"r\"}'"});
    const auto p = prop.next(empty_ctx());
    CHECK(p.model_text == "data {}");
    CHECK(p.notes == "n");
    CHECK_FALSE(p.stop);

    ExternalProposer stopper({"/bin/sh", "-c", "cat > /dev/null; echo '{\"stop\":true}'"});
    CHECK(stopper.next(empty_ctx()).stop);
}

TEST_CASE("external proposer: context actually reaches the child") {
    // child echoes the dataset description back as its notes
    ExternalProposer prop(
        {"/bin/sh", "-c",
         "md=$(cat | sed -n 's/.*\"dataset_md\":\"\\([^\"]*\\)\".*/\\1/p'); "
         "printf '{\"model_text\":\"m\",\"notes\":\"%s\",\"rationale\":\"r\"}' \"$md\""});
    const auto p = prop.next(empty_ctx());
    CHECK(p.notes == "# Dataset");
}

TEST_CASE("external proposer: protocol violations raise proposer_error") {
    const auto ctx = empty_ctx();
    ExternalProposer bad_json({"/bin/sh", "-c", "cat > /dev/null; echo not-json"});
    CHECK_THROWS_AS(bad_json.next(ctx), proposer_error);

    ExternalProposer bad_exit({"/bin/sh", "-c", "cat > /dev/null; exit 7"});
    CHECK_THROWS_WITH_AS(bad_exit.next(ctx), doctest::Contains("7"), proposer_error);

    ExternalProposer empty_model({"/bin/sh", "-c", "cat > /dev/null; echo '{}'"});
    CHECK_THROWS_AS(empty_model.next(ctx), proposer_error);

    ExternalProposer slow({"/bin/sh", "-c", "cat > /dev/null; sleep 5"}, 200);
    CHECK_THROWS_AS(slow.next(ctx), proposer_error);
}

TEST_CASE("workspace agent proposer reads the edited model back") {
    testutil::TempDir tmp("prop-agent");
    const auto ds = datagen::generate(datagen::DatasetSpec::preset("regression-1d-small", 7));
    auto ws = workspace::Workspace::init(ds, tmp.path());
    ws.install_model("before");

    WorkspaceAgentProposer editor(
        {"/bin/sh", "-c", "printf 'after' > " + ws.model_path().string()}, ws);
    const auto p = editor.next(empty_ctx());
    CHECK(p.model_text == "after");
    CHECK_FALSE(p.stop);

    // no edit means the agent is done
    WorkspaceAgentProposer noop({"/bin/sh", "-c", "true"}, ws);
    CHECK(noop.next(empty_ctx()).stop);

    WorkspaceAgentProposer crasher({"/bin/sh", "-c", "exit 2"}, ws);
    CHECK_THROWS_AS(crasher.next(empty_ctx()), proposer_error);
}

TEST_CASE("fixture catalog honors the log_lik contract") {
    const auto& catalog = fixture_models();
    CHECK(catalog.size() >= 10);
    for (const auto& [name, text] : catalog) {
        CAPTURE(name);
        CHECK(text.find("generated quantities") != std::string::npos);
        CHECK(text.find("vector[N_test] log_lik") != std::string::npos);
        CHECK(text.find("int<lower=0> N_train") != std::string::npos);
    }
}

TEST_CASE("fixture models use the interface each dataset descriptor declares") {
    for (const char* name :
         {"regression_baseline", "regression_cubic_student_t", "regression_sine_student_t",
          "mixture_fixed_sigma_out"}) {
        const auto& text = fixture_models().at(name);
        CAPTURE(name);
        CHECK(text.find("predictor_train") != std::string::npos);
        CHECK(text.find("response_test") != std::string::npos);
    }
    for (const char* name : {"hierarchical_centered", "hierarchical_noncentered"}) {
        const auto& text = fixture_models().at(name);
        CHECK(text.find("unit_train") != std::string::npos);
        CHECK(text.find("effect_test") != std::string::npos);
    }
    for (const char* name : {"slopes_pooled", "slopes_correlated"}) {
        const auto& text = fixture_models().at(name);
        CHECK(text.find("input_train") != std::string::npos);
    }
    for (const char* name : {"soccer_poisson", "soccer_poisson_hierarchical"}) {
        const auto& text = fixture_models().at(name);
        CHECK(text.find("home_team_train") != std::string::npos);
        CHECK(text.find("poisson_log") != std::string::npos);
    }
}

TEST_CASE("fixture scripts cover every dataset family") {
    const auto names = fixture_script_names();
    CHECK(names.size() == 4);
    for (const auto& name : names) {
        const auto script = fixture_script(name);
        CHECK(script.size() >= 2);
        for (const auto& p : script) {
            CHECK_FALSE(p.model_text.empty());
            CHECK_FALSE(p.notes.empty());
            CHECK_FALSE(p.rationale.empty());
            CHECK_FALSE(p.stop);
        }
        // the first entry is a deliberately simple baseline
        CHECK(script.front().notes.find("baseline") != std::string::npos);
    }
    CHECK_THROWS_AS(fixture_script("nope"), invalid_input);
}

TEST_CASE("agent instructions state the contract and the stopping rule") {
    const auto text = agent_instructions();
    for (const char* needle :
         {"log_lik", "NLPD", "protected", "3 consecutive", "20 total", "report.md", "--notes",
          "--rationale", "log.jsonl"})
        CHECK(text.find(needle) != std::string::npos);
}
