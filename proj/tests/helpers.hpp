#pragma once

#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <string>
#include <system_error>
#include <vector>

#include "stanloop/diagnostics.hpp"
#include "stanloop/loop.hpp"

namespace testutil {

// 64-bit LCG shared with the oracle scripts under tests/oracles/; both
// sides rebuild identical fixture data from it without sharing code.
struct Lcg {
    std::uint64_t s;
    explicit Lcg(std::uint64_t seed) : s(seed) {}
    double u() {
        s = s * 6364136223846793005ull + 1442695040888963407ull;
        return static_cast<double>(s >> 11) * 0x1.0p-53;
    }
};

inline stanloop::diagnostics::ChainDraws one_param_chains(
    std::vector<std::vector<double>> chains) {
    stanloop::diagnostics::ChainDraws cd;
    cd.param_names = {"theta"};
    cd.draws_per_chain = chains.front().size();
    cd.chain_values = std::move(chains);
    for (const auto& c : cd.chain_values) cd.divergent.emplace_back(c.size(), 0);
    return cd;
}

inline stanloop::diagnostics::ChainDraws fixture_iid() {
    std::vector<std::vector<double>> chains;
    for (int c = 0; c < 4; ++c) {
        Lcg g(c + 1);
        std::vector<double> x(100);
        for (auto& v : x) v = g.u();
        chains.push_back(std::move(x));
    }
    return one_param_chains(std::move(chains));
}

inline stanloop::diagnostics::ChainDraws fixture_ar1() {
    std::vector<std::vector<double>> chains;
    for (int c = 0; c < 4; ++c) {
        Lcg g(101 + c);
        std::vector<double> x(200);
        x[0] = g.u() - 0.5;
        for (std::size_t d = 1; d < x.size(); ++d) x[d] = 0.9 * x[d - 1] + (g.u() - 0.5);
        chains.push_back(std::move(x));
    }
    return one_param_chains(std::move(chains));
}

inline stanloop::diagnostics::ChainDraws fixture_split() {
    std::vector<std::vector<double>> chains;
    for (int c = 0; c < 2; ++c) {
        Lcg g(201 + c);
        std::vector<double> x(40);
        for (auto& v : x) v = g.u() + 5.0 * c;
        chains.push_back(std::move(x));
    }
    return one_param_chains(std::move(chains));
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("stanloop-" + tag + "-" + std::to_string(::getpid()));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

/// Returns a scripted NLPD per evaluate() call, in order.
class ReplayEvaluator : public stanloop::loop::Evaluator {
public:
    explicit ReplayEvaluator(std::vector<double> nlpds) : nlpds_(std::move(nlpds)) {}
    stanloop::loop::Evaluation evaluate(const stanloop::backend::ModelSource&) override {
        stanloop::loop::Evaluation ev;
        if (pos_ < nlpds_.size()) {
            ev.nlpd = nlpds_[pos_++];
            ev.wall_time_s = 0.001;
        } else {
            ev.error = "replay script exhausted";
        }
        return ev;
    }
    std::size_t calls() const { return pos_; }

private:
    std::vector<double> nlpds_;
    std::size_t pos_ = 0;
};

}  // namespace testutil
