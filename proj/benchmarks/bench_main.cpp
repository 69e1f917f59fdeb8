#include <benchmark/benchmark.h>

#include "stanloop/diagnostics.hpp"
#include "stanloop/rng.hpp"
#include "stanloop/scoring.hpp"

using namespace stanloop;

namespace {

scoring::LogLikMatrix make_loglik(std::size_t draws, std::size_t test) {
    auto rng = Rng::stream(42, "bench/loglik");
    auto m = scoring::LogLikMatrix::zeros(draws, test);
    for (auto& v : m.values) v = -5.0 + 4.0 * rng.uniform();
    return m;
}

diagnostics::ChainDraws make_chains(std::size_t chains, std::size_t draws) {
    diagnostics::ChainDraws cd;
    cd.param_names = {"theta"};
    cd.draws_per_chain = draws;
    auto rng = Rng::stream(42, "bench/chains");
    for (std::size_t c = 0; c < chains; ++c) {
        std::vector<double> vals(draws);
        double prev = 0.0;
        for (auto& v : vals) {
            // AR(1) with rho 0.5, a realistic mixing profile
            prev = 0.5 * prev + rng.normal();
            v = prev;
        }
        cd.chain_values.push_back(std::move(vals));
        cd.divergent.emplace_back(draws, 0);
    }
    return cd;
}

void BM_nlpd(benchmark::State& state) {
    const auto m = make_loglik(static_cast<std::size_t>(state.range(0)),
                               static_cast<std::size_t>(state.range(1)));
    for (auto _ : state) benchmark::DoNotOptimize(scoring::nlpd(m));
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}
BENCHMARK(BM_nlpd)->Args({1000, 200})->Args({4000, 200})->Args({4000, 1000});

void BM_split_rhat(benchmark::State& state) {
    const auto cd = make_chains(4, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(diagnostics::split_rhat(cd, "theta"));
}
BENCHMARK(BM_split_rhat)->Arg(1000)->Arg(10000);

void BM_ess(benchmark::State& state) {
    const auto cd = make_chains(4, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(diagnostics::ess(cd, "theta"));
}
BENCHMARK(BM_ess)->Arg(1000)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
