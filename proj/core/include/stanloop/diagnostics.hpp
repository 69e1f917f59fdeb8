#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace stanloop::diagnostics {

/// Posterior draws grouped by chain. Every chain has the same number of
/// draws and the same parameter names in the same order.
struct ChainDraws {
    std::vector<std::string> param_names;               // P
    std::size_t draws_per_chain = 0;                    // D
    std::vector<std::vector<double>> chain_values;      // per chain: D*P, draw-major
    std::vector<std::vector<char>> divergent;           // per chain: D flags

    std::size_t n_chains() const { return chain_values.size(); }
    double value(std::size_t chain, std::size_t draw, std::size_t param) const {
        return chain_values[chain][draw * param_names.size() + param];
    }
    std::size_t param_index(std::string_view name) const;  // throws invalid_input

    /// Shape + minimum-draw-count checks (D >= 4 for split halves).
    void validate() const;
};

struct ParamDiagnostics {
    double rhat = 1.0;
    double ess = 1.0;
    /// Zero-variance parameter: rhat pinned to 1, ess to 1.
    bool degenerate = false;
};

enum class Health { ok, warn, fail };

std::string to_string(Health h);

struct HealthThresholds {
    double warn_rhat = 1.01;
    double fail_rhat = 1.05;
    /// Fraction of total post-warmup draws.
    double fail_divergence_frac = 0.005;
};

struct DiagnosticsReport {
    double max_rhat = 1.0;
    double min_ess = 0.0;
    long divergences = 0;
    std::map<std::string, ParamDiagnostics> per_param;
    Health health = Health::ok;

    std::string to_json() const;  // {"max_rhat":..,"min_ess":..,"divergences":..,"health":".."}
    std::string pretty() const;   // human-readable evaluation summary block
};

/// Split potential-scale-reduction for one parameter: each chain is
/// split into halves, giving 2M sequences of length D/2.
double split_rhat(const ChainDraws& draws, std::string_view param);
ParamDiagnostics split_rhat_detail(const ChainDraws& draws, std::string_view param);

/// Effective sample size: M*D / (1 + 2 sum_t rho_t), rho_t the
/// chain-averaged autocorrelation, truncated at the first lag where
/// rho_t + rho_{t+1} < 0. Clipped to [1, M*D].
double ess(const ChainDraws& draws, std::string_view param);

/// Combined rhat + ess (shares the autocovariance pass).
ParamDiagnostics param_diagnostics(const ChainDraws& draws, std::string_view param);

/// Total divergent transitions across all chains.
long divergence_count(const ChainDraws& draws);

/// Per-parameter rhat/ess for every model parameter (columns ending in
/// "__" are sampler-internal and skipped), aggregated with a health
/// classification.
DiagnosticsReport summarize(const ChainDraws& draws, const HealthThresholds& thr = {});

}  // namespace stanloop::diagnostics
