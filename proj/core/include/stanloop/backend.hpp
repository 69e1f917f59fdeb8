#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "stanloop/diagnostics.hpp"
#include "stanloop/io.hpp"
#include "stanloop/scoring.hpp"

namespace stanloop::backend {

/// Candidate model program text, content-addressed.
struct ModelSource {
    std::string text;
    std::string hash;  // sha256 over the text bytes

    static ModelSource from_text(std::string text);
    static ModelSource from_file(const std::filesystem::path& path);
};

struct SamplerConfig {
    int chains = 4;
    int warmup_draws = 1000;
    int sampling_draws = 1000;  // post-warmup, per chain
    std::uint64_t seed = 1;
    int parallel_chains = 4;

    void validate() const;
};

/// Posterior draws plus the extracted log_lik matrix, flattened across
/// chains in chain-major order. Produced by any backend.
struct FitResult {
    diagnostics::ChainDraws draws;
    scoring::LogLikMatrix loglik;
    double wall_time_s = 0.0;
    std::string backend_id;
};

/// Value types accepted by the external sampler's JSON data format.
/// Integers and reals are distinguished by the dataset schema, not by
/// value inspection.
using DataValue = std::variant<long, double, std::vector<long>, std::vector<double>,
                               std::vector<std::vector<double>>>;
using StanData = std::map<std::string, DataValue>;

void write_data_file(const StanData& data, const std::filesystem::path& path);

/// Sampler output CSV: '#' comment lines stripped, header row, one row
/// per draw. Malformed rows raise parse_error with the line number.
io::Table read_chain_csv(const std::filesystem::path& path);

/// Shared assembly: all chains must agree on columns and draw counts;
/// divergent__ and log_lik.* columns are required contract surface.
FitResult assemble_fit(const std::vector<io::Table>& chain_tables, std::string backend_id,
                       double wall_time_s);

/// Drives an external CmdStan installation.
class CmdStanBackend {
public:
    struct Executable {
        std::filesystem::path exe;
        std::string model_hash;
    };

    CmdStanBackend(std::filesystem::path cmdstan_root, std::filesystem::path cache_dir);

    /// STANLOOP_CMDSTAN, then CMDSTAN. Empty when neither is set.
    static std::optional<std::filesystem::path> discover_root();

    /// Compile (or cache-hit by content hash). Throws compile_error
    /// carrying the full compiler message on failure.
    Executable compile(const ModelSource& model);

    /// One sampler process per chain, seeds derived as seed + chain
    /// index, deterministic chain ordering.
    FitResult sample(const Executable& exe, const StanData& data, const SamplerConfig& cfg);

    const std::filesystem::path& root() const { return root_; }

private:
    std::filesystem::path root_;
    std::filesystem::path cache_dir_;
};

/// Grid-approximation test backend: no external sampler needed.
struct GridSpec {
    std::vector<std::string> param_names;              // at most 3
    std::vector<std::pair<double, double>> bounds;     // finite, one per param
    std::size_t resolution = 64;                       // >= 16 per dimension
};

using LogDensityFn = std::function<double(const std::vector<double>&)>;
/// (parameter vector, test index) -> log p(y_test[i] | params)
using LogLikFn = std::function<double(const std::vector<double>&, std::size_t)>;

/// Evaluates the unnormalized log posterior on the grid, samples
/// chains*sampling_draws cells from the normalized categorical, and
/// evaluates loglik_fn per draw per test point. No divergences.
FitResult grid_fit(const LogDensityFn& log_posterior, const GridSpec& grid,
                   const LogLikFn& loglik_fn, std::size_t n_test, const SamplerConfig& cfg);

}  // namespace stanloop::backend
