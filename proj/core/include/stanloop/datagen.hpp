#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "stanloop/io.hpp"

namespace stanloop::datagen {

enum class DatasetKind { regression_1d, hierarchical, varying_slopes, soccer };

enum class HierOracle {
    /// Predictive N(mu_j, 1) with the true group means known (default).
    true_params,
    /// Posterior predictive given the training rows and true
    /// hyperpriors: N(m_j, sqrt(1 + v_j)).
    posterior_predictive,
};

struct DatasetSpec {
    DatasetKind kind = DatasetKind::regression_1d;
    std::string name;  // dataset directory name
    std::uint64_t seed = 0;

    // regression_1d
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    double contamination_rate = 0.0;
    double contamination_lo = 10.0;
    double contamination_hi = 15.0;

    // hierarchical / varying_slopes
    std::size_t n_groups = 0;
    std::size_t train_per_group = 0;
    std::size_t test_per_group = 0;

    // soccer
    int split_matchday = 23;

    HierOracle hier_oracle = HierOracle::true_params;

    void validate() const;

    /// Named presets: regression-1d-large, regression-1d-small,
    /// hierarchical-small, hierarchical-large, varying-slopes, soccer.
    static DatasetSpec preset(std::string_view preset_name, std::uint64_t seed);
    static std::vector<std::string> preset_names();
};

/// Gaussian per-test-point predictive under the true process, plus the
/// resulting oracle NLPD. Not available for real data.
struct OracleInfo {
    bool available = false;
    std::vector<double> test_mean;
    std::vector<double> test_sd;
    double nlpd = 0.0;
    std::string true_params_json;  // kind-specific true parameters
};

struct GeneratedDataset {
    DatasetSpec spec;
    io::Table train;
    io::Table test;
    OracleInfo oracle;
    std::string descriptor;           // dataset.md text
    std::vector<long> team_ids;       // soccer: original id for team 1..18
};

struct DatasetPaths {
    std::filesystem::path train_csv;
    std::filesystem::path descriptor_md;
    std::filesystem::path test_csv;
    std::filesystem::path oracle_json;
};

GeneratedDataset gen_regression_1d(const DatasetSpec& spec);
GeneratedDataset gen_hierarchical(const DatasetSpec& spec);
GeneratedDataset gen_varying_slopes(const DatasetSpec& spec);

/// Real match data: matchday <= split_matchday goes to train. Expects
/// columns home_team_id, away_team_id, home_goals, away_goals,
/// matchday with exactly 18 distinct teams.
GeneratedDataset load_soccer(const std::filesystem::path& csv_path, int split_matchday);

/// Dispatch on spec.kind (soccer requires load_soccer directly).
GeneratedDataset generate(const DatasetSpec& spec);

/// Writes train.csv, dataset.md, protected/test.csv and
/// protected/oracle.json under dir. Byte-stable for fixed spec + seed.
DatasetPaths emit_dataset(const GeneratedDataset& ds, const std::filesystem::path& dir);

/// Recompute the oracle NLPD from emitted oracle metadata + test rows.
double recompute_oracle_nlpd(const GeneratedDataset& ds);

}  // namespace stanloop::datagen
