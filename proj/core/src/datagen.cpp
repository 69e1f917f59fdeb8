#include "stanloop/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "stanloop/errors.hpp"
#include "stanloop/rng.hpp"
#include "stanloop/scoring.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace stanloop::datagen {

void DatasetSpec::validate() const {
    switch (kind) {
        case DatasetKind::regression_1d:
            if (n_train == 0 || n_test == 0)
                throw invalid_input("regression spec: train/test counts must be positive");
            if (contamination_rate < 0.0 || contamination_rate >= 1.0)
                throw invalid_input("regression spec: contamination rate must be in [0,1)");
            if (contamination_lo > contamination_hi || contamination_lo < 0.0)
                throw invalid_input("regression spec: bad contamination magnitude range");
            break;
        case DatasetKind::hierarchical:
        case DatasetKind::varying_slopes:
            if (n_groups == 0 || train_per_group == 0 || test_per_group == 0)
                throw invalid_input("grouped spec: group counts must be positive");
            break;
        case DatasetKind::soccer:
            if (split_matchday < 1 || split_matchday >= 34)
                throw invalid_input("soccer spec: split matchday must be in [1,34)");
            break;
    }
    if (name.empty()) throw invalid_input("dataset spec: empty name");
}

DatasetSpec DatasetSpec::preset(std::string_view preset_name, std::uint64_t seed) {
    DatasetSpec s;
    s.seed = seed;
    if (preset_name == "regression-1d-large") {
        s.kind = DatasetKind::regression_1d;
        s.name = "regression-1d-large";
        s.n_train = 500;
        s.n_test = 200;
        s.contamination_rate = 0.06;
    } else if (preset_name == "regression-1d-small") {
        s.kind = DatasetKind::regression_1d;
        s.name = "regression-1d-small";
        s.n_train = 68;
        s.n_test = 30;
        s.contamination_rate = 0.06;
    } else if (preset_name == "hierarchical-small") {
        s.kind = DatasetKind::hierarchical;
        s.name = "hierarchical-small";
        s.n_groups = 20;
        s.train_per_group = 8;
        s.test_per_group = 2;
    } else if (preset_name == "hierarchical-large") {
        s.kind = DatasetKind::hierarchical;
        s.name = "hierarchical-large";
        s.n_groups = 20;
        s.train_per_group = 40;
        s.test_per_group = 10;
    } else if (preset_name == "varying-slopes") {
        s.kind = DatasetKind::varying_slopes;
        s.name = "varying-slopes";
        s.n_groups = 15;
        s.train_per_group = 20;
        s.test_per_group = 5;
    } else if (preset_name == "soccer") {
        s.kind = DatasetKind::soccer;
        s.name = "soccer";
        s.split_matchday = 23;
    } else {
        throw invalid_input("unknown dataset preset '" + std::string(preset_name) + "'");
    }
    return s;
}

std::vector<std::string> DatasetSpec::preset_names() {
    return {"regression-1d-large", "regression-1d-small", "hierarchical-small",
            "hierarchical-large",  "varying-slopes",      "soccer"};
}

namespace {

std::string evaluation_section(const std::string& name) {
    std::ostringstream out;
    out << "## Evaluation\n\n"
        << "```\n"
        << "stanloop evaluate --dataset " << name << " \\\n"
        << "    --notes \"...\" --rationale \"...\"\n"
        << "```\n\n"
        << "Your model must output a `log_lik` vector of length `N_test`\n"
        << "in the generated quantities block.\n";
    return out.str();
}

std::string regression_descriptor(const DatasetSpec& s) {
    std::ostringstream out;
    out << "# Dataset: " << s.name << "\n\n"
        << "## Overview\n\n"
        << "Observations of a continuous predictor and a continuous response.\n"
        << "The goal is to predict `response` for held-out test observations.\n\n"
        << "## Data Format\n\n"
        << "`train.csv` columns:\n"
        << "- `predictor` - continuous predictor variable\n"
        << "- `response` - continuous response variable (target)\n\n"
        << s.n_train << " training observations.\n"
        << s.n_test << " test observations (held out).\n\n"
        << "## Data Interface\n\n"
        << "The evaluation harness passes the following to Stan:\n\n"
        << "```\n"
        << "int<lower=0> N_train;\n"
        << "int<lower=0> N_test;\n"
        << "vector[N_train] predictor_train;\n"
        << "vector[N_test] predictor_test;\n"
        << "vector[N_train] response_train;\n"
        << "vector[N_test] response_test;\n"
        << "```\n\n"
        << evaluation_section(s.name);
    return out.str();
}

std::string grouped_descriptor(const DatasetSpec& s, bool with_input) {
    const std::size_t n_train = s.n_groups * s.train_per_group;
    const std::size_t n_test = s.n_groups * s.test_per_group;
    std::ostringstream out;
    out << "# Dataset: " << s.name << "\n\n"
        << "## Overview\n\n"
        << "Observations grouped by unit. The goal is to predict `effect` for\n"
        << "held-out test observations.\n\n"
        << "## Data Format\n\n"
        << "`train.csv` columns:\n"
        << "- `unit` - integer group index (1.." << s.n_groups << ")\n";
    if (with_input) out << "- `input` - continuous predictor variable\n";
    out << "- `effect` - continuous response variable (target)\n\n"
        << n_train << " training observations.\n"
        << n_test << " test observations (held out).\n\n"
        << "## Data Interface\n\n"
        << "The evaluation harness passes the following to Stan:\n\n"
        << "```\n"
        << "int<lower=0> N_train;\n"
        << "int<lower=0> N_test;\n"
        << "int<lower=1> J;\n"
        << "array[N_train] int<lower=1, upper=J> unit_train;\n"
        << "array[N_test] int<lower=1, upper=J> unit_test;\n";
    if (with_input)
        out << "vector[N_train] input_train;\n"
            << "vector[N_test] input_test;\n";
    out << "vector[N_train] effect_train;\n"
        << "vector[N_test] effect_test;\n"
        << "```\n\n"
        << evaluation_section(s.name);
    return out.str();
}

std::string soccer_descriptor(const DatasetSpec& s, std::size_t n_train, std::size_t n_test,
                              const std::vector<long>& team_ids) {
    std::ostringstream out;
    out << "# Dataset: " << s.name << "\n\n"
        << "## Overview\n\n"
        << "Match results for one league season: 18 teams, goals scored by the\n"
        << "home and away side. The goal is to predict goal counts for held-out\n"
        << "future matches (temporal split at matchday " << s.split_matchday << ").\n\n"
        << "## Data Format\n\n"
        << "`train.csv` columns:\n"
        << "- `home_team_id`, `away_team_id` - team index (1..18)\n"
        << "- `home_goals`, `away_goals` - goals scored (non-negative integers)\n"
        << "- `matchday` - round of the season (1..34)\n\n"
        << n_train << " training matches (matchdays 1.." << s.split_matchday << ").\n"
        << n_test << " test matches.\n\n"
        << "Team index mapping (index: source id):\n";
    for (std::size_t i = 0; i < team_ids.size(); ++i)
        out << "- " << (i + 1) << ": " << team_ids[i] << "\n";
    out << "\n## Data Interface\n\n"
        << "The evaluation harness passes the following to Stan:\n\n"
        << "```\n"
        << "int<lower=0> N_train;\n"
        << "int<lower=0> N_test;\n"
        << "int<lower=1> n_teams;\n"
        << "array[N_train] int<lower=1> home_team_train;\n"
        << "array[N_train] int<lower=1> away_team_train;\n"
        << "array[N_train] int<lower=0> home_goals_train;\n"
        << "array[N_train] int<lower=0> away_goals_train;\n"
        << "array[N_test] int<lower=1> home_team_test;\n"
        << "array[N_test] int<lower=1> away_team_test;\n"
        << "array[N_test] int<lower=0> home_goals_test;\n"
        << "array[N_test] int<lower=0> away_goals_test;\n"
        << "```\n\n"
        << evaluation_section(s.name);
    return out.str();
}

}  // namespace

GeneratedDataset gen_regression_1d(const DatasetSpec& spec) {
    spec.validate();
    if (spec.kind != DatasetKind::regression_1d)
        throw invalid_input("gen_regression_1d: wrong dataset kind");

    GeneratedDataset ds;
    ds.spec = spec;

    Rng x_rng = Rng::stream(spec.seed, "regression_1d/x");
    Rng noise_rng = Rng::stream(spec.seed, "regression_1d/noise");
    Rng contam_rng = Rng::stream(spec.seed, "regression_1d/contamination");

    auto draw_rows = [&](std::size_t n, io::Table& t) {
        for (std::size_t i = 0; i < n; ++i) {
            const double x = x_rng.uniform(-5.0, 7.0);
            const double y = scoring::dgp_mean(x) + scoring::dgp_sigma(x) * noise_rng.normal();
            t.rows.push_back({x, y});
        }
    };

    ds.train.columns = {"predictor", "response"};
    ds.test.columns = {"predictor", "response"};
    draw_rows(spec.n_train, ds.train);
    draw_rows(spec.n_test, ds.test);  // test rows stay clean

    // contaminate exactly round(rate * n_train) training rows
    const std::size_t n_contam =
        static_cast<std::size_t>(std::llround(spec.contamination_rate *
                                              static_cast<double>(spec.n_train)));
    std::vector<std::size_t> idx(spec.n_train);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < n_contam; ++i) {
        const std::size_t j = i + contam_rng.below(idx.size() - i);
        std::swap(idx[i], idx[j]);
        const double shift =
            contam_rng.sign() * contam_rng.uniform(spec.contamination_lo, spec.contamination_hi);
        ds.train.rows[idx[i]][1] += shift;
    }

    ds.oracle.available = true;
    std::vector<double> y;
    for (const auto& row : ds.test.rows) {
        ds.oracle.test_mean.push_back(scoring::dgp_mean(row[0]));
        ds.oracle.test_sd.push_back(scoring::dgp_sigma(row[0]));
        y.push_back(row[1]);
    }
    ds.oracle.nlpd = scoring::oracle_nlpd_gaussian(y, ds.oracle.test_mean, ds.oracle.test_sd);
    json tp;
    tp["mean_fn"] = {{"amplitude", 2.0}, {"frequency", 1.2}, {"slope", 0.3}};
    tp["noise_fn"] = {
        {"base", 0.3}, {"bump_amplitude", 0.8}, {"bump_center", 3.0}, {"bump_width", 1.5}};
    ds.oracle.true_params_json = tp.dump();

    ds.descriptor = regression_descriptor(spec);
    return ds;
}

GeneratedDataset gen_hierarchical(const DatasetSpec& spec) {
    spec.validate();
    if (spec.kind != DatasetKind::hierarchical)
        throw invalid_input("gen_hierarchical: wrong dataset kind");

    GeneratedDataset ds;
    ds.spec = spec;

    Rng mu_rng = Rng::stream(spec.seed, "hierarchical/group_means");
    Rng noise_rng = Rng::stream(spec.seed, "hierarchical/noise");

    std::vector<double> mu(spec.n_groups);
    for (auto& m : mu) m = mu_rng.normal();

    ds.train.columns = {"unit", "effect"};
    ds.test.columns = {"unit", "effect"};
    for (std::size_t j = 0; j < spec.n_groups; ++j) {
        for (std::size_t i = 0; i < spec.train_per_group; ++i)
            ds.train.rows.push_back({static_cast<double>(j + 1), mu[j] + noise_rng.normal()});
        for (std::size_t i = 0; i < spec.test_per_group; ++i)
            ds.test.rows.push_back({static_cast<double>(j + 1), mu[j] + noise_rng.normal()});
    }

    ds.oracle.available = true;
    std::vector<double> y;
    if (spec.hier_oracle == HierOracle::true_params) {
        for (const auto& row : ds.test.rows) {
            const std::size_t j = static_cast<std::size_t>(row[0]) - 1;
            ds.oracle.test_mean.push_back(mu[j]);
            ds.oracle.test_sd.push_back(1.0);
            y.push_back(row[1]);
        }
    } else {
        // posterior predictive under the true hyperpriors mu_j ~ N(0,1),
        // noise sd 1: mean = n_j ybar / (n_j + 1), var = 1/(n_j+1) + 1
        std::vector<double> sums(spec.n_groups, 0.0);
        for (const auto& row : ds.train.rows)
            sums[static_cast<std::size_t>(row[0]) - 1] += row[1];
        const double nj = static_cast<double>(spec.train_per_group);
        for (const auto& row : ds.test.rows) {
            const std::size_t j = static_cast<std::size_t>(row[0]) - 1;
            ds.oracle.test_mean.push_back(sums[j] / (nj + 1.0));
            ds.oracle.test_sd.push_back(std::sqrt(1.0 + 1.0 / (nj + 1.0)));
            y.push_back(row[1]);
        }
    }
    ds.oracle.nlpd = scoring::oracle_nlpd_gaussian(y, ds.oracle.test_mean, ds.oracle.test_sd);
    json tp;
    tp["group_means"] = mu;
    tp["noise_sd"] = 1.0;
    tp["oracle_kind"] =
        spec.hier_oracle == HierOracle::true_params ? "true_params" : "posterior_predictive";
    ds.oracle.true_params_json = tp.dump();

    ds.descriptor = grouped_descriptor(spec, /*with_input=*/false);
    return ds;
}

GeneratedDataset gen_varying_slopes(const DatasetSpec& spec) {
    spec.validate();
    if (spec.kind != DatasetKind::varying_slopes)
        throw invalid_input("gen_varying_slopes: wrong dataset kind");

    GeneratedDataset ds;
    ds.spec = spec;

    Rng alpha_rng = Rng::stream(spec.seed, "varying_slopes/intercepts");
    Rng beta_rng = Rng::stream(spec.seed, "varying_slopes/slopes");
    Rng x_rng = Rng::stream(spec.seed, "varying_slopes/x");
    Rng noise_rng = Rng::stream(spec.seed, "varying_slopes/noise");

    const double sigma = 0.8;
    std::vector<double> alpha(spec.n_groups), beta(spec.n_groups);
    for (auto& a : alpha) a = alpha_rng.normal(2.0, 1.0);
    for (auto& b : beta) b = beta_rng.normal(-0.5, 0.7);

    ds.train.columns = {"unit", "input", "effect"};
    ds.test.columns = {"unit", "input", "effect"};
    auto draw_row = [&](std::size_t j, io::Table& t) {
        const double x = x_rng.uniform(-3.0, 3.0);
        const double y = alpha[j] + beta[j] * x + sigma * noise_rng.normal();
        t.rows.push_back({static_cast<double>(j + 1), x, y});
    };
    for (std::size_t j = 0; j < spec.n_groups; ++j) {
        for (std::size_t i = 0; i < spec.train_per_group; ++i) draw_row(j, ds.train);
        for (std::size_t i = 0; i < spec.test_per_group; ++i) draw_row(j, ds.test);
    }

    ds.oracle.available = true;
    std::vector<double> y;
    for (const auto& row : ds.test.rows) {
        const std::size_t j = static_cast<std::size_t>(row[0]) - 1;
        ds.oracle.test_mean.push_back(alpha[j] + beta[j] * row[1]);
        ds.oracle.test_sd.push_back(sigma);
        y.push_back(row[2]);
    }
    ds.oracle.nlpd = scoring::oracle_nlpd_gaussian(y, ds.oracle.test_mean, ds.oracle.test_sd);
    json tp;
    tp["intercepts"] = alpha;
    tp["slopes"] = beta;
    tp["noise_sd"] = sigma;
    ds.oracle.true_params_json = tp.dump();

    ds.descriptor = grouped_descriptor(spec, /*with_input=*/true);
    return ds;
}

GeneratedDataset load_soccer(const fs::path& csv_path, int split_matchday) {
    if (split_matchday < 1 || split_matchday >= 34)
        throw invalid_input("load_soccer: split matchday must be in [1,34)");

    const auto raw = io::read_numeric_csv(csv_path);
    const std::size_t c_home = raw.col_index("home_team_id");
    const std::size_t c_away = raw.col_index("away_team_id");
    const std::size_t c_hg = raw.col_index("home_goals");
    const std::size_t c_ag = raw.col_index("away_goals");
    const std::size_t c_md = raw.col_index("matchday");

    auto require_int = [&](double v, const char* what, std::size_t row) -> long {
        if (v != std::floor(v) || v < 0.0)
            throw parse_error(std::string("soccer data: non-integer ") + what,
                              static_cast<long>(row + 2));  // +2: header + 1-based
        return static_cast<long>(v);
    };

    std::set<long> ids;
    for (std::size_t r = 0; r < raw.rows.size(); ++r) {
        ids.insert(require_int(raw.rows[r][c_home], "home_team_id", r));
        ids.insert(require_int(raw.rows[r][c_away], "away_team_id", r));
        require_int(raw.rows[r][c_hg], "home_goals", r);
        require_int(raw.rows[r][c_ag], "away_goals", r);
        require_int(raw.rows[r][c_md], "matchday", r);
    }
    if (ids.size() != 18)
        throw parse_error("soccer data: expected 18 distinct teams, found " +
                          std::to_string(ids.size()));

    GeneratedDataset ds;
    ds.spec.kind = DatasetKind::soccer;
    ds.spec.name = "soccer";
    ds.spec.split_matchday = split_matchday;
    ds.team_ids.assign(ids.begin(), ids.end());
    auto team_index = [&](long id) {
        const auto it = std::lower_bound(ds.team_ids.begin(), ds.team_ids.end(), id);
        return static_cast<double>(it - ds.team_ids.begin() + 1);
    };

    ds.train.columns = {"home_team_id", "away_team_id", "home_goals", "away_goals", "matchday"};
    ds.test.columns = ds.train.columns;
    for (std::size_t r = 0; r < raw.rows.size(); ++r) {
        const long md = require_int(raw.rows[r][c_md], "matchday", r);
        if (md < 1 || md > 34)
            throw parse_error("soccer data: matchday out of range", static_cast<long>(r + 2));
        std::vector<double> row = {
            team_index(static_cast<long>(raw.rows[r][c_home])),
            team_index(static_cast<long>(raw.rows[r][c_away])),
            static_cast<double>(require_int(raw.rows[r][c_hg], "home_goals", r)),
            static_cast<double>(require_int(raw.rows[r][c_ag], "away_goals", r)),
            static_cast<double>(md)};
        (md <= split_matchday ? ds.train : ds.test).rows.push_back(std::move(row));
    }
    if (ds.train.rows.empty()) throw invalid_input("load_soccer: empty training split");
    if (ds.test.rows.empty()) throw invalid_input("load_soccer: empty test split");

    ds.oracle.available = false;  // real data
    ds.descriptor = soccer_descriptor(ds.spec, ds.train.rows.size(), ds.test.rows.size(),
                                      ds.team_ids);
    return ds;
}

GeneratedDataset generate(const DatasetSpec& spec) {
    switch (spec.kind) {
        case DatasetKind::regression_1d: return gen_regression_1d(spec);
        case DatasetKind::hierarchical: return gen_hierarchical(spec);
        case DatasetKind::varying_slopes: return gen_varying_slopes(spec);
        case DatasetKind::soccer:
            throw invalid_input("soccer datasets load from CSV; use load_soccer()");
    }
    throw invalid_input("generate: unknown dataset kind");
}

DatasetPaths emit_dataset(const GeneratedDataset& ds, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir / "protected", ec);
    if (ec) throw std::runtime_error("cannot create " + (dir / "protected").string() + ": " +
                                     ec.message());

    DatasetPaths paths;
    paths.train_csv = dir / "train.csv";
    paths.descriptor_md = dir / "dataset.md";
    paths.test_csv = dir / "protected" / "test.csv";
    paths.oracle_json = dir / "protected" / "oracle.json";

    io::write_csv(ds.train, paths.train_csv);
    io::atomic_write(paths.descriptor_md, ds.descriptor);
    io::write_csv(ds.test, paths.test_csv);

    json oracle;
    oracle["available"] = ds.oracle.available;
    if (ds.oracle.available) {
        oracle["nlpd"] = ds.oracle.nlpd;
        oracle["test_mean"] = ds.oracle.test_mean;
        oracle["test_sd"] = ds.oracle.test_sd;
        oracle["true_params"] = json::parse(ds.oracle.true_params_json);
    }
    io::atomic_write(paths.oracle_json, oracle.dump(2) + "\n");
    return paths;
}

double recompute_oracle_nlpd(const GeneratedDataset& ds) {
    if (!ds.oracle.available) throw invalid_input("no oracle for this dataset");
    std::vector<double> y;
    const std::size_t resp = ds.test.has_column("response") ? ds.test.col_index("response")
                                                            : ds.test.col_index("effect");
    for (const auto& row : ds.test.rows) y.push_back(row[resp]);
    return scoring::oracle_nlpd_gaussian(y, ds.oracle.test_mean, ds.oracle.test_sd);
}

}  // namespace stanloop::datagen
