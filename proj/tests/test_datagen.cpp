#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "helpers.hpp"
#include "stanloop/datagen.hpp"
#include "stanloop/errors.hpp"
#include "stanloop/io.hpp"

using namespace stanloop;
using datagen::DatasetSpec;

namespace {

std::string make_soccer_csv(const std::filesystem::path& dir, int n_teams = 18) {
    std::ostringstream out;
    out << "home_team_id,away_team_id,home_goals,away_goals,matchday\n";
    testutil::Lcg g(77);
    for (int md = 1; md <= 34; ++md)
        for (int m = 0; m < n_teams / 2; ++m) {
            const int home = 100 + (m * 2 + md) % n_teams;
            int away = 100 + (m * 2 + 1 + md) % n_teams;
            if (away == home) away = 100 + (away - 100 + 1) % n_teams;
            out << home << "," << away << "," << static_cast<int>(g.u() * 5) << ","
                << static_cast<int>(g.u() * 4) << "," << md << "\n";
        }
    const auto p = dir / "matches.csv";
    std::ofstream f(p);
    f << out.str();
    return p.string();
}

}  // namespace

TEST_CASE("presets carry the documented sizes") {
    auto s = DatasetSpec::preset("regression-1d-large", 1);
    CHECK(s.n_train == 500);
    CHECK(s.n_test == 200);
    CHECK(s.contamination_rate == 0.06);

    s = DatasetSpec::preset("regression-1d-small", 1);
    CHECK(s.n_train == 68);
    CHECK(s.n_test == 30);

    s = DatasetSpec::preset("hierarchical-small", 1);
    CHECK(s.n_groups * s.train_per_group == 160);
    CHECK(s.n_groups * s.test_per_group == 40);

    s = DatasetSpec::preset("hierarchical-large", 1);
    CHECK(s.n_groups * s.train_per_group == 800);
    CHECK(s.n_groups * s.test_per_group == 200);

    s = DatasetSpec::preset("varying-slopes", 1);
    CHECK(s.n_groups == 15);
    CHECK(s.n_groups * (s.train_per_group + s.test_per_group) == 375);

    CHECK_THROWS_AS(DatasetSpec::preset("nope", 1), invalid_input);
}

TEST_CASE("generation is bit-stable under a fixed seed") {
    testutil::TempDir tmp("datagen-stable");
    for (const char* preset :
         {"regression-1d-small", "hierarchical-small", "varying-slopes"}) {
        const auto a = datagen::generate(DatasetSpec::preset(preset, 42));
        const auto b = datagen::generate(DatasetSpec::preset(preset, 42));
        CHECK(a.train.rows == b.train.rows);
        CHECK(a.test.rows == b.test.rows);
        CHECK(a.oracle.nlpd == b.oracle.nlpd);
        CHECK(a.descriptor == b.descriptor);

        const auto dir_a = tmp.path() / (std::string(preset) + "-a");
        const auto dir_b = tmp.path() / (std::string(preset) + "-b");
        datagen::emit_dataset(a, dir_a);
        datagen::emit_dataset(b, dir_b);
        for (const char* f : {"train.csv", "dataset.md"})
            CHECK(io::read_file(dir_a / f) == io::read_file(dir_b / f));
        for (const char* f : {"protected/test.csv", "protected/oracle.json"})
            CHECK(io::read_file(dir_a / f) == io::read_file(dir_b / f));

        const auto c = datagen::generate(DatasetSpec::preset(preset, 43));
        CHECK(a.train.rows != c.train.rows);
    }
}

TEST_CASE("contamination shifts exactly round(rate*n) training rows, test stays clean") {
    auto spec = DatasetSpec::preset("regression-1d-large", 9);
    auto clean_spec = spec;
    clean_spec.contamination_rate = 0.0;

    const auto dirty = datagen::gen_regression_1d(spec);
    const auto clean = datagen::gen_regression_1d(clean_spec);

    CHECK(dirty.test.rows == clean.test.rows);

    std::size_t shifted = 0;
    for (std::size_t i = 0; i < dirty.train.rows.size(); ++i) {
        CHECK(dirty.train.rows[i][0] == clean.train.rows[i][0]);  // x untouched
        const double d = dirty.train.rows[i][1] - clean.train.rows[i][1];
        if (d != 0.0) {
            ++shifted;
            CHECK(std::abs(d) >= 10.0);
            CHECK(std::abs(d) <= 15.0);
        }
    }
    CHECK(shifted == static_cast<std::size_t>(std::llround(0.06 * 500)));
}

TEST_CASE("regression predictors stay in the sampling interval") {
    const auto ds = datagen::gen_regression_1d(DatasetSpec::preset("regression-1d-large", 3));
    for (const auto& row : ds.train.rows) {
        CHECK(row[0] >= -5.0);
        CHECK(row[0] < 7.0);
    }
}

TEST_CASE("hierarchical moments match the generative process") {
    auto spec = DatasetSpec::preset("hierarchical-small", 5);
    spec.n_groups = 300;
    spec.train_per_group = 40;
    spec.test_per_group = 2;
    const auto ds = datagen::gen_hierarchical(spec);

    // group means drawn from N(0,1)
    std::vector<double> group_sum(spec.n_groups, 0.0);
    for (const auto& row : ds.train.rows)
        group_sum[static_cast<std::size_t>(row[0]) - 1] += row[1];
    double m = 0.0, v = 0.0;
    for (double s : group_sum) m += s / 40.0;
    m /= spec.n_groups;
    for (double s : group_sum) v += (s / 40.0 - m) * (s / 40.0 - m);
    v /= (spec.n_groups - 1);
    CHECK(m == doctest::Approx(0.0).scale(1.0).epsilon(0.15));
    // observed group-mean variance = 1 (means) + 1/40 (noise)
    CHECK(v == doctest::Approx(1.025).epsilon(0.2));

    // residual noise sd 1
    double rss = 0.0;
    for (const auto& row : ds.train.rows) {
        const double r = row[1] - group_sum[static_cast<std::size_t>(row[0]) - 1] / 40.0;
        rss += r * r;
    }
    CHECK(std::sqrt(rss / ds.train.rows.size()) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("hierarchical oracle variants agree with their definitions") {
    auto spec = DatasetSpec::preset("hierarchical-small", 11);
    const auto known = datagen::gen_hierarchical(spec);
    CHECK(known.oracle.test_sd[0] == 1.0);

    spec.hier_oracle = datagen::HierOracle::posterior_predictive;
    const auto post = datagen::gen_hierarchical(spec);
    CHECK(post.train.rows == known.train.rows);  // same data, different oracle
    const double nj = 8.0;
    CHECK(post.oracle.test_sd[0] == doctest::Approx(std::sqrt(1.0 + 1.0 / (nj + 1.0))));
    CHECK(post.oracle.nlpd != known.oracle.nlpd);
}

TEST_CASE("oracle NLPD round-trips through the emitted metadata") {
    for (const char* preset :
         {"regression-1d-small", "hierarchical-small", "varying-slopes"}) {
        const auto ds = datagen::generate(DatasetSpec::preset(preset, 29));
        CHECK(datagen::recompute_oracle_nlpd(ds) == doctest::Approx(ds.oracle.nlpd).epsilon(1e-10));
    }
}

TEST_CASE("varying slopes: columns and group structure") {
    const auto ds = datagen::gen_varying_slopes(DatasetSpec::preset("varying-slopes", 13));
    CHECK(ds.train.columns == std::vector<std::string>{"unit", "input", "effect"});
    std::set<double> units;
    for (const auto& row : ds.train.rows) {
        units.insert(row[0]);
        CHECK(row[1] >= -3.0);
        CHECK(row[1] < 3.0);
    }
    CHECK(units.size() == 15);
    CHECK(ds.train.rows.size() == 300);
    CHECK(ds.test.rows.size() == 75);
}

TEST_CASE("soccer loader: split, remapping, and validation") {
    testutil::TempDir tmp("datagen-soccer");
    const auto csv = make_soccer_csv(tmp.path());

    const auto ds = datagen::load_soccer(csv, 23);
    CHECK(ds.train.rows.size() == 23 * 9);
    CHECK(ds.test.rows.size() == 11 * 9);
    CHECK_FALSE(ds.oracle.available);
    CHECK(ds.team_ids.size() == 18);
    for (const auto& row : ds.train.rows) {
        CHECK(row[0] >= 1.0);
        CHECK(row[0] <= 18.0);
        CHECK(row[4] <= 23.0);
    }
    for (const auto& row : ds.test.rows) CHECK(row[4] > 23.0);
    CHECK_THROWS_AS(datagen::recompute_oracle_nlpd(ds), invalid_input);

    CHECK_THROWS_AS(datagen::load_soccer(csv, 0), invalid_input);
    CHECK_THROWS_AS(datagen::load_soccer(csv, 34), invalid_input);

    const auto bad_teams = make_soccer_csv(tmp.path(), 16);
    CHECK_THROWS_WITH_AS(datagen::load_soccer(bad_teams, 23), doctest::Contains("18"),
                         parse_error);

    std::ofstream f(tmp.path() / "frac.csv");
    f << "home_team_id,away_team_id,home_goals,away_goals,matchday\n1,2,1.5,0,1\n";
    f.close();
    CHECK_THROWS_WITH_AS(datagen::load_soccer(tmp.path() / "frac.csv", 23),
                         doctest::Contains("line 2"), parse_error);
}

TEST_CASE("descriptor names the interface the harness actually passes") {
    const auto reg = datagen::generate(DatasetSpec::preset("regression-1d-small", 1));
    for (const char* needle : {"predictor_train", "response_test", "N_train", "log_lik",
                               "stanloop evaluate", "--notes", "--rationale"})
        CHECK(reg.descriptor.find(needle) != std::string::npos);
    CHECK(reg.descriptor.find("contamin") == std::string::npos);  // no oracle leakage
    CHECK(reg.descriptor.find("sin") == std::string::npos);

    const auto hier = datagen::generate(DatasetSpec::preset("hierarchical-small", 1));
    for (const char* needle : {"unit_train", "effect_test", "J;"})
        CHECK(hier.descriptor.find(needle) != std::string::npos);

    const auto slopes = datagen::generate(DatasetSpec::preset("varying-slopes", 1));
    CHECK(slopes.descriptor.find("input_train") != std::string::npos);
}

TEST_CASE("spec validation rejects nonsense") {
    auto s = DatasetSpec::preset("regression-1d-small", 1);
    s.contamination_rate = 1.5;
    CHECK_THROWS_AS(s.validate(), invalid_input);
    s = DatasetSpec::preset("hierarchical-small", 1);
    s.n_groups = 0;
    CHECK_THROWS_AS(s.validate(), invalid_input);
    s = DatasetSpec::preset("regression-1d-small", 1);
    s.name.clear();
    CHECK_THROWS_AS(s.validate(), invalid_input);
    s = DatasetSpec::preset("soccer", 1);
    CHECK_THROWS_AS(datagen::generate(s), invalid_input);
}
