#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "helpers.hpp"
#include "stanloop/errors.hpp"
#include "stanloop/rng.hpp"
#include "stanloop/scoring.hpp"

using namespace stanloop;
using scoring::LogLikMatrix;
using testutil::Lcg;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// direct density averaging in extended precision, no logsumexp
long double brute_force_nlpd(const LogLikMatrix& m) {
    long double total = 0.0L;
    for (std::size_t n = 0; n < m.n_test; ++n) {
        long double dens = 0.0L;
        for (std::size_t s = 0; s < m.n_draws; ++s) dens += std::exp(static_cast<long double>(m(s, n)));
        total += -std::log(dens / static_cast<long double>(m.n_draws));
    }
    return total / static_cast<long double>(m.n_test);
}

}  // namespace

TEST_CASE("constant log-lik gives the constant back, exactly") {
    auto m = LogLikMatrix::zeros(50, 20);
    for (auto& v : m.values) v = -1000.0;
    CHECK(scoring::nlpd(m) == 1000.0);
}

TEST_CASE("no overflow down to -1e6") {
    auto m = LogLikMatrix::zeros(10, 4);
    for (std::size_t s = 0; s < m.n_draws; ++s)
        for (std::size_t n = 0; n < m.n_test; ++n) m(s, n) = -1e6 + 0.5 * static_cast<double>(s);
    const double v = scoring::nlpd(m);
    CHECK(std::isfinite(v));
    CHECK(v > 999995.0);
    CHECK(v < 1000001.0);
}

TEST_CASE("frozen high-precision golden value") {
    // reference computed by tests/oracles/make_nlpd_oracle.py at 60
    // decimal digits over the same LCG-generated matrix
    const std::size_t n_draws = 7, n_test = 5;
    LogLikMatrix m = LogLikMatrix::zeros(n_draws, n_test);
    Lcg g(42);
    for (std::size_t s = 0; s < n_draws; ++s)
        for (std::size_t n = 0; n < n_test; ++n) m(s, n) = -5.0 * g.u();
    CHECK(scoring::nlpd(m) == doctest::Approx(1.5817922506758079).epsilon(1e-13));
}

TEST_CASE("matches extended-precision brute force on random matrices") {
    Rng rng = Rng::stream(7, "test/scoring_brute");
    for (int rep = 0; rep < 300; ++rep) {
        const std::size_t s = 1 + rng.below(8);
        const std::size_t n = 1 + rng.below(8);
        auto m = LogLikMatrix::zeros(s, n);
        for (auto& v : m.values) v = -5.0 * rng.uniform();
        const double got = scoring::nlpd(m);
        const double want = static_cast<double>(brute_force_nlpd(m));
        CHECK(got == doctest::Approx(want).epsilon(1e-10));
    }
}

TEST_CASE("adding a constant shifts NLPD by its negation") {
    Rng rng = Rng::stream(11, "test/scoring_shift");
    auto m = LogLikMatrix::zeros(40, 15);
    for (auto& v : m.values) v = -10.0 * rng.uniform();
    const double base = scoring::nlpd(m);
    for (double c : {-700.0, -3.5, 2.0, 350.0}) {
        auto shifted = m;
        for (auto& v : shifted.values) v += c;
        CHECK(scoring::nlpd(shifted) == doctest::Approx(base - c).epsilon(1e-12));
    }
}

TEST_CASE("-inf entries are legal while any draw stays finite") {
    auto m = LogLikMatrix::zeros(4, 2);
    m(0, 0) = -kInf;
    m(1, 0) = -1.0;
    const double v = scoring::nlpd(m);
    CHECK(std::isfinite(v));
}

TEST_CASE("all--inf column drives NLPD to +inf with a structured warning") {
    auto m = LogLikMatrix::zeros(3, 4);
    for (std::size_t s = 0; s < 3; ++s) m(s, 2) = -kInf;
    const auto res = scoring::score(m);
    CHECK(res.nlpd == kInf);
    REQUIRE(res.empty_columns.size() == 1);
    CHECK(res.empty_columns[0] == 2);
}

TEST_CASE("NaN and +inf entries are rejected with their position") {
    auto m = LogLikMatrix::zeros(3, 3);
    m(1, 2) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_WITH_AS(scoring::nlpd(m), doctest::Contains("draw 1"), invalid_input);
    m(1, 2) = kInf;
    CHECK_THROWS_AS(scoring::nlpd(m), invalid_input);
    m.values.pop_back();
    CHECK_THROWS_AS(scoring::nlpd(m), invalid_input);
}

TEST_CASE("NLPD is the mean of negated pointwise lpd") {
    Rng rng = Rng::stream(3, "test/scoring_pointwise");
    auto m = LogLikMatrix::zeros(25, 9);
    for (auto& v : m.values) v = -4.0 * rng.uniform();
    const auto lpd = scoring::pointwise_lpd(m);
    double acc = 0.0;
    for (double v : lpd) acc -= v;
    CHECK(scoring::nlpd(m) == doctest::Approx(acc / lpd.size()).epsilon(1e-14));
}

TEST_CASE("Gaussian oracle NLPD closed form") {
    // y == mu: per-point score is 0.5 log(2 pi) + log sigma
    const double expect = 0.5 * std::log(2.0 * M_PI) + std::log(2.0);
    CHECK(scoring::oracle_nlpd_gaussian({1.0}, {1.0}, {2.0}) ==
          doctest::Approx(expect).epsilon(1e-14));
    CHECK_THROWS_AS(scoring::oracle_nlpd_gaussian({1.0}, {1.0}, {0.0}), invalid_input);
    CHECK_THROWS_AS(scoring::oracle_nlpd_gaussian({1.0}, {1.0, 2.0}, {1.0, 1.0}), invalid_input);
}

TEST_CASE("strictly proper: the true predictive wins in expectation") {
    // y ~ N(0,1); single-draw log-lik matrices encode analytic
    // predictives directly
    Rng rng = Rng::stream(99, "test/scoring_proper");
    const std::size_t n = 4000;
    std::vector<double> y(n);
    for (auto& v : y) v = rng.normal();

    auto normal_nlpd = [&](double mu, double sigma) {
        auto m = LogLikMatrix::zeros(1, n);
        for (std::size_t i = 0; i < n; ++i) {
            const double z = (y[i] - mu) / sigma;
            m(0, i) = -0.5 * std::log(2.0 * M_PI) - std::log(sigma) - 0.5 * z * z;
        }
        return scoring::nlpd(m);
    };

    const double truth = normal_nlpd(0.0, 1.0);
    CHECK(truth < normal_nlpd(0.5, 1.0));
    CHECK(truth < normal_nlpd(0.0, 2.0));
    CHECK(truth < normal_nlpd(0.0, 0.6));
    CHECK(truth < normal_nlpd(-0.4, 1.5));
}

TEST_CASE("CDF finite differencing converges to the analytic NLPD") {
    auto gauss_cdf = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
    Rng rng = Rng::stream(5, "test/scoring_cdf");
    std::vector<double> y(100);
    for (auto& v : y) v = rng.normal();

    std::vector<double> mu(y.size(), 0.0), sigma(y.size(), 1.0);
    const double analytic = scoring::oracle_nlpd_gaussian(y, mu, sigma);

    const double e_coarse = std::abs(scoring::nlpd_from_cdf(gauss_cdf, y, 0.1) - analytic);
    const double e_mid = std::abs(scoring::nlpd_from_cdf(gauss_cdf, y, 0.02) - analytic);
    const double e_fine = std::abs(scoring::nlpd_from_cdf(gauss_cdf, y, 0.004) - analytic);
    CHECK(e_mid < 1e-3);
    CHECK(e_mid < e_coarse);
    CHECK(e_fine < e_mid);
    // central differences are second order: each 5x delta refinement
    // should shrink the error by roughly 25x
    CHECK(e_mid < e_coarse / 10.0);
}

TEST_CASE("flat CDF region is reported, not silently scored") {
    auto step_cdf = [](double x) { return x < 0.0 ? 0.0 : 1.0; };
    CHECK_THROWS_WITH_AS(scoring::nlpd_from_cdf(step_cdf, {5.0}, 0.02),
                         doctest::Contains("index 0"), invalid_input);
    auto gauss_cdf = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
    CHECK_THROWS_AS(scoring::nlpd_from_cdf(gauss_cdf, {0.0}, 0.0), invalid_input);
}

TEST_CASE("draws CSV round trip preserves the matrix") {
    testutil::TempDir tmp("scoring-csv");
    Rng rng = Rng::stream(21, "test/scoring_csv");
    auto m = LogLikMatrix::zeros(12, 7);
    for (auto& v : m.values) v = -8.0 * rng.uniform();
    m(3, 4) = -kInf;

    const auto path = tmp.path() / "draws.csv";
    scoring::write_draws_csv(m, path);
    const auto back = scoring::read_draws_csv(path);
    REQUIRE(back.n_draws == m.n_draws);
    REQUIRE(back.n_test == m.n_test);
    for (std::size_t i = 0; i < m.values.size(); ++i) CHECK(back.values[i] == m.values[i]);
}

TEST_CASE("generative process mean and scale at reference points") {
    CHECK(scoring::dgp_mean(0.0) == 0.0);
    CHECK(scoring::dgp_mean(1.0) == doctest::Approx(2.0 * std::sin(1.2) + 0.3).epsilon(1e-15));
    CHECK(scoring::dgp_sigma(3.0) == doctest::Approx(1.1).epsilon(1e-15));
    // far from the bump the scale settles at the base level
    CHECK(scoring::dgp_sigma(-50.0) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(scoring::dgp_sigma(3.0 + 1.5) ==
          doctest::Approx(0.3 + 0.8 * std::exp(-0.5)).epsilon(1e-15));
}
