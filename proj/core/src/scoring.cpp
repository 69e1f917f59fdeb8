#include "stanloop/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "stanloop/errors.hpp"
#include "stanloop/io.hpp"

namespace stanloop::scoring {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
}  // namespace

void LogLikMatrix::validate() const {
    if (n_draws == 0 || n_test == 0 || values.empty())
        throw invalid_input("log-likelihood matrix is empty");
    if (values.size() != n_draws * n_test)
        throw invalid_input("log-likelihood matrix shape mismatch: " +
                            std::to_string(values.size()) + " values for " +
                            std::to_string(n_draws) + "x" + std::to_string(n_test));
    for (std::size_t s = 0; s < n_draws; ++s) {
        for (std::size_t n = 0; n < n_test; ++n) {
            const double v = (*this)(s, n);
            if (std::isnan(v))
                throw invalid_input("NaN log-likelihood at draw " + std::to_string(s) +
                                    ", test point " + std::to_string(n));
            if (v == kInf)
                throw invalid_input("+inf log-likelihood at draw " + std::to_string(s) +
                                    ", test point " + std::to_string(n));
        }
    }
}

std::vector<double> pointwise_lpd(const LogLikMatrix& loglik) {
    loglik.validate();
    const double log_s = std::log(static_cast<double>(loglik.n_draws));
    std::vector<double> out(loglik.n_test);
    for (std::size_t n = 0; n < loglik.n_test; ++n) {
        double m = -kInf;
        for (std::size_t s = 0; s < loglik.n_draws; ++s) m = std::max(m, loglik(s, n));
        if (m == -kInf) {
            // every draw assigns zero likelihood to this point
            out[n] = -kInf;
            continue;
        }
        double acc = 0.0;
        for (std::size_t s = 0; s < loglik.n_draws; ++s) acc += std::exp(loglik(s, n) - m);
        out[n] = m + std::log(acc) - log_s;
    }
    return out;
}

ScoreResult score(const LogLikMatrix& loglik) {
    const auto lpd = pointwise_lpd(loglik);
    ScoreResult res;
    double acc = 0.0;
    for (std::size_t n = 0; n < lpd.size(); ++n) {
        if (lpd[n] == -kInf) res.empty_columns.push_back(n);
        acc -= lpd[n];
    }
    res.nlpd = res.empty_columns.empty() ? acc / static_cast<double>(lpd.size()) : kInf;
    return res;
}

double nlpd(const LogLikMatrix& loglik) { return score(loglik).nlpd; }

double oracle_nlpd_gaussian(const std::vector<double>& y, const std::vector<double>& mu,
                            const std::vector<double>& sigma) {
    if (y.empty() || y.size() != mu.size() || y.size() != sigma.size())
        throw invalid_input("oracle_nlpd_gaussian: length mismatch or empty input");
    double acc = 0.0;
    for (std::size_t n = 0; n < y.size(); ++n) {
        if (!(sigma[n] > 0.0))
            throw invalid_input("oracle_nlpd_gaussian: sigma <= 0 at index " + std::to_string(n));
        const double z = (y[n] - mu[n]) / sigma[n];
        acc += 0.5 * kLog2Pi + std::log(sigma[n]) + 0.5 * z * z;
    }
    return acc / static_cast<double>(y.size());
}

double dgp_mean(double x) { return 2.0 * std::sin(1.2 * x) + 0.3 * x; }

double dgp_sigma(double x) {
    const double z = (x - 3.0) / 1.5;
    return 0.3 + 0.8 * std::exp(-0.5 * z * z);
}

double nlpd_from_cdf(const std::function<double(double)>& cdf, const std::vector<double>& y,
                     double delta) {
    if (y.empty()) throw invalid_input("nlpd_from_cdf: empty test vector");
    if (!(delta > 0.0)) throw invalid_input("nlpd_from_cdf: delta must be > 0");
    double acc = 0.0;
    for (std::size_t n = 0; n < y.size(); ++n) {
        const double dens = (cdf(y[n] + delta) - cdf(y[n] - delta)) / (2.0 * delta);
        if (!(dens > 0.0))
            throw invalid_input("nlpd_from_cdf: non-positive density at index " +
                                std::to_string(n) + " (y = " + io::fmt17(y[n]) +
                                "); delta too small or CDF flat");
        acc -= std::log(dens);
    }
    return acc / static_cast<double>(y.size());
}

void write_draws_csv(const LogLikMatrix& loglik, const std::filesystem::path& path) {
    loglik.validate();
    io::Table t;
    t.columns.reserve(loglik.n_test);
    for (std::size_t n = 0; n < loglik.n_test; ++n)
        t.columns.push_back("log_lik." + std::to_string(n + 1));
    t.rows.reserve(loglik.n_draws);
    for (std::size_t s = 0; s < loglik.n_draws; ++s) {
        std::vector<double> row(loglik.n_test);
        for (std::size_t n = 0; n < loglik.n_test; ++n) row[n] = loglik(s, n);
        t.rows.push_back(std::move(row));
    }
    io::write_csv(t, path);
}

LogLikMatrix read_draws_csv(const std::filesystem::path& path) {
    const auto t = io::read_numeric_csv(path);
    LogLikMatrix m;
    m.n_draws = t.rows.size();
    m.n_test = t.columns.size();
    for (std::size_t n = 0; n < m.n_test; ++n) {
        const std::string expected = "log_lik." + std::to_string(n + 1);
        if (t.columns[n] != expected)
            throw parse_error("draws file: expected column '" + expected + "', found '" +
                              t.columns[n] + "'");
    }
    m.values.reserve(m.n_draws * m.n_test);
    for (const auto& row : t.rows)
        m.values.insert(m.values.end(), row.begin(), row.end());
    m.validate();
    return m;
}

}  // namespace stanloop::scoring
