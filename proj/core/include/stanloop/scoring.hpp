#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace stanloop::scoring {

/// S posterior draws x N test points of per-observation log predictive
/// density, in nats. Entries may be -inf (zero likelihood under a draw)
/// but never NaN or +inf. Column order matches test-set row order.
struct LogLikMatrix {
    std::size_t n_draws = 0;   // S
    std::size_t n_test = 0;    // N
    std::vector<double> values;  // draw-major, n_draws * n_test

    double operator()(std::size_t s, std::size_t n) const { return values[s * n_test + n]; }
    double& operator()(std::size_t s, std::size_t n) { return values[s * n_test + n]; }

    static LogLikMatrix zeros(std::size_t s, std::size_t n) {
        return LogLikMatrix{s, n, std::vector<double>(s * n, 0.0)};
    }

    /// Throws invalid_input naming the offending entry on NaN/+inf or
    /// shape mismatch.
    void validate() const;
};

struct ScoreResult {
    double nlpd = 0.0;
    /// Test columns whose every draw scored -inf; nonempty implies
    /// nlpd == +inf.
    std::vector<std::size_t> empty_columns;
};

/// Held-out NLPD in nats per test point:
///   -(1/N) sum_n [ logsumexp_s(values[s,n]) - log S ].
/// Overflow/underflow-safe for entries down to -1e6.
double nlpd(const LogLikMatrix& loglik);

/// nlpd() plus the structured all--inf-column warning.
ScoreResult score(const LogLikMatrix& loglik);

/// Per-point log predictive density: element n is
/// logsumexp_s(values[s,n]) - log S.
std::vector<double> pointwise_lpd(const LogLikMatrix& loglik);

/// Mean over n of -log Normal(y_n; mu_n, sigma_n).
double oracle_nlpd_gaussian(const std::vector<double>& y, const std::vector<double>& mu,
                            const std::vector<double>& sigma);

/// True mean function of the 1D regression generative process.
double dgp_mean(double x);

/// True noise scale of the 1D regression generative process (a bump on
/// a constant base; always > 0).
double dgp_sigma(double x);

/// NLPD from a predictive CDF via central finite differences:
/// density(y) ~ (cdf(y+delta) - cdf(y-delta)) / (2 delta).
/// Throws invalid_input identifying the point if a difference is
/// non-positive (delta too small, or the CDF is flat there).
double nlpd_from_cdf(const std::function<double(double)>& cdf, const std::vector<double>& y,
                     double delta = 0.02);

/// Draws-file round trip: header row `log_lik.1`..`log_lik.N`, one row
/// per draw, 17 significant digits.
void write_draws_csv(const LogLikMatrix& loglik, const std::filesystem::path& path);
LogLikMatrix read_draws_csv(const std::filesystem::path& path);

}  // namespace stanloop::scoring
