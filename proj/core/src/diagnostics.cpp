#include "stanloop/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "stanloop/errors.hpp"

namespace stanloop::diagnostics {

std::size_t ChainDraws::param_index(std::string_view name) const {
    for (std::size_t i = 0; i < param_names.size(); ++i)
        if (param_names[i] == name) return i;
    throw invalid_input("unknown parameter '" + std::string(name) + "'");
}

void ChainDraws::validate() const {
    if (chain_values.empty()) throw invalid_input("ChainDraws: no chains");
    if (draws_per_chain < 4)
        throw invalid_input("ChainDraws: need at least 4 draws per chain, have " +
                            std::to_string(draws_per_chain));
    const std::size_t expect = draws_per_chain * param_names.size();
    for (std::size_t m = 0; m < chain_values.size(); ++m)
        if (chain_values[m].size() != expect)
            throw invalid_input("ChainDraws: chain " + std::to_string(m) + " has " +
                                std::to_string(chain_values[m].size()) + " values, expected " +
                                std::to_string(expect));
    if (!divergent.empty()) {
        if (divergent.size() != chain_values.size())
            throw invalid_input("ChainDraws: divergence flags for wrong chain count");
        for (const auto& d : divergent)
            if (d.size() != draws_per_chain)
                throw invalid_input("ChainDraws: divergence flag length mismatch");
    }
}

std::string to_string(Health h) {
    switch (h) {
        case Health::ok: return "ok";
        case Health::warn: return "warn";
        case Health::fail: return "fail";
    }
    return "ok";
}

namespace {

struct Seq {
    double mean = 0.0;
    double var = 0.0;  // sample variance, ddof 1
};

Seq seq_stats(const ChainDraws& draws, std::size_t chain, std::size_t param, std::size_t first,
              std::size_t count) {
    Seq s;
    for (std::size_t d = 0; d < count; ++d) s.mean += draws.value(chain, first + d, param);
    s.mean /= static_cast<double>(count);
    for (std::size_t d = 0; d < count; ++d) {
        const double z = draws.value(chain, first + d, param) - s.mean;
        s.var += z * z;
    }
    s.var /= static_cast<double>(count - 1);
    return s;
}

double compute_split_rhat(const ChainDraws& draws, std::size_t param, bool& degenerate) {
    const std::size_t d_total = draws.draws_per_chain;
    const std::size_t h = d_total / 2;  // sequence length n

    std::vector<Seq> seqs;
    seqs.reserve(2 * draws.n_chains());
    for (std::size_t m = 0; m < draws.n_chains(); ++m) {
        seqs.push_back(seq_stats(draws, m, param, 0, h));
        seqs.push_back(seq_stats(draws, m, param, d_total - h, h));
    }

    double w = 0.0;  // mean within-sequence variance
    double grand = 0.0;
    for (const auto& s : seqs) {
        w += s.var;
        grand += s.mean;
    }
    const double n_seq = static_cast<double>(seqs.size());
    w /= n_seq;
    grand /= n_seq;

    double b = 0.0;  // between-sequence variance of means, scaled by n
    for (const auto& s : seqs) {
        const double z = s.mean - grand;
        b += z * z;
    }
    b = static_cast<double>(h) * b / (n_seq - 1.0);

    if (w <= 0.0) {
        degenerate = true;
        return 1.0;
    }
    const double n = static_cast<double>(h);
    const double var_plus = (n - 1.0) / n * w + b / n;
    return std::sqrt(var_plus / w);
}

double compute_ess(const ChainDraws& draws, std::size_t param, bool& degenerate) {
    const std::size_t d_total = draws.draws_per_chain;
    const std::size_t n_chains = draws.n_chains();
    const double total = static_cast<double>(n_chains * d_total);

    // per-chain means and lag-0 autocovariances
    std::vector<double> means(n_chains), c0(n_chains);
    for (std::size_t m = 0; m < n_chains; ++m) {
        double mu = 0.0;
        for (std::size_t d = 0; d < d_total; ++d) mu += draws.value(m, d, param);
        mu /= static_cast<double>(d_total);
        double v = 0.0;
        for (std::size_t d = 0; d < d_total; ++d) {
            const double z = draws.value(m, d, param) - mu;
            v += z * z;
        }
        means[m] = mu;
        c0[m] = v / static_cast<double>(d_total);
    }
    bool all_zero = true;
    for (double v : c0)
        if (v > 0.0) all_zero = false;
    if (all_zero) {
        degenerate = true;
        return 1.0;
    }

    auto rho_at = [&](std::size_t t) {
        double acc = 0.0;
        for (std::size_t m = 0; m < n_chains; ++m) {
            if (c0[m] <= 0.0) continue;  // constant chain contributes rho 0
            double c = 0.0;
            for (std::size_t d = 0; d + t < d_total; ++d)
                c += (draws.value(m, d, param) - means[m]) *
                     (draws.value(m, d + t, param) - means[m]);
            acc += c / static_cast<double>(d_total) / c0[m];
        }
        return acc / static_cast<double>(n_chains);
    };

    // initial-positive-sequence truncation on consecutive lag pairs
    double sum = 0.0;
    double r_prev = rho_at(1);
    for (std::size_t t = 1; t + 1 < d_total; ++t) {
        const double r_next = rho_at(t + 1);
        if (r_prev + r_next < 0.0) break;
        sum += r_prev;
        r_prev = r_next;
    }

    const double tau = 1.0 + 2.0 * sum;
    double out = total / tau;
    return std::clamp(out, 1.0, total);
}

}  // namespace

ParamDiagnostics param_diagnostics(const ChainDraws& draws, std::string_view param) {
    draws.validate();
    const std::size_t p = draws.param_index(param);
    ParamDiagnostics out;
    bool deg_rhat = false, deg_ess = false;
    out.rhat = compute_split_rhat(draws, p, deg_rhat);
    out.ess = compute_ess(draws, p, deg_ess);
    out.degenerate = deg_rhat || deg_ess;
    return out;
}

ParamDiagnostics split_rhat_detail(const ChainDraws& draws, std::string_view param) {
    draws.validate();
    const std::size_t p = draws.param_index(param);
    ParamDiagnostics out;
    bool deg = false;
    out.rhat = compute_split_rhat(draws, p, deg);
    out.degenerate = deg;
    return out;
}

double split_rhat(const ChainDraws& draws, std::string_view param) {
    return split_rhat_detail(draws, param).rhat;
}

double ess(const ChainDraws& draws, std::string_view param) {
    draws.validate();
    const std::size_t p = draws.param_index(param);
    bool deg = false;
    return compute_ess(draws, p, deg);
}

long divergence_count(const ChainDraws& draws) {
    long total = 0;
    for (const auto& chain : draws.divergent)
        for (char f : chain) total += f ? 1 : 0;
    return total;
}

namespace {

bool internal_column(const std::string& name) {
    // sampler bookkeeping (lp__, divergent__, ...) and the log_lik
    // contract columns are not model parameters
    if (name.size() >= 2 && name.compare(name.size() - 2, 2, "__") == 0) return true;
    return name.rfind("log_lik.", 0) == 0;
}

}  // namespace

DiagnosticsReport summarize(const ChainDraws& draws, const HealthThresholds& thr) {
    draws.validate();
    DiagnosticsReport rep;

    std::vector<std::string> params;
    for (const auto& name : draws.param_names)
        if (!internal_column(name)) params.push_back(name);
    if (params.empty()) params = draws.param_names;

    rep.max_rhat = 0.0;
    rep.min_ess = std::numeric_limits<double>::infinity();
    for (const auto& name : params) {
        const auto pd = param_diagnostics(draws, name);
        rep.per_param.emplace(name, pd);
        rep.max_rhat = std::max(rep.max_rhat, pd.rhat);
        rep.min_ess = std::min(rep.min_ess, pd.ess);
    }
    rep.divergences = divergence_count(draws);

    const double total_draws =
        static_cast<double>(draws.n_chains()) * static_cast<double>(draws.draws_per_chain);
    const bool fail = rep.max_rhat > thr.fail_rhat ||
                      static_cast<double>(rep.divergences) > thr.fail_divergence_frac * total_draws;
    const bool warn = rep.max_rhat > thr.warn_rhat || rep.divergences > 0;
    rep.health = fail ? Health::fail : (warn ? Health::warn : Health::ok);
    return rep;
}

std::string DiagnosticsReport::to_json() const {
    nlohmann::json j;
    j["max_rhat"] = max_rhat;
    j["min_ess"] = min_ess;
    j["divergences"] = divergences;
    j["health"] = to_string(health);
    return j.dump();
}

std::string DiagnosticsReport::pretty() const {
    std::ostringstream out;
    out << "diagnostics: max_rhat=" << max_rhat << " min_ess=" << min_ess
        << " divergences=" << divergences << " health=" << to_string(health) << "\n";
    for (const auto& [name, pd] : per_param) {
        out << "  " << name << ": rhat=" << pd.rhat << " ess=" << pd.ess;
        if (pd.degenerate) out << " (zero variance)";
        out << "\n";
    }
    return out.str();
}

}  // namespace stanloop::diagnostics
