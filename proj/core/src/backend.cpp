#include "stanloop/backend.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <unordered_map>

#include <json.hpp>

#include "stanloop/errors.hpp"
#include "stanloop/rng.hpp"
#include "stanloop/subprocess.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace stanloop::backend {

ModelSource ModelSource::from_text(std::string text) {
    if (text.empty()) throw invalid_input("model source is empty");
    ModelSource m;
    m.hash = io::sha256_hex(text);
    m.text = std::move(text);
    return m;
}

ModelSource ModelSource::from_file(const fs::path& path) {
    return from_text(io::read_file(path));
}

void SamplerConfig::validate() const {
    if (chains < 1) throw invalid_input("sampler config: chains must be >= 1");
    if (sampling_draws < 1) throw invalid_input("sampler config: sampling draws must be >= 1");
    if (warmup_draws < 0) throw invalid_input("sampler config: warmup draws must be >= 0");
}

void write_data_file(const StanData& data, const fs::path& path) {
    json j;
    for (const auto& [name, value] : data) {
        std::visit([&](const auto& v) { j[name] = v; }, value);
    }
    io::atomic_write(path, j.dump(2) + "\n");
}

io::Table read_chain_csv(const fs::path& path) {
    return io::read_numeric_csv(path, /*skip_comments=*/true);
}

FitResult assemble_fit(const std::vector<io::Table>& chain_tables, std::string backend_id,
                       double wall_time_s) {
    if (chain_tables.empty()) throw sampler_error("no chain output to assemble");
    const auto& cols = chain_tables.front().columns;
    const std::size_t draws = chain_tables.front().rows.size();
    for (std::size_t c = 1; c < chain_tables.size(); ++c) {
        if (chain_tables[c].columns != cols)
            throw sampler_error("chain " + std::to_string(c) + " column mismatch");
        if (chain_tables[c].rows.size() != draws)
            throw sampler_error("chain " + std::to_string(c) + " draw count mismatch");
    }
    if (draws == 0) throw sampler_error("chain output has no draws");

    std::size_t div_col = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> loglik_cols;
    for (std::size_t j = 0; j < cols.size(); ++j) {
        if (cols[j] == "divergent__") div_col = j;
        if (cols[j].rfind("log_lik.", 0) == 0) loglik_cols.push_back(j);
    }
    if (div_col == std::numeric_limits<std::size_t>::max())
        throw sampler_error("sampler output violates contract: missing column divergent__");
    if (loglik_cols.empty())
        throw sampler_error("model output violates contract: missing log_lik.* columns "
                            "(declare log_lik in generated quantities)");
    // columns must be log_lik.1 .. log_lik.N in order
    for (std::size_t n = 0; n < loglik_cols.size(); ++n) {
        const std::string expected = "log_lik." + std::to_string(n + 1);
        if (cols[loglik_cols[n]] != expected)
            throw sampler_error("model output violates contract: expected column " + expected +
                                ", found " + cols[loglik_cols[n]]);
    }

    FitResult fit;
    fit.backend_id = std::move(backend_id);
    fit.wall_time_s = wall_time_s;
    fit.draws.param_names = cols;
    fit.draws.draws_per_chain = draws;

    const std::size_t n_test = loglik_cols.size();
    fit.loglik.n_draws = chain_tables.size() * draws;
    fit.loglik.n_test = n_test;
    fit.loglik.values.reserve(fit.loglik.n_draws * n_test);

    for (const auto& table : chain_tables) {
        std::vector<double> flat;
        flat.reserve(draws * cols.size());
        std::vector<char> div(draws, 0);
        for (std::size_t d = 0; d < draws; ++d) {
            const auto& row = table.rows[d];
            flat.insert(flat.end(), row.begin(), row.end());
            div[d] = row[div_col] != 0.0 ? 1 : 0;
            for (std::size_t c : loglik_cols) fit.loglik.values.push_back(row[c]);
        }
        fit.draws.chain_values.push_back(std::move(flat));
        fit.draws.divergent.push_back(std::move(div));
    }
    fit.loglik.validate();
    return fit;
}

// ---------------------------------------------------------------------------
// CmdStan

CmdStanBackend::CmdStanBackend(fs::path cmdstan_root, fs::path cache_dir)
    : root_(std::move(cmdstan_root)), cache_dir_(std::move(cache_dir)) {
    if (!fs::exists(root_ / "makefile") && !fs::exists(root_ / "Makefile"))
        throw config_error("CmdStan root '" + root_.string() +
                           "' does not look like a CmdStan installation (no makefile); set "
                           "STANLOOP_CMDSTAN or CMDSTAN to the CmdStan directory");
    fs::create_directories(cache_dir_);
}

std::optional<fs::path> CmdStanBackend::discover_root() {
    for (const char* var : {"STANLOOP_CMDSTAN", "CMDSTAN"}) {
        if (const char* v = std::getenv(var); v && *v) return fs::path(v);
    }
    return std::nullopt;
}

namespace {
std::mutex g_compile_mutex;  // no duplicate concurrent builds of one hash
}

CmdStanBackend::Executable CmdStanBackend::compile(const ModelSource& model) {
    std::lock_guard<std::mutex> lock(g_compile_mutex);

    const fs::path dir = cache_dir_ / model.hash;
    const fs::path stan_file = dir / "model.stan";
    const fs::path exe = dir / "model";
    if (fs::exists(exe)) return {exe, model.hash};  // cache hit

    fs::create_directories(dir);
    io::atomic_write(stan_file, model.text);

    auto res = subprocess::run_command({"make", fs::absolute(exe).string()}, "", -1, root_);
    if (res.exit_code != 0) {
        std::error_code ec;
        fs::remove(exe, ec);
        throw compile_error("model compilation failed:\n" + res.out + res.err);
    }
    if (!fs::exists(exe)) throw compile_error("compiler reported success but produced no binary");
    return {exe, model.hash};
}

FitResult CmdStanBackend::sample(const Executable& exe, const StanData& data,
                                 const SamplerConfig& cfg) {
    cfg.validate();
    const fs::path run_dir = cache_dir_ / exe.model_hash / "runs" /
                             ("seed_" + std::to_string(cfg.seed));
    fs::create_directories(run_dir);
    const fs::path data_file = run_dir / "data.json";
    write_data_file(data, data_file);

    std::vector<std::vector<std::string>> commands;
    std::vector<fs::path> outputs;
    for (int c = 0; c < cfg.chains; ++c) {
        const fs::path out = run_dir / ("chain_" + std::to_string(c) + ".csv");
        outputs.push_back(out);
        commands.push_back({fs::absolute(exe.exe).string(),
                            "sample",
                            "num_samples=" + std::to_string(cfg.sampling_draws),
                            "num_warmup=" + std::to_string(cfg.warmup_draws),
                            "random",
                            "seed=" + std::to_string(cfg.seed + static_cast<std::uint64_t>(c)),
                            "data",
                            "file=" + fs::absolute(data_file).string(),
                            "output",
                            "file=" + fs::absolute(out).string()});
    }

    const auto t0 = std::chrono::steady_clock::now();
    const auto results = subprocess::run_parallel(
        commands, static_cast<std::size_t>(std::max(1, cfg.parallel_chains)));
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    for (std::size_t c = 0; c < results.size(); ++c) {
        if (results[c].exit_code != 0)
            throw sampler_error("sampler chain " + std::to_string(c) + " exited with code " +
                                std::to_string(results[c].exit_code) + ":\n" + results[c].out +
                                results[c].err);
    }

    std::vector<io::Table> tables;
    tables.reserve(outputs.size());
    for (const auto& out : outputs) tables.push_back(read_chain_csv(out));
    return assemble_fit(tables, "cmdstan", wall);
}

// ---------------------------------------------------------------------------
// Grid backend

FitResult grid_fit(const LogDensityFn& log_posterior, const GridSpec& grid,
                   const LogLikFn& loglik_fn, std::size_t n_test, const SamplerConfig& cfg) {
    cfg.validate();
    const std::size_t dims = grid.param_names.size();
    if (dims == 0 || dims > 3) throw invalid_input("grid_fit: need 1-3 parameters");
    if (grid.bounds.size() != dims) throw invalid_input("grid_fit: bounds/param mismatch");
    if (grid.resolution < 16) throw invalid_input("grid_fit: resolution must be >= 16");
    for (const auto& [lo, hi] : grid.bounds)
        if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi))
            throw invalid_input("grid_fit: bounds must be finite with lo < hi");
    if (n_test == 0) throw invalid_input("grid_fit: n_test must be positive");

    std::size_t n_cells = 1;
    for (std::size_t d = 0; d < dims; ++d) n_cells *= grid.resolution;

    auto cell_params = [&](std::size_t cell) {
        std::vector<double> p(dims);
        for (std::size_t d = 0; d < dims; ++d) {
            const std::size_t k = cell % grid.resolution;
            cell /= grid.resolution;
            const auto [lo, hi] = grid.bounds[d];
            const double step = (hi - lo) / static_cast<double>(grid.resolution);
            p[d] = lo + (static_cast<double>(k) + 0.5) * step;
        }
        return p;
    };

    // normalized categorical over grid cells
    std::vector<double> logp(n_cells);
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_cells; ++i) {
        logp[i] = log_posterior(cell_params(i));
        if (std::isnan(logp[i])) throw invalid_input("grid_fit: NaN log posterior");
        m = std::max(m, logp[i]);
    }
    if (m == -std::numeric_limits<double>::infinity())
        throw invalid_input("grid_fit: log posterior is -inf on the whole grid");
    std::vector<double> cdf(n_cells);
    double acc = 0.0;
    for (std::size_t i = 0; i < n_cells; ++i) {
        acc += std::exp(logp[i] - m);
        cdf[i] = acc;
    }

    FitResult fit;
    fit.backend_id = "grid";
    fit.draws.param_names = grid.param_names;
    fit.draws.draws_per_chain = static_cast<std::size_t>(cfg.sampling_draws);
    fit.loglik.n_draws = static_cast<std::size_t>(cfg.chains) *
                         static_cast<std::size_t>(cfg.sampling_draws);
    fit.loglik.n_test = n_test;
    fit.loglik.values.reserve(fit.loglik.n_draws * n_test);

    std::unordered_map<std::size_t, std::vector<double>> loglik_cache;
    const auto t0 = std::chrono::steady_clock::now();
    for (int c = 0; c < cfg.chains; ++c) {
        Rng rng = Rng::stream(cfg.seed + static_cast<std::uint64_t>(c), "grid_fit/draws");
        std::vector<double> flat;
        flat.reserve(fit.draws.draws_per_chain * dims);
        for (int d = 0; d < cfg.sampling_draws; ++d) {
            const double u = rng.uniform() * acc;
            const std::size_t cell = static_cast<std::size_t>(
                std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
            const auto params = cell_params(std::min(cell, n_cells - 1));
            flat.insert(flat.end(), params.begin(), params.end());

            auto it = loglik_cache.find(cell);
            if (it == loglik_cache.end()) {
                std::vector<double> ll(n_test);
                for (std::size_t n = 0; n < n_test; ++n) ll[n] = loglik_fn(params, n);
                it = loglik_cache.emplace(cell, std::move(ll)).first;
            }
            fit.loglik.values.insert(fit.loglik.values.end(), it->second.begin(),
                                     it->second.end());
        }
        fit.draws.chain_values.push_back(std::move(flat));
        fit.draws.divergent.emplace_back(fit.draws.draws_per_chain, 0);
    }
    fit.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    fit.loglik.validate();
    return fit;
}

}  // namespace stanloop::backend
