#include "shdiff/kl.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "shdiff/kernels.hpp"
#include "shdiff/schedule.hpp"
#include "shdiff/targets.hpp"

namespace shdiff {

namespace {

constexpr std::size_t kChunkRows = 65536;

/// Running mean / sum of squared deviations (Welford).
struct RunningStats {
    std::size_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void push(double x) {
        ++n;
        const double d = x - mean;
        mean += d / double(n);
        m2 += d * (x - mean);
    }
    double std_err() const {
        if (n < 2) return 0.0;
        return std::sqrt(m2 / double(n - 1) / double(n));
    }
};

/// Strips the appended sigma = 0 of an ODE grid and validates that what
/// remains is a strictly decreasing positive stochastic grid.
std::vector<double> stochastic_grid(std::vector<double> sigmas) {
    if (!sigmas.empty() && sigmas.back() == 0.0) sigmas.pop_back();
    if (sigmas.size() < 2)
        throw std::invalid_argument("kl: grid needs at least two positive levels");
    for (std::size_t i = 0; i < sigmas.size(); ++i) {
        if (!(sigmas[i] > 0.0))
            throw std::invalid_argument("kl: grid levels must be positive");
        if (i > 0 && !(sigmas[i] < sigmas[i - 1]))
            throw std::invalid_argument("kl: grid must be strictly decreasing");
    }
    return sigmas;
}

}  // namespace

McEstimate mc_kl(const LogDensityFn& logp, const LogDensityFn& logq,
                 const SampleBatch& samples_from_p) {
    if (!logp || !logq) throw std::invalid_argument("mc_kl: null density evaluator");
    const Matrix& x = samples_from_p.points;
    if (x.rows == 0) throw std::invalid_argument("mc_kl: empty sample batch");

    RunningStats stats;
    bool violated = false;
    for (std::size_t i = 0; i < x.rows; ++i) {
        const double* row = x.row(i);
        const double lp = logp(row);
        if (!std::isfinite(lp))
            throw std::runtime_error("mc_kl: non-finite log density under p");
        const double lq = logq(row);
        if (lq == -std::numeric_limits<double>::infinity()) {
            violated = true;
            continue;
        }
        if (!std::isfinite(lq))
            throw std::runtime_error("mc_kl: invalid log density under q");
        stats.push(lp - lq);
    }

    McEstimate est;
    est.n = x.rows;
    est.support_violation = violated;
    if (violated) {
        est.value = std::numeric_limits<double>::infinity();
        est.std_err = std::numeric_limits<double>::infinity();
    } else {
        est.value = stats.mean;
        est.std_err = stats.std_err();
    }
    return est;
}

McEstimate mc_fisher(const ScoreModel& score_fn, double sigma,
                     const BatchSampler& sampler, std::size_t n, Rng& rng) {
    if (!sampler) throw std::invalid_argument("mc_fisher: null sampler");
    if (n == 0) throw std::invalid_argument("mc_fisher: n must be positive");

    RunningStats stats;
    std::size_t remaining = n;
    Matrix scores;
    while (remaining > 0) {
        const std::size_t chunk = std::min(remaining, kChunkRows);
        const Matrix x = sampler(chunk, rng);
        if (x.rows != chunk || x.cols == 0)
            throw std::runtime_error("mc_fisher: sampler returned a bad batch");
        scores = Matrix(x.rows, x.cols);
        score_fn.score(x, sigma, scores);
        for (std::size_t i = 0; i < scores.rows; ++i)
            stats.push(kernels::sumsq(scores.row(i), scores.cols));
        remaining -= chunk;
    }

    McEstimate est;
    est.value = stats.mean;
    est.std_err = stats.std_err();
    est.n = n;
    return est;
}

DiscBoundTerm disc_bound_term(const std::vector<double>& sigmas, double I_delta,
                              double I_T) {
    const std::vector<double> grid = stochastic_grid(sigmas);
    const std::vector<double> gammas = gamma_weights(grid);
    double max_gamma = 0.0;
    for (double g : gammas) max_gamma = std::max(max_gamma, g);

    DiscBoundTerm term;
    term.max_gamma = max_gamma;
    term.gap = I_delta - I_T;
    term.negative_gap = term.gap < 0.0;
    term.value = max_gamma * term.gap;
    return term;
}

McEstimate train_error_term(const ScoreModel& model, const ScoreModel& truth,
                            const BatchSampler& clean_sampler,
                            const std::vector<double>& sigmas,
                            std::size_t n_per_level, Rng& rng) {
    if (!clean_sampler)
        throw std::invalid_argument("train_error_term: null sampler");
    if (n_per_level == 0)
        throw std::invalid_argument("train_error_term: n_per_level must be positive");
    const std::vector<double> grid = stochastic_grid(sigmas);
    const std::vector<double> gammas = gamma_weights(grid);

    double value = 0.0;
    double var = 0.0;
    Matrix s_truth, s_model;
    for (std::size_t k = 0; k < gammas.size(); ++k) {
        const double sigma_k = grid[k];
        RunningStats stats;
        std::size_t remaining = n_per_level;
        while (remaining > 0) {
            const std::size_t chunk = std::min(remaining, kChunkRows);
            const Matrix clean = clean_sampler(chunk, rng);
            if (clean.rows != chunk || clean.cols == 0)
                throw std::runtime_error("train_error_term: sampler returned a bad batch");
            const Matrix x = forward_noise(clean, sigma_k, rng);
            s_truth = Matrix(x.rows, x.cols);
            s_model = Matrix(x.rows, x.cols);
            truth.score(x, sigma_k, s_truth);
            model.score(x, sigma_k, s_model);
            for (std::size_t i = 0; i < x.rows; ++i)
                stats.push(kernels::sq_gap(s_truth.row(i), s_model.row(i), x.cols));
            remaining -= chunk;
        }
        value += gammas[k] * stats.mean;
        const double se = stats.std_err();
        var += gammas[k] * gammas[k] * se * se;
    }

    McEstimate est;
    est.value = value;
    est.std_err = std::sqrt(var);
    est.n = n_per_level * gammas.size();
    return est;
}

}  // namespace shdiff
