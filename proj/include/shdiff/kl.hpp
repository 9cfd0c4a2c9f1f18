#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "shdiff/rng.hpp"
#include "shdiff/samplers.hpp"
#include "shdiff/tensor.hpp"

namespace shdiff {

/// Pointwise log-density evaluator; the row length is fixed by the batch it
/// is applied to.
using LogDensityFn = std::function<double(const double*)>;

/// Draws n rows from a fixed distribution using the provided stream.
using BatchSampler = std::function<Matrix(std::size_t, Rng&)>;

/// Monte Carlo estimate with its standard error.
struct McEstimate {
    double value = 0.0;
    double std_err = 0.0;
    std::size_t n = 0;
    /// Set when logq hit -infinity on some sample: the divergence is infinite
    /// because q does not dominate p (value is +inf in that case).
    bool support_violation = false;
};

/// KL(p || q) estimated from samples of p: mean of logp(x) - logq(x).
/// Throws if logp is non-finite on a sample (the draws are supposed to come
/// from p) or if logq is NaN/+inf; logq = -inf sets support_violation.
McEstimate mc_kl(const LogDensityFn& logp, const LogDensityFn& logq,
                 const SampleBatch& samples_from_p);

/// Fisher information of the sampler's law: mean of ||score(x)||^2 over n
/// draws, where the score is evaluated at noise level `sigma` (pass the level
/// whose marginal the sampler produces; 0 for a clean target).
McEstimate mc_fisher(const ScoreModel& score_fn, double sigma,
                     const BatchSampler& sampler, std::size_t n, Rng& rng);

/// Discretization term of the KL bound: max_k gamma_k * (I_delta - I_T).
struct DiscBoundTerm {
    double value = 0.0;
    double max_gamma = 0.0;
    double gap = 0.0;           // I_delta - I_T
    bool negative_gap = false;  // set when the measured gap came out negative
};

/// `sigmas` is the stochastic grid (strictly decreasing, ending at sigma_min;
/// a trailing 0 from the ODE grid is ignored). I_delta and I_T are Fisher
/// informations of the least- and most-noised marginals.
DiscBoundTerm disc_bound_term(const std::vector<double>& sigmas, double I_delta,
                              double I_T);

/// Training term of the KL bound:
///   sum_k gamma_k * mean ||truth(x, sigma_k) - model(x, sigma_k)||^2
/// with x drawn from the exact forward marginal at sigma_k (clean draw plus
/// sigma_k * Z). Levels are treated as independent when propagating the
/// standard error. `n_per_level` draws per grid level.
McEstimate train_error_term(const ScoreModel& model, const ScoreModel& truth,
                            const BatchSampler& clean_sampler,
                            const std::vector<double>& sigmas,
                            std::size_t n_per_level, Rng& rng);

/// The computable pieces of the sampling-error decomposition, as emitted into
/// run reports. Availability flags cover initializations without a tractable
/// density (empirical, heavy-tailed prior) and runs without a trained score.
struct BoundReport {
    McEstimate e_init;  // KL(p_T || prior)
    bool e_init_available = false;
    McEstimate fisher_delta;  // I(p_{sigma_min})
    McEstimate fisher_T;      // I(p_{sigma_max})
    DiscBoundTerm disc;
    McEstimate e_train;
    bool e_train_available = false;
};

}  // namespace shdiff
