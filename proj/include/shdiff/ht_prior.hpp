#pragma once

// Heavy-tail-aware initialization: Hill tail-index estimation on the training
// set and sampling from a Student-t mixture convolved with Gaussian noise at
// level sigma_T, so the prior keeps the target's power tails.

#include <cstdint>
#include <vector>

#include "shdiff/rng.hpp"
#include "shdiff/tensor.hpp"

namespace shdiff {

struct HillConfig {
    std::size_t k = 350;        // order statistics entering the estimate
    bool per_dimension = true;  // false pools every coordinate into one sample
    // Subtract the per-dimension median before taking absolute values. The
    // pipeline default absorbs location; disable for data that is already
    // positive and centered (e.g. raw Pareto draws).
    bool center = true;
};

/// Hill estimate of the tail index. Per dimension: center by the median (see
/// config), take absolute values, sort ascending, H_j = (1/k) sum_{i=1..k}
/// [ln X_(n-i+1) - ln X_(n-k)], nu_j = 1/H_j; the result is the median over
/// dimensions. Throws std::invalid_argument when k is out of [2, n) and
/// std::runtime_error when X_(n-k) is not positive after centering.
double hill_estimate(const SampleBatch& samples, const HillConfig& cfg);

struct HtPriorSpec {
    std::size_t dim = 0;
    double nu_hat = 3.0;           // may be +inf for the Gaussian limit
    double sigma_T = 0.0;
    std::vector<double> mu_hat;    // +mu location; the other component is -mu
    std::size_t hill_k = 0;        // order-statistic count used for nu_hat

    void validate() const;
};

/// Estimate the prior from clean training samples: nu_hat via hill_estimate
/// and mu_hat as the coordinate-wise median of the rows whose mean over
/// coordinates is positive (the target mixture is symmetric and bimodal).
HtPriorSpec fit_ht_prior(const SampleBatch& samples, double sigma_T,
                         const HillConfig& cfg);

/// Draw n points: component +/-mu_hat with probability 1/2 each, an isotropic
/// t_nu innovation, plus independent N(0, sigma_T^2 I) — exactly the
/// convolution the prior models.
SampleBatch ht_prior_sample(const HtPriorSpec& spec, std::size_t n, Rng& rng);

/// Checkpoint round trip (plain text, exact).
void save_ht_prior(const std::string& path, const HtPriorSpec& spec);
HtPriorSpec load_ht_prior(const std::string& path);

}  // namespace shdiff
