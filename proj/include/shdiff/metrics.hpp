#pragma once

// Distributional evaluation: exact 1-D Wasserstein on sorted samples, sliced
// Wasserstein over random directions, Max-SWD by Adam ascent on a sphere
// parameterization, and nearest-rank quantiles with relative errors.

#include <cstdint>
#include <vector>

#include "shdiff/rng.hpp"
#include "shdiff/tensor.hpp"

namespace shdiff {

/// Exact order-1 / order-2 Wasserstein distance between two equal-size 1-D
/// samples (sort both, average the |gap| or squared gap). Throws
/// std::invalid_argument on size mismatch, empty input, or order not in {1,2}.
double wasserstein1d(std::vector<double> a, std::vector<double> b, int order);

/// Mean of wasserstein1d over `n_slices` uniform directions (normalized
/// Gaussian draws). Unequal cloud sizes are reconciled by uniform subsampling
/// of the larger cloud using `rng`.
double sliced_wasserstein(const Matrix& x, const Matrix& y, std::size_t n_slices,
                          int order, Rng& rng);
double sliced_wasserstein(const SampleBatch& x, const SampleBatch& y,
                          std::size_t n_slices, int order, Rng& rng);

/// Stereographic-style parameterization of the unit sphere in R^d from
/// E in R^{d-1}: S^2 = ||E||^2, theta[0] = (S^2-1)/(S^2+1),
/// theta[i] = 2 E[i-1]/(S^2+1). ||theta|| = 1 identically.
std::vector<double> sphere_param(const std::vector<double>& e);

struct MaxSwConfig {
    double tol = 1e-8;          // stop when |new - old| < tol
    std::size_t max_iters = 500;
    double lr = 0.05;           // Adam step size on E
    std::uint64_t seed = 1;     // initial directions E ~ N(0, I_{d-1})
    std::size_t restarts = 4;   // independent starts; best value wins
};

struct MaxSwResult {
    double value = 0.0;
    std::vector<double> theta;      // maximizing unit direction
    std::size_t iterations = 0;     // total Adam steps across restarts
};

/// Max sliced Wasserstein: Adam ascent of wasserstein1d of the projections
/// over the direction sphere, gradient taken through the (fixed-per-step)
/// sort permutations. Returns the best value seen. Throws std::runtime_error
/// on a non-finite objective.
MaxSwResult max_sliced_wasserstein(const Matrix& x, const Matrix& y,
                                   const MaxSwConfig& cfg, int order);
MaxSwResult max_sliced_wasserstein(const SampleBatch& x, const SampleBatch& y,
                                   const MaxSwConfig& cfg, int order);

/// Nearest-rank empirical quantile: order statistic at index ceil(q*n).
/// Throws std::invalid_argument when q is outside (0,1) or the sample is
/// empty.
double empirical_quantile(std::vector<double> samples, double q);

/// True when the sample is large enough to resolve the quantile (n >= 1/(1-q)).
bool quantile_resolution_ok(std::size_t n, double q);

struct QuantileRelError {
    double q = 0.0;
    double mean = 0.0;    // over dimensions
    double stddev = 0.0;  // over dimensions
};

/// Per-dimension relative quantile errors |x_q - x_hat_q| / |x_q| between a
/// generated cloud and a reference cloud, averaged over dimensions for each
/// requested q. Throws std::runtime_error when a reference quantile is zero.
std::vector<QuantileRelError> quantile_rel_error(const Matrix& gen, const Matrix& ref,
                                                 const std::vector<double>& qs);

}  // namespace shdiff
