#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "shdiff/rng.hpp"
#include "shdiff/tensor.hpp"

namespace shdiff {

/// Haar-distributed orthogonal matrix: QR of a standard Gaussian d x d
/// matrix with the sign fixed so the triangular factor has positive diagonal.
Matrix orthogonal_from_gaussian(std::size_t d, Rng& rng);

// ---------------------------------------------------------------------------
// Gaussian mixture target. Covariances are kept factored as R diag(lambda)
// R^T, so noising by sigma just shifts the eigenvalues: R diag(lambda +
// sigma^2) R^T. Density and score are exact at every noise level.
// ---------------------------------------------------------------------------

struct GmmComponent {
    std::vector<double> mean;
    Matrix rotation;                  // d x d orthogonal
    std::vector<double> eigenvalues;  // length d, all > 0
};

struct GmmSpec {
    std::size_t dim = 0;
    std::vector<double> weights;
    std::vector<GmmComponent> comps;

    void validate() const;
};

/// The 25-component benchmark mixture: means on the 5x5 grid {-10,-5,0,5,10}^2
/// in the first two coordinates (zero elsewhere), shared eigenvalue power law
/// lambda_k = k^(-3/4), a fresh random rotation per component, and weights
/// drawn chi^2_3 then normalized. Deterministic in `seed`.
GmmSpec make_grid_gmm(std::size_t dim, std::uint64_t seed);

/// log density of the mixture noised by `sigma` (sigma = 0 gives the clean
/// density), evaluated via log-sum-exp over components.
double gmm_log_density(const GmmSpec& g, double sigma, const double* x);

/// Score (gradient of log density) of the noised mixture at x.
void gmm_score(const GmmSpec& g, double sigma, const double* x, double* out);

Matrix gmm_sample(const GmmSpec& g, std::size_t n, Rng& rng);

// Mixture moments (exact): mean and covariance of the clean target.
std::vector<double> gmm_mean(const GmmSpec& g);
Matrix gmm_covariance(const GmmSpec& g);

void write_gmm(std::ostream& os, const GmmSpec& g);
GmmSpec read_gmm(std::istream& is);
void save_gmm(const std::string& path, const GmmSpec& g);
GmmSpec load_gmm(const std::string& path);

// ---------------------------------------------------------------------------
// Heavy-tailed target: even mixture of two isotropic Student-t's at +/- mu,
// mu = (1,...,1)/sqrt(d), with nu degrees of freedom. nu = inf degenerates to
// the Gaussian mixture limit.
// ---------------------------------------------------------------------------

struct StudentMixtureSpec {
    std::size_t dim = 0;
    double nu = 3.0;

    std::vector<double> location() const;  // +mu; the other mode is -mu
};

Matrix student_mixture_sample(const StudentMixtureSpec& s, std::size_t n, Rng& rng);

/// Clean log density of the two-component t mixture (closed form).
double student_mixture_log_density(const StudentMixtureSpec& s, const double* x);

// ---------------------------------------------------------------------------
// Forward noising and isotropic Gaussian helpers.
// ---------------------------------------------------------------------------

/// x + sigma * Z, Z iid standard normal. Row order preserved.
Matrix forward_noise(const Matrix& x, double sigma, Rng& rng);

/// Convenience wrapper that tags the result.
SampleBatch forward_noise(const SampleBatch& b, double sigma, Rng& rng);

/// log N(x; 0, v I_d)
double iso_gaussian_log_density(const double* x, std::size_t d, double variance);

Matrix iso_gaussian_sample(std::size_t n, std::size_t d, double variance, Rng& rng);

}  // namespace shdiff
