#pragma once

#include <iosfwd>
#include <vector>

#include "shdiff/rng.hpp"
#include "shdiff/targets.hpp"
#include "shdiff/tensor.hpp"

namespace shdiff {

/// Anything that can evaluate grad_x log p_sigma(x) on a batch.
struct ScoreModel {
    virtual ~ScoreModel() = default;
    /// out must be n x d, same shape as x.
    virtual void score(const Matrix& x, double sigma, Matrix& out) const = 0;
};

/// Analytic score of a Gaussian-mixture target.
class GmmScore : public ScoreModel {
  public:
    explicit GmmScore(const GmmSpec& g) : g_(&g) {}
    void score(const Matrix& x, double sigma, Matrix& out) const override;

  private:
    const GmmSpec* g_;
};

/// Score of the noised isotropic Gaussian target N(0, s2 I):
/// grad log p = -x / (s2 + sigma^2). Closed-form test fixture.
class IsoGaussianScore : public ScoreModel {
  public:
    explicit IsoGaussianScore(double s2) : s2_(s2) {}
    void score(const Matrix& x, double sigma, Matrix& out) const override;

  private:
    double s2_;
};

/// Score of a point mass at c: -(x - c) / sigma^2.
class PointMassScore : public ScoreModel {
  public:
    explicit PointMassScore(std::vector<double> c) : c_(std::move(c)) {}
    void score(const Matrix& x, double sigma, Matrix& out) const override;

  private:
    std::vector<double> c_;
};

/// Optional per-step debug dump: one CSV row per (step, sigma, coordinate)
/// with the batch mean and standard deviation of that coordinate.
struct TrajectorySink {
    std::ostream* os = nullptr;
    void header() const;
    void record(std::size_t step, double sigma, const Matrix& x) const;
};

/// Stochastic Euler–Maruyama chain for the backward dynamics in the
/// sigma parameterization:
///   x_{k+1} = x_k + gamma_k * score(x_k, sigma_k) + sqrt(gamma_k) * z_k,
///   gamma_k = sigma_k^2 - sigma_{k+1}^2.
/// `sigmas` must be strictly decreasing and strictly positive — the chain
/// stops at the last positive level; the score at sigma = 0 is never queried.
Matrix em_sample(const ScoreModel& model, const Matrix& init,
                 const std::vector<double>& sigmas, Rng& rng,
                 TrajectorySink* sink = nullptr);

/// Deterministic second-order (Heun) integration of the probability-flow ODE
/// dx/dsigma = -sigma * score(x, sigma) across consecutive grid levels. The
/// grid may end at 0; the final step onto sigma = 0 falls back to plain Euler.
Matrix heun_sample(const ScoreModel& model, const Matrix& init,
                   const std::vector<double>& sigmas,
                   TrajectorySink* sink = nullptr);

}  // namespace shdiff
