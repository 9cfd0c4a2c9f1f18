#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "shdiff/nn.hpp"
#include "shdiff/samplers.hpp"
#include "shdiff/tensor.hpp"

namespace shdiff {

/// MLP denoiser with EDM-style preconditioning:
///   D(x, sigma) = c_skip(sigma) x + c_out(sigma) F(c_in(sigma) x, c_noise(sigma))
/// where F is the trunk and c_noise enters through a fixed sinusoidal
/// embedding concatenated to the scaled input.
struct DenoiserNet {
    Mlp trunk;                 // input: dim + 2 * freqs.size(), output: dim
    double sigma_data = 1.0;   // preconditioning constant, > 0
    std::vector<double> freqs; // noise-embedding frequency table
    std::size_t dim = 0;

    std::size_t embed_width() const { return 2 * freqs.size(); }
    void validate() const;
};

/// Preconditioning constants at noise level sigma.
struct Precond {
    double c_skip, c_out, c_in, c_noise;
};
Precond precond(double sigma, double sigma_data);

/// Loss weight lambda(sigma) = (sigma^2 + sigma_data^2) / (sigma * sigma_data)^2.
double denoise_loss_weight(double sigma, double sigma_data);

/// Fresh net with the standard trunk (4 hidden layers by default). The
/// embedding table is the deterministic geometric ladder 2^(j/2), j = 0..15.
DenoiserNet make_denoiser(std::size_t dim, std::size_t width, std::size_t hidden_layers,
                          double sigma_data, Rng& rng);

/// D(x, sigma) for one shared noise level. sigma <= 0 is a configuration error.
Matrix denoiser_forward(const DenoiserNet& net, const Matrix& x, double sigma);

/// Per-row noise levels (training-time path).
Matrix denoiser_forward_rows(const DenoiserNet& net, const Matrix& x,
                             const std::vector<double>& sigmas);

/// Score bridge: (D(x, sigma) - x) / sigma^2.
Matrix denoiser_score(const DenoiserNet& net, const Matrix& x, double sigma);

/// EDM-weighted denoising loss (mean over the batch) and its exact gradients
/// with respect to the trunk parameters. Exposed so the gradient test suite
/// can finite-difference the full preconditioned loss.
double denoiser_loss_and_grads(const DenoiserNet& net, const Matrix& clean,
                               const Matrix& noised, const std::vector<double>& sigmas,
                               MlpGrads* grads);

struct DenoiseTrainConfig {
    double lr = 1e-4;
    std::size_t batch = 20000;
    std::size_t epochs = 100;
    double sigma_min = 0.002;
    double sigma_max = 2.0;
    // Log-normal level sampling; NaN means "derive from the sigma range":
    // p_mean = (ln sigma_max + ln sigma_min)/2, p_std = (ln sigma_max - ln
    // sigma_min)/4, so the range sits at +/- 2 std. Draws are clamped.
    double p_mean = std::numeric_limits<double>::quiet_NaN();
    double p_std = std::numeric_limits<double>::quiet_NaN();
    std::size_t width = 128;
    std::size_t hidden_layers = 4;
    std::uint64_t seed = 1;

    double resolved_p_mean() const;
    double resolved_p_std() const;
};

struct DenoiserTrainResult {
    DenoiserNet net;
    std::vector<double> iteration_loss;  // one entry per optimizer step
    std::vector<double> epoch_median;    // per-epoch median of the above
};

/// Train on clean target draws. sigma_data is estimated from the dataset
/// (root-mean-square of the per-coordinate standard deviations).
DenoiserTrainResult train_denoiser(const Matrix& dataset, const DenoiseTrainConfig& cfg);

/// ScoreModel adapter for the samplers.
class DenoiserScore : public ScoreModel {
  public:
    explicit DenoiserScore(const DenoiserNet& net) : net_(&net) {}
    void score(const Matrix& x, double sigma, Matrix& out) const override;

  private:
    const DenoiserNet* net_;
};

void save_denoiser(const std::string& path, const DenoiserNet& net);
DenoiserNet load_denoiser(const std::string& path);

}  // namespace shdiff
