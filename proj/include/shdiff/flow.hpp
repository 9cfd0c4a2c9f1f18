#pragma once

// Affine-coupling normalizing flow used as a learned initialization. Layers
// alternate even/odd masks; each updates the unfrozen half by scale-and-shift
// functions of the frozen half, so inversion and the log-determinant are
// exact. A constant training factor scales the output at the data boundary.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "shdiff/nn.hpp"
#include "shdiff/rng.hpp"
#include "shdiff/tensor.hpp"

namespace shdiff {

struct CouplingLayer {
    // true: even-index coordinates are frozen (condition the nets) and
    // odd-index coordinates are updated; false: the reverse.
    bool even_frozen = true;
    Mlp scale_net;  // d -> ... -> d, tanh output, scaled by kScaleClamp
    Mlp shift_net;  // d -> ... -> d, identity output
};

// Bound on |log scale| per coupling, keeping the Jacobian finite and nonzero.
inline constexpr double kScaleClamp = 2.0;

struct FlowModel {
    std::size_t dim = 0;
    std::vector<CouplingLayer> layers;
    double training_factor = 1.0;  // constant input scaling, inverted on sampling
    double sigma_T = 0.0;          // noise level the model was trained for

    /// Throws std::runtime_error on structural violations (dim mismatch,
    /// fewer than two layers, non-positive training factor).
    void validate() const;
};

enum class FlowDirection { forward, inverse };

/// Fresh flow with alternating masks starting even-frozen. The coupling nets'
/// output layers are zero-initialized, so the flow starts as the identity map
/// (times training_factor).
FlowModel make_flow(std::size_t dim, std::size_t layers, std::size_t width,
                    std::size_t depth, double training_factor, Rng& rng);

/// Map a batch through the flow. forward: base -> data scale (ends with the
/// training_factor multiplication); inverse: exact inverse. If `logdet` is
/// non-null it receives log|det J| per row (the training_factor constant
/// d*log f included, with sign matching the direction).
Matrix flow_transform(const FlowModel& model, const Matrix& z, FlowDirection dir,
                      std::vector<double>* logdet = nullptr);

/// Exact log p_theta(x) per row via the inverse transform and the base
/// standard normal.
std::vector<double> flow_logdensity(const FlowModel& model, const Matrix& x);

/// Forward-transform n base draws.
SampleBatch flow_sample(const FlowModel& model, std::size_t n, Rng& rng);

// --- training ----------------------------------------------------------------

enum class FlowTrainMode { fixed, dynamical };

FlowTrainMode flow_mode_from_string(const std::string& s);
std::string to_string(FlowTrainMode m);

struct FlowTrainConfig {
    std::size_t layers = 8;
    std::size_t width = 256;
    std::size_t depth = 2;  // hidden layers per coupling net
    std::size_t batch = 2048;
    std::size_t epochs = 100;
    double lr = 1e-4;
    double training_factor = 1.0;
};

struct FlowTrainResult {
    FlowModel model;
    std::vector<double> iteration_nll;  // one entry per optimizer step
    std::vector<double> epoch_median;   // per-epoch median of the above
};

// Flat views across every coupling net, in layer order (scale then shift);
// one optimizer instance drives the whole model.
std::size_t flow_param_count(const FlowModel& model);
void flow_write_params(const FlowModel& model, std::span<double> out);
void flow_read_params(FlowModel& model, std::span<const double> in);

/// Mean negative log-likelihood of the batch; when `flat_grads` is non-null
/// it receives d(mean NLL)/d(params) in the flat layout above. Exposed so the
/// gradients can be checked against finite differences.
double flow_nll_and_grads(const FlowModel& model, const Matrix& x,
                          std::span<double> flat_grads = {});

/// Fit a flow to the dataset noised to sigma_T. fixed: one noise draw up
/// front; dynamical: the clean data is re-noised every epoch. Minibatch Adam
/// on the mean NLL. Throws std::runtime_error on a non-finite NLL.
FlowTrainResult train_flow(const SampleBatch& dataset, double sigma_T,
                           const FlowTrainConfig& cfg, FlowTrainMode mode, Rng& rng);

// --- checkpoints ---------------------------------------------------------------

void save_flow(const std::string& path, const FlowModel& model);
FlowModel load_flow(const std::string& path);

}  // namespace shdiff
