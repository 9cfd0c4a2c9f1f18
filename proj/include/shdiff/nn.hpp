#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "shdiff/rng.hpp"
#include "shdiff/tensor.hpp"

namespace shdiff {

enum class Activation { silu, tanh_act, identity };

Activation activation_from_string(const std::string& s);
std::string to_string(Activation a);

double activate(Activation a, double x);
double activate_grad(Activation a, double x);  // derivative at pre-activation x

/// One dense layer: y = act(x W^T + b). weight is out x in, row-major.
struct DenseLayer {
    Matrix weight;
    std::vector<double> bias;
    Activation act = Activation::identity;

    std::size_t in_dim() const { return weight.cols; }
    std::size_t out_dim() const { return weight.rows; }
};

struct Mlp {
    std::vector<DenseLayer> layers;

    std::size_t input_dim() const { return layers.front().in_dim(); }
    std::size_t output_dim() const { return layers.back().out_dim(); }
    std::size_t param_count() const;

    /// Throws std::runtime_error if layer dims do not chain or a value is
    /// not finite. Called after deserialization.
    void validate() const;
};

/// Build an MLP with the given widths (widths.size() >= 2). Hidden layers use
/// `hidden`, the last layer `out`. Weights U[-a, a], a = sqrt(6/(fan_in +
/// fan_out)); biases zero.
Mlp make_mlp(const std::vector<std::size_t>& widths, Activation hidden,
             Activation out, Rng& rng);

/// Per-layer intermediates kept for the backward pass.
struct ForwardCache {
    std::vector<Matrix> inputs;   // input to layer l (batch x in_l)
    std::vector<Matrix> preacts;  // x W^T + b before activation (batch x out_l)
};

/// Forward a batch (rows are samples). Cache may be null for inference.
Matrix mlp_forward(const Mlp& mlp, const Matrix& x, ForwardCache* cache = nullptr);

struct MlpGrads {
    std::vector<Matrix> weight;
    std::vector<std::vector<double>> bias;
    void zero();
};

MlpGrads make_grads(const Mlp& mlp);

/// Exact reverse-mode gradients. `upstream` is dL/d(output), batch x out; the
/// parameter gradients accumulate the per-row contributions (sum over the
/// batch — the caller folds any 1/batch into upstream). Returns dL/d(input).
Matrix mlp_backward(const Mlp& mlp, const ForwardCache& cache,
                    const Matrix& upstream, MlpGrads* grads);

// --- flat parameter views (optimizer state lives on flat vectors) ----------

std::size_t write_flat_params(const Mlp& mlp, std::span<double> out);
std::size_t read_flat_params(Mlp& mlp, std::span<const double> in);
std::size_t write_flat_grads(const MlpGrads& g, std::span<double> out);

// --- Adam -------------------------------------------------------------------

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam with bias correction over a flat parameter vector.
class Adam {
  public:
    Adam(std::size_t n, AdamConfig cfg) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

    void step(std::span<double> params, std::span<const double> grads);
    std::uint64_t steps_taken() const { return t_; }

  private:
    AdamConfig cfg_;
    std::vector<double> m_, v_;
    std::uint64_t t_ = 0;
};

// --- serialization -----------------------------------------------------------
//
// Versioned text record: a header with layer sizes and activations followed by
// row-major weights and biases, printed with 17 significant digits so the
// round trip is value-exact.

void write_mlp(std::ostream& os, const Mlp& mlp);
Mlp read_mlp(std::istream& is);

void save_mlp(const std::string& path, const Mlp& mlp);
Mlp load_mlp(const std::string& path);

}  // namespace shdiff
