#include "shdiff/nn.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "shdiff/kernels.hpp"

namespace shdiff {

Activation activation_from_string(const std::string& s) {
    if (s == "silu") return Activation::silu;
    if (s == "tanh") return Activation::tanh_act;
    if (s == "identity") return Activation::identity;
    throw std::invalid_argument("unknown activation: " + s);
}

std::string to_string(Activation a) {
    switch (a) {
        case Activation::silu: return "silu";
        case Activation::tanh_act: return "tanh";
        case Activation::identity: return "identity";
    }
    return "?";
}

double activate(Activation a, double x) {
    switch (a) {
        case Activation::silu: return x / (1.0 + std::exp(-x));
        case Activation::tanh_act: return std::tanh(x);
        case Activation::identity: return x;
    }
    return x;
}

double activate_grad(Activation a, double x) {
    switch (a) {
        case Activation::silu: {
            const double s = 1.0 / (1.0 + std::exp(-x));
            return s * (1.0 + x * (1.0 - s));
        }
        case Activation::tanh_act: {
            const double t = std::tanh(x);
            return 1.0 - t * t;
        }
        case Activation::identity: return 1.0;
    }
    return 1.0;
}

std::size_t Mlp::param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
}

void Mlp::validate() const {
    if (layers.empty()) throw std::runtime_error("mlp: no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        if (l.weight.rows == 0 || l.weight.cols == 0)
            throw std::runtime_error("mlp: empty layer " + std::to_string(i));
        if (l.bias.size() != l.out_dim())
            throw std::runtime_error("mlp: bias size mismatch in layer " + std::to_string(i));
        if (i > 0 && l.in_dim() != layers[i - 1].out_dim())
            throw std::runtime_error("mlp: layer " + std::to_string(i) +
                                     " input does not match previous output");
        if (!l.weight.all_finite())
            throw std::runtime_error("mlp: non-finite weight in layer " + std::to_string(i));
        for (double b : l.bias)
            if (!std::isfinite(b))
                throw std::runtime_error("mlp: non-finite bias in layer " + std::to_string(i));
    }
}

Mlp make_mlp(const std::vector<std::size_t>& widths, Activation hidden,
             Activation out, Rng& rng) {
    if (widths.size() < 2) throw std::invalid_argument("make_mlp: need at least two widths");
    Mlp mlp;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        DenseLayer l;
        l.weight = Matrix(widths[i + 1], widths[i]);
        l.bias.assign(widths[i + 1], 0.0);
        l.act = (i + 2 == widths.size()) ? out : hidden;
        const double a = std::sqrt(6.0 / double(widths[i] + widths[i + 1]));
        for (auto& w : l.weight.data) w = a * (2.0 * rng.uniform() - 1.0);
        mlp.layers.push_back(std::move(l));
    }
    return mlp;
}

Matrix mlp_forward(const Mlp& mlp, const Matrix& x, ForwardCache* cache) {
    if (x.cols != mlp.input_dim())
        throw std::invalid_argument("mlp_forward: input dim mismatch");
    if (cache) {
        cache->inputs.clear();
        cache->preacts.clear();
    }
    Matrix cur = x;
    for (const auto& l : mlp.layers) {
        const std::size_t batch = cur.rows, out = l.out_dim();
        Matrix pre(batch, out);
        kernels::matmul_nt(batch, out, l.in_dim(), cur.data.data(),
                           l.weight.data.data(), pre.data.data());
        for (std::size_t i = 0; i < batch; ++i) {
            double* row = pre.row(i);
            for (std::size_t j = 0; j < out; ++j) row[j] += l.bias[j];
        }
        if (cache) cache->inputs.push_back(std::move(cur));
        Matrix post(batch, out);
        for (std::size_t i = 0; i < pre.size(); ++i)
            post.data[i] = activate(l.act, pre.data[i]);
        if (cache) cache->preacts.push_back(std::move(pre));
        cur = std::move(post);
    }
    return cur;
}

void MlpGrads::zero() {
    for (auto& w : weight) std::fill(w.data.begin(), w.data.end(), 0.0);
    for (auto& b : bias) std::fill(b.begin(), b.end(), 0.0);
}

MlpGrads make_grads(const Mlp& mlp) {
    MlpGrads g;
    for (const auto& l : mlp.layers) {
        g.weight.emplace_back(l.out_dim(), l.in_dim());
        g.bias.emplace_back(l.out_dim(), 0.0);
    }
    return g;
}

Matrix mlp_backward(const Mlp& mlp, const ForwardCache& cache,
                    const Matrix& upstream, MlpGrads* grads) {
    if (cache.inputs.size() != mlp.layers.size())
        throw std::invalid_argument("mlp_backward: cache does not match network");
    Matrix g = upstream;  // dL/d(layer output)
    for (std::size_t li = mlp.layers.size(); li-- > 0;) {
        const auto& l = mlp.layers[li];
        const Matrix& pre = cache.preacts[li];
        const Matrix& in = cache.inputs[li];
        const std::size_t batch = g.rows, out = l.out_dim(), inw = l.in_dim();
        g.require_shape(batch, out, "mlp_backward upstream");

        // dL/d(preact) = upstream .* act'(preact)
        Matrix gpre(batch, out);
        for (std::size_t i = 0; i < g.size(); ++i)
            gpre.data[i] = g.data[i] * activate_grad(l.act, pre.data[i]);

        if (grads) {
            // dW += gpre^T * in  (out x in), summed over the batch.
            Matrix dw(out, inw);
            kernels::matmul_tn(out, inw, batch, gpre.data.data(), in.data.data(),
                               dw.data.data());
            kernels::axpy(dw.size(), 1.0, dw.data.data(),
                          grads->weight[li].data.data());
            for (std::size_t i = 0; i < batch; ++i)
                kernels::axpy(out, 1.0, gpre.row(i), grads->bias[li].data());
        }

        // dL/d(input) = gpre * W  (batch x in)
        Matrix gin(batch, inw);
        kernels::matmul_nn(batch, inw, out, gpre.data.data(),
                           l.weight.data.data(), gin.data.data());
        g = std::move(gin);
    }
    return g;
}

std::size_t write_flat_params(const Mlp& mlp, std::span<double> out) {
    std::size_t o = 0;
    for (const auto& l : mlp.layers) {
        for (double w : l.weight.data) out[o++] = w;
        for (double b : l.bias) out[o++] = b;
    }
    return o;
}

std::size_t read_flat_params(Mlp& mlp, std::span<const double> in) {
    std::size_t o = 0;
    for (auto& l : mlp.layers) {
        for (double& w : l.weight.data) w = in[o++];
        for (double& b : l.bias) b = in[o++];
    }
    return o;
}

std::size_t write_flat_grads(const MlpGrads& g, std::span<double> out) {
    std::size_t o = 0;
    for (std::size_t li = 0; li < g.weight.size(); ++li) {
        for (double w : g.weight[li].data) out[o++] = w;
        for (double b : g.bias[li]) out[o++] = b;
    }
    return o;
}

void Adam::step(std::span<double> params, std::span<const double> grads) {
    if (params.size() != m_.size() || grads.size() != m_.size())
        throw std::invalid_argument("adam: size mismatch");
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, double(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, double(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
        v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g * g;
        const double mhat = m_[i] / c1;
        const double vhat = v_[i] / c2;
        params[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
}

namespace {

void write_double(std::ostream& os, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
}

}  // namespace

void write_mlp(std::ostream& os, const Mlp& mlp) {
    os << "shdiff-mlp 1\n";
    os << "layers " << mlp.layers.size() << "\n";
    for (const auto& l : mlp.layers)
        os << "layer " << l.out_dim() << ' ' << l.in_dim() << ' ' << to_string(l.act) << "\n";
    for (const auto& l : mlp.layers) {
        for (std::size_t i = 0; i < l.out_dim(); ++i) {
            const double* row = l.weight.row(i);
            for (std::size_t j = 0; j < l.in_dim(); ++j) {
                if (j) os << ' ';
                write_double(os, row[j]);
            }
            os << "\n";
        }
        for (std::size_t j = 0; j < l.bias.size(); ++j) {
            if (j) os << ' ';
            write_double(os, l.bias[j]);
        }
        os << "\n";
    }
}

Mlp read_mlp(std::istream& is) {
    std::string magic;
    int version = 0;
    is >> magic >> version;
    if (magic != "shdiff-mlp" || version != 1)
        throw std::runtime_error("mlp load: bad header (expected 'shdiff-mlp 1')");
    std::string kw;
    std::size_t nlayers = 0;
    is >> kw >> nlayers;
    if (kw != "layers" || nlayers == 0)
        throw std::runtime_error("mlp load: bad layer count");
    Mlp mlp;
    for (std::size_t i = 0; i < nlayers; ++i) {
        std::size_t out = 0, in = 0;
        std::string act;
        is >> kw >> out >> in >> act;
        if (kw != "layer" || !is)
            throw std::runtime_error("mlp load: bad layer header " + std::to_string(i));
        DenseLayer l;
        l.weight = Matrix(out, in);
        l.bias.assign(out, 0.0);
        l.act = activation_from_string(act);
        mlp.layers.push_back(std::move(l));
    }
    for (auto& l : mlp.layers) {
        for (auto& w : l.weight.data) is >> w;
        for (auto& b : l.bias) is >> b;
    }
    if (!is) throw std::runtime_error("mlp load: truncated parameter block");
    mlp.validate();
    return mlp;
}

void save_mlp(const std::string& path, const Mlp& mlp) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    write_mlp(f, mlp);
    if (!f) throw std::runtime_error("write failed: " + path);
}

Mlp load_mlp(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open: " + path);
    return read_mlp(f);
}

}  // namespace shdiff
