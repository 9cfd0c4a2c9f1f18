#include "shdiff/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "shdiff/kernels.hpp"

namespace shdiff {

void DenoiserNet::validate() const {
    if (!(sigma_data > 0.0)) throw std::runtime_error("denoiser: sigma_data must be > 0");
    if (dim == 0) throw std::runtime_error("denoiser: zero dimension");
    if (freqs.empty()) throw std::runtime_error("denoiser: empty embedding table");
    trunk.validate();
    if (trunk.input_dim() != dim + embed_width() || trunk.output_dim() != dim)
        throw std::runtime_error("denoiser: trunk shape does not match dim/embedding");
}

Precond precond(double sigma, double sigma_data) {
    const double s2 = sigma * sigma, d2 = sigma_data * sigma_data;
    Precond p;
    p.c_skip = d2 / (s2 + d2);
    p.c_out = sigma * sigma_data / std::sqrt(s2 + d2);
    p.c_in = 1.0 / std::sqrt(s2 + d2);
    p.c_noise = 0.25 * std::log(sigma);
    return p;
}

double denoise_loss_weight(double sigma, double sigma_data) {
    const double s2 = sigma * sigma, d2 = sigma_data * sigma_data;
    return (s2 + d2) / (s2 * d2);
}

DenoiserNet make_denoiser(std::size_t dim, std::size_t width, std::size_t hidden_layers,
                          double sigma_data, Rng& rng) {
    DenoiserNet net;
    net.dim = dim;
    net.sigma_data = sigma_data;
    net.freqs.resize(16);
    for (std::size_t j = 0; j < net.freqs.size(); ++j)
        net.freqs[j] = std::pow(2.0, 0.5 * double(j));
    std::vector<std::size_t> widths;
    widths.push_back(dim + net.embed_width());
    for (std::size_t i = 0; i < hidden_layers; ++i) widths.push_back(width);
    widths.push_back(dim);
    net.trunk = make_mlp(widths, Activation::silu, Activation::identity, rng);
    return net;
}

namespace {

// Assemble the trunk input [c_in * x | sin(f c_noise) | cos(f c_noise)] for
// per-row noise levels.
Matrix trunk_input(const DenoiserNet& net, const Matrix& x,
                   const std::vector<double>& sigmas) {
    const std::size_t d = net.dim, f = net.freqs.size();
    Matrix in(x.rows, d + 2 * f);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const Precond p = precond(sigmas[i], net.sigma_data);
        const double* xr = x.row(i);
        double* r = in.row(i);
        for (std::size_t j = 0; j < d; ++j) r[j] = p.c_in * xr[j];
        for (std::size_t j = 0; j < f; ++j) {
            r[d + j] = std::sin(net.freqs[j] * p.c_noise);
            r[d + f + j] = std::cos(net.freqs[j] * p.c_noise);
        }
    }
    return in;
}

void check_sigmas(const std::vector<double>& sigmas, std::size_t rows) {
    if (sigmas.size() != rows)
        throw std::invalid_argument("denoiser: sigma count does not match batch");
    for (double s : sigmas)
        if (!(s > 0.0)) throw std::invalid_argument("denoiser: sigma must be > 0");
}

}  // namespace

Matrix denoiser_forward_rows(const DenoiserNet& net, const Matrix& x,
                             const std::vector<double>& sigmas) {
    check_sigmas(sigmas, x.rows);
    if (x.cols != net.dim) throw std::invalid_argument("denoiser: dim mismatch");
    const Matrix f = mlp_forward(net.trunk, trunk_input(net, x, sigmas));
    Matrix d(x.rows, x.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const Precond p = precond(sigmas[i], net.sigma_data);
        const double* xr = x.row(i);
        const double* fr = f.row(i);
        double* dr = d.row(i);
        for (std::size_t j = 0; j < x.cols; ++j)
            dr[j] = p.c_skip * xr[j] + p.c_out * fr[j];
    }
    return d;
}

Matrix denoiser_forward(const DenoiserNet& net, const Matrix& x, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("denoiser_forward: sigma must be > 0");
    return denoiser_forward_rows(net, x, std::vector<double>(x.rows, sigma));
}

Matrix denoiser_score(const DenoiserNet& net, const Matrix& x, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("denoiser_score: sigma must be > 0");
    Matrix d = denoiser_forward(net, x, sigma);
    const double inv = 1.0 / (sigma * sigma);
    for (std::size_t i = 0; i < d.size(); ++i) d.data[i] = (d.data[i] - x.data[i]) * inv;
    return d;
}

void DenoiserScore::score(const Matrix& x, double sigma, Matrix& out) const {
    out = denoiser_score(*net_, x, sigma);
}

double denoiser_loss_and_grads(const DenoiserNet& net, const Matrix& clean,
                               const Matrix& noised, const std::vector<double>& sigmas,
                               MlpGrads* grads) {
    check_sigmas(sigmas, noised.rows);
    const std::size_t n = noised.rows, d = net.dim;
    const Matrix in = trunk_input(net, noised, sigmas);
    ForwardCache cache;
    const Matrix f = mlp_forward(net.trunk, in, grads ? &cache : nullptr);

    // loss = (1/n) sum_i lambda_i || c_skip_i x_i + c_out_i F_i - clean_i ||^2
    double loss = 0.0;
    Matrix upstream(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        const Precond p = precond(sigmas[i], net.sigma_data);
        const double lam = denoise_loss_weight(sigmas[i], net.sigma_data);
        const double* xr = noised.row(i);
        const double* cr = clean.row(i);
        const double* fr = f.row(i);
        double* ur = upstream.row(i);
        double rsq = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double r = p.c_skip * xr[j] + p.c_out * fr[j] - cr[j];
            rsq += r * r;
            ur[j] = 2.0 * lam * p.c_out * r / double(n);
        }
        loss += lam * rsq;
    }
    loss /= double(n);
    if (!std::isfinite(loss)) throw std::runtime_error("denoiser: non-finite training loss");
    if (grads) mlp_backward(net.trunk, cache, upstream, grads);
    return loss;
}

double DenoiseTrainConfig::resolved_p_mean() const {
    if (!std::isnan(p_mean)) return p_mean;
    return 0.5 * (std::log(sigma_max) + std::log(sigma_min));
}

double DenoiseTrainConfig::resolved_p_std() const {
    if (!std::isnan(p_std)) return p_std;
    return 0.25 * (std::log(sigma_max) - std::log(sigma_min));
}

DenoiserTrainResult train_denoiser(const Matrix& dataset, const DenoiseTrainConfig& cfg) {
    if (dataset.rows == 0) throw std::invalid_argument("train_denoiser: empty dataset");
    if (!(cfg.sigma_min > 0.0) || !(cfg.sigma_max > cfg.sigma_min))
        throw std::invalid_argument("train_denoiser: need 0 < sigma_min < sigma_max");
    const std::size_t batch = std::min(cfg.batch, dataset.rows);
    if (batch == 0) throw std::invalid_argument("train_denoiser: zero batch");

    const std::size_t n = dataset.rows, d = dataset.cols;

    // sigma_data: RMS of the per-coordinate standard deviations.
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        double m = 0.0, m2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            m += dataset(i, j);
            m2 += dataset(i, j) * dataset(i, j);
        }
        m /= double(n);
        acc += std::max(m2 / double(n) - m * m, 0.0);
    }
    const double sigma_data = std::max(std::sqrt(acc / double(d)), 1e-8);

    Rng rng(derive_seed(cfg.seed, "denoiser-train"));
    DenoiserNet net = make_denoiser(d, cfg.width, cfg.hidden_layers, sigma_data, rng);

    const std::size_t np = net.trunk.param_count();
    std::vector<double> theta(np), flat_grads(np);
    write_flat_params(net.trunk, theta);
    AdamConfig acfg;
    acfg.lr = cfg.lr;
    Adam opt(np, acfg);
    MlpGrads grads = make_grads(net.trunk);

    const double pm = cfg.resolved_p_mean(), ps = cfg.resolved_p_std();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    DenoiserTrainResult res;
    Matrix clean(batch, d), noised(batch, d);
    std::vector<double> sigmas(batch);
    const std::size_t steps_per_epoch = std::max<std::size_t>(1, n / batch);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher–Yates shuffle from the training stream.
        for (std::size_t i = n; i > 1; --i) {
            const std::size_t j = rng.below(i);
            std::swap(order[i - 1], order[j]);
        }
        std::vector<double> epoch_losses;
        for (std::size_t step = 0; step < steps_per_epoch; ++step) {
            for (std::size_t b = 0; b < batch; ++b) {
                const double* src = dataset.row(order[(step * batch + b) % n]);
                double* dst = clean.row(b);
                std::copy(src, src + d, dst);
                const double z = rng.normal();
                sigmas[b] = std::clamp(std::exp(pm + ps * z), cfg.sigma_min, cfg.sigma_max);
                double* nr = noised.row(b);
                for (std::size_t j = 0; j < d; ++j) nr[j] = dst[j] + sigmas[b] * rng.normal();
            }
            grads.zero();
            const double loss = denoiser_loss_and_grads(net, clean, noised, sigmas, &grads);
            write_flat_grads(grads, flat_grads);
            opt.step(theta, flat_grads);
            read_flat_params(net.trunk, theta);
            res.iteration_loss.push_back(loss);
            epoch_losses.push_back(loss);
        }
        std::sort(epoch_losses.begin(), epoch_losses.end());
        const std::size_t m = epoch_losses.size();
        res.epoch_median.push_back(m % 2 ? epoch_losses[m / 2]
                                         : 0.5 * (epoch_losses[m / 2 - 1] + epoch_losses[m / 2]));
    }
    res.net = std::move(net);
    res.net.validate();
    return res;
}

void save_denoiser(const std::string& path, const DenoiserNet& net) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    f << "shdiff-denoiser 1\n";
    f << "dim " << net.dim << "\n";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", net.sigma_data);
    f << "sigma_data " << buf << "\n";
    f << "freqs " << net.freqs.size();
    for (double v : net.freqs) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        f << ' ' << buf;
    }
    f << "\n";
    write_mlp(f, net.trunk);
    if (!f) throw std::runtime_error("write failed: " + path);
}

DenoiserNet load_denoiser(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::string magic, kw;
    int version = 0;
    f >> magic >> version;
    if (magic != "shdiff-denoiser" || version != 1)
        throw std::runtime_error("denoiser load: bad header");
    DenoiserNet net;
    std::size_t nf = 0;
    f >> kw >> net.dim;
    if (kw != "dim") throw std::runtime_error("denoiser load: missing dim");
    f >> kw >> net.sigma_data;
    if (kw != "sigma_data") throw std::runtime_error("denoiser load: missing sigma_data");
    f >> kw >> nf;
    if (kw != "freqs") throw std::runtime_error("denoiser load: missing freqs");
    net.freqs.resize(nf);
    for (auto& v : net.freqs) f >> v;
    net.trunk = read_mlp(f);
    net.validate();
    return net;
}

}  // namespace shdiff
