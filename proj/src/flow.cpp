#include "shdiff/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace shdiff {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// Coordinate j is frozen (conditions the nets) iff its parity matches the
// layer's even_frozen flag.
inline bool frozen(const CouplingLayer& layer, std::size_t j) {
    return (j % 2 == 0) == layer.even_frozen;
}

Matrix masked_input(const CouplingLayer& layer, const Matrix& u) {
    Matrix m = u;
    for (std::size_t i = 0; i < m.rows; ++i) {
        double* r = m.row(i);
        for (std::size_t j = 0; j < m.cols; ++j)
            if (!frozen(layer, j)) r[j] = 0.0;
    }
    return m;
}

void check_scale_finite(const Matrix& s) {
    if (!s.all_finite()) throw std::runtime_error("flow: non-finite scale output");
}

}  // namespace

void FlowModel::validate() const {
    if (dim < 2) throw std::runtime_error("flow: dim must be >= 2");
    if (layers.size() < 2) throw std::runtime_error("flow: need at least two coupling layers");
    if (!(training_factor > 0.0)) throw std::runtime_error("flow: training_factor must be > 0");
    for (const auto& layer : layers) {
        layer.scale_net.validate();
        layer.shift_net.validate();
        if (layer.scale_net.input_dim() != dim || layer.scale_net.output_dim() != dim ||
            layer.shift_net.input_dim() != dim || layer.shift_net.output_dim() != dim)
            throw std::runtime_error("flow: coupling net width does not match dim");
    }
}

FlowModel make_flow(std::size_t dim, std::size_t layers, std::size_t width,
                    std::size_t depth, double training_factor, Rng& rng) {
    if (dim < 2) throw std::invalid_argument("make_flow: dim must be >= 2");
    if (layers < 2) throw std::invalid_argument("make_flow: need at least two layers");
    if (!(training_factor > 0.0))
        throw std::invalid_argument("make_flow: training_factor must be > 0");
    FlowModel model;
    model.dim = dim;
    model.training_factor = training_factor;
    std::vector<std::size_t> widths;
    widths.push_back(dim);
    for (std::size_t i = 0; i < depth; ++i) widths.push_back(width);
    widths.push_back(dim);
    for (std::size_t l = 0; l < layers; ++l) {
        CouplingLayer layer;
        layer.even_frozen = (l % 2 == 0);
        layer.scale_net = make_mlp(widths, Activation::silu, Activation::tanh_act, rng);
        layer.shift_net = make_mlp(widths, Activation::silu, Activation::identity, rng);
        // Zero the output layers so the fresh flow is the identity map.
        for (Mlp* net : {&layer.scale_net, &layer.shift_net}) {
            auto& out = net->layers.back();
            std::fill(out.weight.data.begin(), out.weight.data.end(), 0.0);
            std::fill(out.bias.begin(), out.bias.end(), 0.0);
        }
        model.layers.push_back(std::move(layer));
    }
    return model;
}

Matrix flow_transform(const FlowModel& model, const Matrix& z, FlowDirection dir,
                      std::vector<double>* logdet) {
    if (z.cols != model.dim) throw std::invalid_argument("flow_transform: dim mismatch");
    if (!z.all_finite()) throw std::invalid_argument("flow_transform: non-finite input");
    const std::size_t n = z.rows, d = model.dim;
    const double lf = d * std::log(model.training_factor);
    Matrix u = z;
    std::vector<double> ld(n, 0.0);

    if (dir == FlowDirection::forward) {
        for (const auto& layer : model.layers) {
            const Matrix m = masked_input(layer, u);
            const Matrix sraw = mlp_forward(layer.scale_net, m);
            check_scale_finite(sraw);
            const Matrix t = mlp_forward(layer.shift_net, m);
            for (std::size_t i = 0; i < n; ++i) {
                double* r = u.row(i);
                const double* sr = sraw.row(i);
                const double* tr = t.row(i);
                for (std::size_t j = 0; j < d; ++j) {
                    if (frozen(layer, j)) continue;
                    const double s = kScaleClamp * sr[j];
                    r[j] = r[j] * std::exp(s) + tr[j];
                    ld[i] += s;
                }
            }
        }
        for (auto& v : u.data) v *= model.training_factor;
        for (auto& v : ld) v += lf;
    } else {
        for (auto& v : u.data) v /= model.training_factor;
        for (auto& v : ld) v -= lf;
        for (std::size_t k = model.layers.size(); k-- > 0;) {
            const auto& layer = model.layers[k];
            const Matrix m = masked_input(layer, u);
            const Matrix sraw = mlp_forward(layer.scale_net, m);
            check_scale_finite(sraw);
            const Matrix t = mlp_forward(layer.shift_net, m);
            for (std::size_t i = 0; i < n; ++i) {
                double* r = u.row(i);
                const double* sr = sraw.row(i);
                const double* tr = t.row(i);
                for (std::size_t j = 0; j < d; ++j) {
                    if (frozen(layer, j)) continue;
                    const double s = kScaleClamp * sr[j];
                    r[j] = (r[j] - tr[j]) * std::exp(-s);
                    ld[i] -= s;
                }
            }
        }
    }
    if (logdet) *logdet = std::move(ld);
    return u;
}

std::vector<double> flow_logdensity(const FlowModel& model, const Matrix& x) {
    std::vector<double> ld;
    const Matrix z = flow_transform(model, x, FlowDirection::inverse, &ld);
    const double d = double(model.dim);
    for (std::size_t i = 0; i < z.rows; ++i) {
        double q = 0.0;
        const double* r = z.row(i);
        for (std::size_t j = 0; j < z.cols; ++j) q += r[j] * r[j];
        ld[i] += -0.5 * q - 0.5 * d * kLog2Pi;
    }
    return ld;
}

SampleBatch flow_sample(const FlowModel& model, std::size_t n, Rng& rng) {
    if (n == 0) throw std::invalid_argument("flow_sample: n must be >= 1");
    Matrix z(n, model.dim);
    for (auto& v : z.data) v = rng.normal();
    SampleBatch batch;
    batch.points = flow_transform(model, z, FlowDirection::forward);
    batch.tag = SampleTag::generated;
    batch.sigma = model.sigma_T;
    return batch;
}

FlowTrainMode flow_mode_from_string(const std::string& s) {
    if (s == "fixed") return FlowTrainMode::fixed;
    if (s == "dynamical") return FlowTrainMode::dynamical;
    throw std::invalid_argument("unknown flow training mode: " + s);
}

std::string to_string(FlowTrainMode m) {
    return m == FlowTrainMode::fixed ? "fixed" : "dynamical";
}

// --- flat parameter views -----------------------------------------------------

std::size_t flow_param_count(const FlowModel& model) {
    std::size_t n = 0;
    for (const auto& layer : model.layers)
        n += layer.scale_net.param_count() + layer.shift_net.param_count();
    return n;
}

void flow_write_params(const FlowModel& model, std::span<double> out) {
    std::size_t off = 0;
    for (const auto& layer : model.layers) {
        off += write_flat_params(layer.scale_net, out.subspan(off));
        off += write_flat_params(layer.shift_net, out.subspan(off));
    }
}

void flow_read_params(FlowModel& model, std::span<const double> in) {
    std::size_t off = 0;
    for (auto& layer : model.layers) {
        off += read_flat_params(layer.scale_net, in.subspan(off));
        off += read_flat_params(layer.shift_net, in.subspan(off));
    }
}

// --- NLL and gradients ----------------------------------------------------------

double flow_nll_and_grads(const FlowModel& model, const Matrix& x,
                          std::span<double> flat_grads) {
    if (x.cols != model.dim) throw std::invalid_argument("flow nll: dim mismatch");
    if (x.rows == 0) throw std::invalid_argument("flow nll: empty batch");
    const std::size_t n = x.rows, d = model.dim, L = model.layers.size();
    const bool want_grads = !flat_grads.empty();

    // Run the inverse transform keeping per-layer caches. Layer k maps
    // u[k+1] -> u[k] (data side to base side); execution order is k = L-1..0.
    struct LayerCache {
        Matrix in;      // u[k+1]
        Matrix out;     // u[k]
        Matrix sraw;    // scale-net output (tanh-bounded)
        Matrix t;       // shift-net output
        ForwardCache scale_cache, shift_cache;
    };
    std::vector<LayerCache> caches(want_grads ? L : 0);

    Matrix u = x;
    for (auto& v : u.data) v /= model.training_factor;
    double nll = 0.5 * double(d) * kLog2Pi + double(d) * std::log(model.training_factor);
    double slog = 0.0;  // mean of summed log-scales (enters NLL positively)

    for (std::size_t k = L; k-- > 0;) {
        const auto& layer = model.layers[k];
        const Matrix m = masked_input(layer, u);
        LayerCache tmp;
        LayerCache& c = want_grads ? caches[k] : tmp;
        c.sraw = mlp_forward(layer.scale_net, m, want_grads ? &c.scale_cache : nullptr);
        check_scale_finite(c.sraw);
        c.t = mlp_forward(layer.shift_net, m, want_grads ? &c.shift_cache : nullptr);
        if (want_grads) c.in = u;
        for (std::size_t i = 0; i < n; ++i) {
            double* r = u.row(i);
            const double* sr = c.sraw.row(i);
            const double* tr = c.t.row(i);
            for (std::size_t j = 0; j < d; ++j) {
                if (frozen(layer, j)) continue;
                const double s = kScaleClamp * sr[j];
                r[j] = (r[j] - tr[j]) * std::exp(-s);
                slog += s;
            }
        }
        if (want_grads) c.out = u;
    }
    double quad = 0.0;
    for (double v : u.data) quad += v * v;
    nll += 0.5 * quad / double(n) + slog / double(n);
    if (!std::isfinite(nll)) throw std::runtime_error("flow: non-finite NLL");
    if (!want_grads) return nll;

    if (flat_grads.size() != flow_param_count(model))
        throw std::invalid_argument("flow nll: gradient buffer size mismatch");

    // Reverse pass: d(mean NLL)/dz seeds the chain, layers visited 0..L-1
    // (the reverse of the inverse execution order above).
    Matrix g = u;  // u is now z
    for (auto& v : g.data) v /= double(n);

    std::size_t off = flat_grads.size();
    std::vector<std::vector<double>> scale_flat(L), shift_flat(L);
    Matrix gs(n, d), gt(n, d);
    for (std::size_t k = 0; k < L; ++k) {
        const auto& layer = model.layers[k];
        const LayerCache& c = caches[k];
        // For updated coordinates: out_j = (in_j - t_j) e^{-s_j}, plus the
        // direct +s_j/n log-det contribution to the NLL.
        for (std::size_t i = 0; i < n; ++i) {
            const double* sr = c.sraw.row(i);
            const double* outr = c.out.row(i);
            const double* gr = g.row(i);
            double* gsr = gs.row(i);
            double* gtr = gt.row(i);
            for (std::size_t j = 0; j < d; ++j) {
                if (frozen(layer, j)) {
                    gsr[j] = 0.0;
                    gtr[j] = 0.0;
                    continue;
                }
                const double s = kScaleClamp * sr[j];
                const double ds = -gr[j] * outr[j] + 1.0 / double(n);
                gsr[j] = kScaleClamp * ds;  // wrt the net's tanh output
                gtr[j] = -gr[j] * std::exp(-s);
            }
        }
        MlpGrads sg = make_grads(layer.scale_net);
        MlpGrads tg = make_grads(layer.shift_net);
        sg.zero();
        tg.zero();
        const Matrix gm_s = mlp_backward(layer.scale_net, c.scale_cache, gs, &sg);
        const Matrix gm_t = mlp_backward(layer.shift_net, c.shift_cache, gt, &tg);
        scale_flat[k].resize(layer.scale_net.param_count());
        shift_flat[k].resize(layer.shift_net.param_count());
        write_flat_grads(sg, scale_flat[k]);
        write_flat_grads(tg, shift_flat[k]);

        // Next gradient (wrt the layer's data-side input): frozen coordinates
        // pass through and also feed the nets; updated ones only rescale.
        Matrix gnext(n, d);
        for (std::size_t i = 0; i < n; ++i) {
            const double* sr = c.sraw.row(i);
            const double* gr = g.row(i);
            const double* gms = gm_s.row(i);
            const double* gmt = gm_t.row(i);
            double* nr = gnext.row(i);
            for (std::size_t j = 0; j < d; ++j) {
                if (frozen(layer, j))
                    nr[j] = gr[j] + gms[j] + gmt[j];
                else
                    nr[j] = gr[j] * std::exp(-kScaleClamp * sr[j]);
            }
        }
        g = std::move(gnext);
    }

    off = 0;
    for (std::size_t k = 0; k < L; ++k) {
        std::copy(scale_flat[k].begin(), scale_flat[k].end(), flat_grads.begin() + off);
        off += scale_flat[k].size();
        std::copy(shift_flat[k].begin(), shift_flat[k].end(), flat_grads.begin() + off);
        off += shift_flat[k].size();
    }
    return nll;
}

// --- training --------------------------------------------------------------------

FlowTrainResult train_flow(const SampleBatch& dataset, double sigma_T,
                           const FlowTrainConfig& cfg, FlowTrainMode mode, Rng& rng) {
    const Matrix& clean = dataset.points;
    if (clean.rows == 0) throw std::invalid_argument("train_flow: empty dataset");
    if (!(sigma_T > 0.0)) throw std::invalid_argument("train_flow: sigma_T must be > 0");
    if (cfg.epochs == 0) throw std::invalid_argument("train_flow: zero epochs");
    const std::size_t n = clean.rows, d = clean.cols;
    const std::size_t batch = std::min(cfg.batch, n);
    if (batch == 0) throw std::invalid_argument("train_flow: zero batch");

    FlowTrainResult res;
    res.model = make_flow(d, cfg.layers, cfg.width, cfg.depth, cfg.training_factor, rng);
    res.model.sigma_T = sigma_T;

    const std::size_t np = flow_param_count(res.model);
    std::vector<double> theta(np), grads(np);
    flow_write_params(res.model, theta);
    AdamConfig acfg;
    acfg.lr = cfg.lr;
    Adam opt(np, acfg);

    Matrix noised(n, d);
    auto renoise = [&] {
        for (std::size_t i = 0; i < clean.size(); ++i)
            noised.data[i] = clean.data[i] + sigma_T * rng.normal();
    };
    renoise();  // fixed mode keeps this single draw

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    const std::size_t steps_per_epoch = std::max<std::size_t>(1, n / batch);
    Matrix xb(batch, d);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (mode == FlowTrainMode::dynamical && epoch > 0) renoise();
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
        std::vector<double> epoch_nll;
        for (std::size_t step = 0; step < steps_per_epoch; ++step) {
            for (std::size_t b = 0; b < batch; ++b) {
                const double* src = noised.row(order[(step * batch + b) % n]);
                std::copy(src, src + d, xb.row(b));
            }
            const double nll = flow_nll_and_grads(res.model, xb, grads);
            opt.step(theta, grads);
            flow_read_params(res.model, theta);
            res.iteration_nll.push_back(nll);
            epoch_nll.push_back(nll);
        }
        std::sort(epoch_nll.begin(), epoch_nll.end());
        const std::size_t m = epoch_nll.size();
        res.epoch_median.push_back(m % 2 ? epoch_nll[m / 2]
                                         : 0.5 * (epoch_nll[m / 2 - 1] + epoch_nll[m / 2]));
    }
    res.model.validate();
    return res;
}

// --- checkpoints ----------------------------------------------------------------

void save_flow(const std::string& path, const FlowModel& model) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    char buf[40];
    f << "shdiff-flow 1\n";
    f << "dim " << model.dim << "\n";
    f << "layers " << model.layers.size() << "\n";
    std::snprintf(buf, sizeof buf, "%.17g", model.training_factor);
    f << "training_factor " << buf << "\n";
    std::snprintf(buf, sizeof buf, "%.17g", model.sigma_T);
    f << "sigma_T " << buf << "\n";
    for (const auto& layer : model.layers) {
        f << "coupling " << (layer.even_frozen ? "even" : "odd") << "\n";
        write_mlp(f, layer.scale_net);
        write_mlp(f, layer.shift_net);
    }
    if (!f) throw std::runtime_error("write failed: " + path);
}

FlowModel load_flow(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::string magic, kw, parity;
    int version = 0;
    f >> magic >> version;
    if (magic != "shdiff-flow" || version != 1)
        throw std::runtime_error("flow load: bad header");
    FlowModel model;
    std::size_t layer_count = 0;
    f >> kw >> model.dim;
    if (kw != "dim") throw std::runtime_error("flow load: missing dim");
    f >> kw >> layer_count;
    if (kw != "layers") throw std::runtime_error("flow load: missing layers");
    f >> kw >> model.training_factor;
    if (kw != "training_factor") throw std::runtime_error("flow load: missing training_factor");
    f >> kw >> model.sigma_T;
    if (kw != "sigma_T") throw std::runtime_error("flow load: missing sigma_T");
    for (std::size_t l = 0; l < layer_count; ++l) {
        f >> kw >> parity;
        if (kw != "coupling" || (parity != "even" && parity != "odd"))
            throw std::runtime_error("flow load: bad coupling header");
        CouplingLayer layer;
        layer.even_frozen = (parity == "even");
        layer.scale_net = read_mlp(f);
        layer.shift_net = read_mlp(f);
        model.layers.push_back(std::move(layer));
    }
    model.validate();
    return model;
}

}  // namespace shdiff
