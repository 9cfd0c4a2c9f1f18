#include "shdiff/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "shdiff/kernels.hpp"
#include "shdiff/nn.hpp"

namespace shdiff {

namespace {

void check_order(int order) {
    if (order != 1 && order != 2)
        throw std::invalid_argument("wasserstein: order must be 1 or 2");
}

/// Uniform subsample (without replacement) of `n` rows.
Matrix subsample_rows(const Matrix& x, std::size_t n, Rng& rng) {
    std::vector<std::size_t> idx(x.rows);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = i + rng.below(x.rows - i);
        std::swap(idx[i], idx[j]);
    }
    Matrix out(n, x.cols);
    for (std::size_t i = 0; i < n; ++i)
        std::copy(x.row(idx[i]), x.row(idx[i]) + x.cols, out.row(i));
    return out;
}

void project(const Matrix& x, const std::vector<double>& dir, std::vector<double>& out) {
    out.resize(x.rows);
    kernels::matmul_nt(x.rows, 1, x.cols, x.data.data(), dir.data(), out.data());
}

std::vector<double> unit_gaussian_direction(std::size_t d, Rng& rng) {
    std::vector<double> u(d);
    double norm = 0.0;
    do {
        for (auto& v : u) v = rng.normal();
        norm = std::sqrt(kernels::sumsq(u.data(), d));
    } while (!(norm > 1e-12));
    kernels::scale(d, 1.0 / norm, u.data());
    return u;
}

}  // namespace

double wasserstein1d(std::vector<double> a, std::vector<double> b, int order) {
    check_order(order);
    if (a.size() != b.size()) throw std::invalid_argument("wasserstein1d: size mismatch");
    if (a.empty()) throw std::invalid_argument("wasserstein1d: empty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const std::size_t n = a.size();
    if (order == 1) return kernels::abs_gap(a.data(), b.data(), n) / double(n);
    return std::sqrt(kernels::sq_gap(a.data(), b.data(), n) / double(n));
}

double sliced_wasserstein(const Matrix& x, const Matrix& y, std::size_t n_slices,
                          int order, Rng& rng) {
    check_order(order);
    if (n_slices < 1) throw std::invalid_argument("sliced_wasserstein: need n_slices >= 1");
    if (x.cols != y.cols) throw std::invalid_argument("sliced_wasserstein: dim mismatch");
    if (x.rows == 0 || y.rows == 0)
        throw std::invalid_argument("sliced_wasserstein: empty cloud");

    const std::size_t n = std::min(x.rows, y.rows);
    const Matrix xs = x.rows == n ? x : subsample_rows(x, n, rng);
    const Matrix ys = y.rows == n ? y : subsample_rows(y, n, rng);

    std::vector<double> px, py;
    double acc = 0.0;
    for (std::size_t s = 0; s < n_slices; ++s) {
        const std::vector<double> u = unit_gaussian_direction(x.cols, rng);
        project(xs, u, px);
        project(ys, u, py);
        acc += wasserstein1d(px, py, order);
    }
    return acc / double(n_slices);
}

double sliced_wasserstein(const SampleBatch& x, const SampleBatch& y,
                          std::size_t n_slices, int order, Rng& rng) {
    return sliced_wasserstein(x.points, y.points, n_slices, order, rng);
}

std::vector<double> sphere_param(const std::vector<double>& e) {
    const std::size_t d = e.size() + 1;
    const double s2 = kernels::sumsq(e.data(), e.size());
    if (!std::isfinite(s2)) throw std::invalid_argument("sphere_param: non-finite input");
    std::vector<double> theta(d);
    const double denom = s2 + 1.0;
    theta[0] = (s2 - 1.0) / denom;
    for (std::size_t i = 1; i < d; ++i) theta[i] = 2.0 * e[i - 1] / denom;
    return theta;
}

namespace {

/// Objective and gradient (wrt E) of wasserstein1d of the projections onto
/// theta(E), with the sort permutations frozen for the step.
double maxsw_objective(const Matrix& x, const Matrix& y, const std::vector<double>& e,
                       int order, std::vector<double>* grad_e,
                       std::vector<double>* theta_out) {
    const std::size_t n = x.rows, d = x.cols;
    const std::vector<double> theta = sphere_param(e);
    if (theta_out) *theta_out = theta;

    std::vector<double> px, py;
    project(x, theta, px);
    project(y, theta, py);

    std::vector<std::size_t> ix(n), iy(n);
    std::iota(ix.begin(), ix.end(), 0);
    std::iota(iy.begin(), iy.end(), 0);
    std::stable_sort(ix.begin(), ix.end(),
                     [&](std::size_t a, std::size_t b) { return px[a] < px[b]; });
    std::stable_sort(iy.begin(), iy.end(),
                     [&](std::size_t a, std::size_t b) { return py[a] < py[b]; });

    double value = 0.0;
    std::vector<double> gtheta(d, 0.0);
    if (order == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            const double gap = px[ix[i]] - py[iy[i]];
            value += std::fabs(gap);
            if (grad_e) {
                const double sgn = gap > 0.0 ? 1.0 : (gap < 0.0 ? -1.0 : 0.0);
                kernels::axpy(d, sgn / double(n), x.row(ix[i]), gtheta.data());
                kernels::axpy(d, -sgn / double(n), y.row(iy[i]), gtheta.data());
            }
        }
        value /= double(n);
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const double gap = px[ix[i]] - py[iy[i]];
            value += gap * gap;
        }
        value = std::sqrt(value / double(n));
        if (grad_e && value > 0.0) {
            for (std::size_t i = 0; i < n; ++i) {
                const double gap = px[ix[i]] - py[iy[i]];
                const double w = gap / (double(n) * value);
                kernels::axpy(d, w, x.row(ix[i]), gtheta.data());
                kernels::axpy(d, -w, y.row(iy[i]), gtheta.data());
            }
        }
    }
    if (!std::isfinite(value))
        throw std::runtime_error("max_sliced_wasserstein: non-finite objective");
    if (!grad_e) return value;

    // Chain through theta(E): dtheta0/dEj = 4 Ej / (S^2+1)^2,
    // dthetai/dEj = 2 delta_ij/(S^2+1) - 4 E_{i-1} Ej/(S^2+1)^2.
    const double s2 = kernels::sumsq(e.data(), e.size());
    const double denom = s2 + 1.0, denom2 = denom * denom;
    grad_e->assign(d - 1, 0.0);
    double dot_tail = 0.0;  // sum_i>=1 gtheta_i * E_{i-1}
    for (std::size_t i = 1; i < d; ++i) dot_tail += gtheta[i] * e[i - 1];
    for (std::size_t j = 0; j + 1 < d; ++j) {
        (*grad_e)[j] = gtheta[0] * 4.0 * e[j] / denom2 +
                       gtheta[j + 1] * 2.0 / denom - 4.0 * e[j] * dot_tail / denom2;
    }
    return value;
}

}  // namespace

MaxSwResult max_sliced_wasserstein(const Matrix& x, const Matrix& y,
                                   const MaxSwConfig& cfg, int order) {
    check_order(order);
    if (x.cols != y.cols)
        throw std::invalid_argument("max_sliced_wasserstein: dim mismatch");
    if (x.rows == 0 || y.rows == 0)
        throw std::invalid_argument("max_sliced_wasserstein: empty cloud");
    if (x.cols < 2)
        throw std::invalid_argument("max_sliced_wasserstein: need dim >= 2");
    if (!(cfg.tol > 0.0) || cfg.max_iters < 1 || cfg.restarts < 1)
        throw std::invalid_argument("max_sliced_wasserstein: bad config");

    Rng sub_rng(derive_seed(cfg.seed, "maxsw-subsample"));
    const std::size_t n = std::min(x.rows, y.rows);
    const Matrix xs = x.rows == n ? x : subsample_rows(x, n, sub_rng);
    const Matrix ys = y.rows == n ? y : subsample_rows(y, n, sub_rng);

    MaxSwResult best;
    best.value = -1.0;
    const std::size_t de = x.cols - 1;
    std::vector<double> grad(de);

    for (std::size_t r = 0; r < cfg.restarts; ++r) {
        Rng rng(derive_seed(cfg.seed, "maxsw-restart", r));
        std::vector<double> e(de);
        for (auto& v : e) v = rng.normal();

        AdamConfig acfg;
        acfg.lr = cfg.lr;
        Adam opt(de, acfg);
        std::vector<double> theta;
        double prev = maxsw_objective(xs, ys, e, order, &grad, &theta);
        if (prev > best.value) {
            best.value = prev;
            best.theta = theta;
        }
        for (std::size_t it = 0; it < cfg.max_iters; ++it) {
            // Ascent: feed the negated gradient to the (minimizing) optimizer.
            for (auto& g : grad) g = -g;
            opt.step(e, grad);
            const double value = maxsw_objective(xs, ys, e, order, &grad, &theta);
            ++best.iterations;
            if (value > best.value) {
                best.value = value;
                best.theta = theta;
            }
            if (std::fabs(value - prev) < cfg.tol) break;
            prev = value;
        }
    }
    return best;
}

MaxSwResult max_sliced_wasserstein(const SampleBatch& x, const SampleBatch& y,
                                   const MaxSwConfig& cfg, int order) {
    return max_sliced_wasserstein(x.points, y.points, cfg, order);
}

double empirical_quantile(std::vector<double> samples, double q) {
    if (!(q > 0.0) || !(q < 1.0))
        throw std::invalid_argument("empirical_quantile: q must be in (0,1)");
    if (samples.empty()) throw std::invalid_argument("empirical_quantile: empty sample");
    const std::size_t n = samples.size();
    std::size_t rank = std::size_t(std::ceil(q * double(n)));  // 1-based
    rank = std::min(std::max<std::size_t>(rank, 1), n);
    std::nth_element(samples.begin(), samples.begin() + (rank - 1), samples.end());
    return samples[rank - 1];
}

bool quantile_resolution_ok(std::size_t n, double q) {
    return double(n) * (1.0 - q) >= 1.0;
}

std::vector<QuantileRelError> quantile_rel_error(const Matrix& gen, const Matrix& ref,
                                                 const std::vector<double>& qs) {
    if (gen.cols != ref.cols)
        throw std::invalid_argument("quantile_rel_error: dim mismatch");
    if (gen.rows == 0 || ref.rows == 0)
        throw std::invalid_argument("quantile_rel_error: empty cloud");
    std::vector<QuantileRelError> out;
    std::vector<double> gcol(gen.rows), rcol(ref.rows), errs(gen.cols);
    for (double q : qs) {
        for (std::size_t j = 0; j < gen.cols; ++j) {
            for (std::size_t i = 0; i < gen.rows; ++i) gcol[i] = gen(i, j);
            for (std::size_t i = 0; i < ref.rows; ++i) rcol[i] = ref(i, j);
            const double xq = empirical_quantile(rcol, q);
            if (xq == 0.0)
                throw std::runtime_error("quantile_rel_error: reference quantile is zero");
            const double xhat = empirical_quantile(gcol, q);
            errs[j] = std::fabs(xq - xhat) / std::fabs(xq);
        }
        QuantileRelError r;
        r.q = q;
        double m = 0.0;
        for (double v : errs) m += v;
        m /= double(errs.size());
        double s2 = 0.0;
        for (double v : errs) s2 += (v - m) * (v - m);
        r.mean = m;
        r.stddev = errs.size() > 1 ? std::sqrt(s2 / double(errs.size() - 1)) : 0.0;
        out.push_back(r);
    }
    return out;
}

}  // namespace shdiff
