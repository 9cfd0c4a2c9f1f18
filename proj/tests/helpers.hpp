#pragma once

// Shared oracles for the test suites: finite-difference gradient checks and
// small statistics utilities. Everything here is intentionally naive — these
// are the references the fast paths are judged against.

#include <cmath>
#include <functional>
#include <vector>

#include "shdiff/nn.hpp"
#include "shdiff/rng.hpp"
#include "shdiff/tensor.hpp"

namespace shdiff::testing {

/// L(theta) = sum_ij U_ij * forward(X)_ij for a fixed random functional U.
inline double functional_loss(const Mlp& mlp, const Matrix& x, const Matrix& u) {
    Matrix y = mlp_forward(mlp, x);
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += u.data[i] * y.data[i];
    return acc;
}

struct FdCheckResult {
    double max_param_rel_err = 0.0;
    double max_input_rel_err = 0.0;
};

/// Compare backprop gradients of functional_loss against central finite
/// differences, over every parameter and every input entry.
inline FdCheckResult fd_gradient_check(Mlp mlp, Matrix x, const Matrix& u,
                                       double h = 1e-5) {
    ForwardCache cache;
    Matrix y = mlp_forward(mlp, x, &cache);
    MlpGrads grads = make_grads(mlp);
    grads.zero();
    Matrix gin = mlp_backward(mlp, cache, u, &grads);

    const std::size_t np = mlp.param_count();
    std::vector<double> theta(np), bp(np);
    write_flat_params(mlp, theta);
    write_flat_grads(grads, bp);

    auto rel = [](double a, double b) {
        return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-6});
    };

    FdCheckResult res;
    std::vector<double> probe = theta;
    for (std::size_t i = 0; i < np; ++i) {
        const double step = h * std::max(1.0, std::fabs(theta[i]));
        probe[i] = theta[i] + step;
        read_flat_params(mlp, probe);
        const double lp = functional_loss(mlp, x, u);
        probe[i] = theta[i] - step;
        read_flat_params(mlp, probe);
        const double lm = functional_loss(mlp, x, u);
        probe[i] = theta[i];
        const double fd = (lp - lm) / (2.0 * step);
        res.max_param_rel_err = std::max(res.max_param_rel_err, rel(fd, bp[i]));
    }
    read_flat_params(mlp, theta);

    for (std::size_t i = 0; i < x.size(); ++i) {
        const double x0 = x.data[i];
        const double step = h * std::max(1.0, std::fabs(x0));
        x.data[i] = x0 + step;
        const double lp = functional_loss(mlp, x, u);
        x.data[i] = x0 - step;
        const double lm = functional_loss(mlp, x, u);
        x.data[i] = x0;
        const double fd = (lp - lm) / (2.0 * step);
        res.max_input_rel_err = std::max(res.max_input_rel_err, rel(fd, gin.data[i]));
    }
    return res;
}

/// Draw a random small MLP plus input/functional matrices for gradient checks.
struct FdProblem {
    Mlp mlp;
    Matrix x;
    Matrix u;
};

inline FdProblem random_fd_problem(Rng& rng) {
    const std::size_t depth = 1 + rng.below(3);
    std::vector<std::size_t> widths;
    widths.push_back(1 + rng.below(6));
    for (std::size_t i = 0; i < depth; ++i) widths.push_back(2 + rng.below(7));
    const Activation hiddens[] = {Activation::silu, Activation::tanh_act,
                                  Activation::identity};
    const Activation hidden = hiddens[rng.below(3)];
    const Activation out = hiddens[rng.below(3)];
    FdProblem p{make_mlp(widths, hidden, out, rng), Matrix(), Matrix()};
    const std::size_t batch = 1 + rng.below(5);
    p.x = Matrix(batch, widths.front());
    for (auto& v : p.x.data) v = rng.normal();
    p.u = Matrix(batch, widths.back());
    for (auto& v : p.u.data) v = rng.normal();
    return p;
}

/// Midpoint-rule integral of f over [-L, L].
inline double quad1d(const std::function<double(double)>& f, double L, int m) {
    const double h = 2.0 * L / m;
    double acc = 0.0;
    for (int i = 0; i < m; ++i) acc += f(-L + (i + 0.5) * h);
    return acc * h;
}

/// Midpoint-rule integral of f over [-L, L]^2.
inline double quad2d(const std::function<double(double, double)>& f, double L, int m) {
    const double h = 2.0 * L / m;
    double acc = 0.0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) acc += f(-L + (i + 0.5) * h, -L + (j + 0.5) * h);
    return acc * h * h;
}

inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / double(v.size());
}

inline double sample_std(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / double(v.size() - 1));
}

}  // namespace shdiff::testing
