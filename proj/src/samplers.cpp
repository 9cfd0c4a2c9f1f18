#include "shdiff/samplers.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "shdiff/kernels.hpp"
#include "shdiff/schedule.hpp"

namespace shdiff {

void GmmScore::score(const Matrix& x, double sigma, Matrix& out) const {
    out.require_shape(x.rows, x.cols, "GmmScore");
    for (std::size_t i = 0; i < x.rows; ++i)
        gmm_score(*g_, sigma, x.row(i), out.row(i));
}

void IsoGaussianScore::score(const Matrix& x, double sigma, Matrix& out) const {
    out.require_shape(x.rows, x.cols, "IsoGaussianScore");
    const double f = -1.0 / (s2_ + sigma * sigma);
    for (std::size_t i = 0; i < x.size(); ++i) out.data[i] = f * x.data[i];
}

void PointMassScore::score(const Matrix& x, double sigma, Matrix& out) const {
    out.require_shape(x.rows, x.cols, "PointMassScore");
    const double f = -1.0 / (sigma * sigma);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const double* xr = x.row(i);
        double* orow = out.row(i);
        for (std::size_t j = 0; j < x.cols; ++j) orow[j] = f * (xr[j] - c_[j]);
    }
}

void TrajectorySink::header() const {
    if (os) *os << "step,sigma,coord,mean,std\n";
}

void TrajectorySink::record(std::size_t step, double sigma, const Matrix& x) const {
    if (!os) return;
    for (std::size_t j = 0; j < x.cols; ++j) {
        double m = 0.0, m2 = 0.0;
        for (std::size_t i = 0; i < x.rows; ++i) {
            const double v = x(i, j);
            m += v;
            m2 += v * v;
        }
        m /= double(x.rows);
        const double var = std::max(0.0, m2 / double(x.rows) - m * m);
        *os << step << ',' << sigma << ',' << j << ',' << m << ',' << std::sqrt(var)
            << '\n';
    }
}

Matrix em_sample(const ScoreModel& model, const Matrix& init,
                 const std::vector<double>& sigmas, Rng& rng, TrajectorySink* sink) {
    if (sigmas.size() < 2)
        throw std::invalid_argument("em_sample: need at least two levels");
    for (double s : sigmas)
        if (!(s > 0.0)) throw std::invalid_argument("em_sample: levels must be positive");
    const auto gammas = gamma_weights(sigmas);  // also enforces monotonicity

    Matrix x = init;
    Matrix sc(x.rows, x.cols);
    if (sink) {
        sink->header();
        sink->record(0, sigmas[0], x);
    }
    for (std::size_t k = 0; k + 1 < sigmas.size(); ++k) {
        const double g = gammas[k];
        const double sg = std::sqrt(g);
        model.score(x, sigmas[k], sc);
        kernels::axpy(x.size(), g, sc.data.data(), x.data.data());
        for (auto& v : x.data) v += sg * rng.normal();
        if (sink) sink->record(k + 1, sigmas[k + 1], x);
    }
    return x;
}

Matrix heun_sample(const ScoreModel& model, const Matrix& init,
                   const std::vector<double>& sigmas, TrajectorySink* sink) {
    if (sigmas.size() < 2)
        throw std::invalid_argument("heun_sample: need at least two levels");
    for (std::size_t k = 0; k + 1 < sigmas.size(); ++k)
        if (!(sigmas[k] > sigmas[k + 1]) || sigmas[k + 1] < 0.0)
            throw std::invalid_argument("heun_sample: grid must decrease to >= 0");
    if (!(sigmas[0] > 0.0)) throw std::invalid_argument("heun_sample: empty grid");

    Matrix x = init;
    Matrix d(x.rows, x.cols), xe(x.rows, x.cols), d2(x.rows, x.cols);
    if (sink) {
        sink->header();
        sink->record(0, sigmas[0], x);
    }
    for (std::size_t k = 0; k + 1 < sigmas.size(); ++k) {
        const double s0 = sigmas[k], s1 = sigmas[k + 1];
        const double h = s1 - s0;  // negative
        model.score(x, s0, d);
        kernels::scale(d.size(), -s0, d.data.data());  // d = dx/dsigma at (x, s0)
        if (s1 == 0.0) {
            // Plain Euler onto the data manifold; no score at sigma = 0.
            kernels::axpy(x.size(), h, d.data.data(), x.data.data());
        } else {
            xe = x;
            kernels::axpy(xe.size(), h, d.data.data(), xe.data.data());
            model.score(xe, s1, d2);
            kernels::scale(d2.size(), -s1, d2.data.data());
            kernels::axpy(x.size(), 0.5 * h, d.data.data(), x.data.data());
            kernels::axpy(x.size(), 0.5 * h, d2.data.data(), x.data.data());
        }
        if (sink) sink->record(k + 1, s1, x);
    }
    return x;
}

}  // namespace shdiff
