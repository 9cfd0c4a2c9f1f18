#include "shdiff/targets.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "shdiff/kernels.hpp"

namespace shdiff {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)

void write_double(std::ostream& os, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
}

}  // namespace

Matrix orthogonal_from_gaussian(std::size_t d, Rng& rng) {
    // Householder QR of a Gaussian matrix; reflectors accumulate into Q.
    Matrix a(d, d);
    for (auto& v : a.data) v = rng.normal();

    Matrix q(d, d);
    for (std::size_t i = 0; i < d; ++i) q(i, i) = 1.0;

    std::vector<double> v(d);
    for (std::size_t j = 0; j < d; ++j) {
        double norm = 0.0;
        for (std::size_t i = j; i < d; ++i) norm += a(i, j) * a(i, j);
        norm = std::sqrt(norm);
        if (norm == 0.0) continue;
        const double alpha = a(j, j) >= 0.0 ? -norm : norm;
        double vnorm2 = 0.0;
        for (std::size_t i = j; i < d; ++i) {
            v[i] = a(i, j) - (i == j ? alpha : 0.0);
            vnorm2 += v[i] * v[i];
        }
        if (vnorm2 == 0.0) continue;
        const double beta = 2.0 / vnorm2;
        // A <- (I - beta v v^T) A on the trailing block.
        for (std::size_t c = j; c < d; ++c) {
            double s = 0.0;
            for (std::size_t i = j; i < d; ++i) s += v[i] * a(i, c);
            s *= beta;
            for (std::size_t i = j; i < d; ++i) a(i, c) -= s * v[i];
        }
        // Q <- Q (I - beta v v^T); Q rows are full length.
        for (std::size_t r = 0; r < d; ++r) {
            double s = 0.0;
            for (std::size_t i = j; i < d; ++i) s += q(r, i) * v[i];
            s *= beta;
            for (std::size_t i = j; i < d; ++i) q(r, i) -= s * v[i];
        }
    }
    // Fix signs so the triangular factor has a positive diagonal; this makes
    // Q the unique Haar draw for the given Gaussian sample.
    for (std::size_t j = 0; j < d; ++j) {
        if (a(j, j) < 0.0)
            for (std::size_t i = 0; i < d; ++i) q(i, j) = -q(i, j);
    }
    return q;
}

void GmmSpec::validate() const {
    if (dim == 0) throw std::runtime_error("gmm: zero dimension");
    if (weights.empty() || weights.size() != comps.size())
        throw std::runtime_error("gmm: weight/component count mismatch");
    double wsum = 0.0;
    for (double w : weights) {
        if (!(w > 0.0)) throw std::runtime_error("gmm: non-positive weight");
        wsum += w;
    }
    if (std::fabs(wsum - 1.0) > 1e-9) throw std::runtime_error("gmm: weights do not sum to 1");
    for (const auto& c : comps) {
        if (c.mean.size() != dim || c.eigenvalues.size() != dim ||
            c.rotation.rows != dim || c.rotation.cols != dim)
            throw std::runtime_error("gmm: component shape mismatch");
        for (double l : c.eigenvalues)
            if (!(l > 0.0) || !std::isfinite(l))
                throw std::runtime_error("gmm: non-positive eigenvalue");
        for (double m : c.mean)
            if (!std::isfinite(m)) throw std::runtime_error("gmm: non-finite mean");
        if (!c.rotation.all_finite()) throw std::runtime_error("gmm: non-finite rotation");
    }
}

GmmSpec make_grid_gmm(std::size_t dim, std::uint64_t seed) {
    if (dim < 2) throw std::invalid_argument("make_grid_gmm: dim must be >= 2");
    GmmSpec g;
    g.dim = dim;
    Rng rng(derive_seed(seed, "gmm-structure"));

    std::vector<double> lambda(dim);
    for (std::size_t k = 0; k < dim; ++k) lambda[k] = std::pow(double(k + 1), -0.75);

    double wsum = 0.0;
    for (int i = -2; i <= 2; ++i) {
        for (int j = -2; j <= 2; ++j) {
            GmmComponent c;
            c.mean.assign(dim, 0.0);
            c.mean[0] = 5.0 * i;
            c.mean[1] = 5.0 * j;
            c.eigenvalues = lambda;
            c.rotation = orthogonal_from_gaussian(dim, rng);
            g.comps.push_back(std::move(c));
            const double w = rng.chi_squared(3.0);
            g.weights.push_back(w);
            wsum += w;
        }
    }
    for (double& w : g.weights) w /= wsum;
    g.validate();
    return g;
}

namespace {

// Per-component log N(x; mu, R diag(lambda + sigma^2) R^T) and, optionally,
// the gradient contribution -R ((R^T (x - mu)) / (lambda + sigma^2)).
double component_log_gauss(const GmmComponent& c, double sig2, const double* x,
                           std::vector<double>& y, std::vector<double>& scratch) {
    const std::size_t d = c.mean.size();
    for (std::size_t i = 0; i < d; ++i) scratch[i] = x[i] - c.mean[i];
    // y = R^T (x - mu)
    for (std::size_t k = 0; k < d; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) s += c.rotation(i, k) * scratch[i];
        y[k] = s;
    }
    double logdet = 0.0, quad = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
        const double ev = c.eigenvalues[k] + sig2;
        logdet += std::log(ev);
        quad += y[k] * y[k] / ev;
    }
    return -0.5 * (double(d) * kLog2Pi + logdet + quad);
}

}  // namespace

double gmm_log_density(const GmmSpec& g, double sigma, const double* x) {
    const double sig2 = sigma * sigma;
    const std::size_t d = g.dim;
    std::vector<double> y(d), scratch(d);
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> terms(g.comps.size());
    for (std::size_t i = 0; i < g.comps.size(); ++i) {
        terms[i] = std::log(g.weights[i]) +
                   component_log_gauss(g.comps[i], sig2, x, y, scratch);
        best = std::max(best, terms[i]);
    }
    if (!std::isfinite(best)) return best;
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - best);
    return best + std::log(acc);
}

void gmm_score(const GmmSpec& g, double sigma, const double* x, double* out) {
    const double sig2 = sigma * sigma;
    const std::size_t d = g.dim;
    std::vector<double> y(d), scratch(d);
    std::vector<double> terms(g.comps.size());
    // Gradient of each component log-density, pre-multiplied back by R.
    Matrix grads(g.comps.size(), d);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g.comps.size(); ++i) {
        const auto& c = g.comps[i];
        terms[i] = std::log(g.weights[i]) + component_log_gauss(c, sig2, x, y, scratch);
        best = std::max(best, terms[i]);
        for (std::size_t k = 0; k < d; ++k) y[k] /= (c.eigenvalues[k] + sig2);
        double* grow = grads.row(i);
        for (std::size_t r = 0; r < d; ++r) {
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) s += c.rotation(r, k) * y[k];
            grow[r] = -s;
        }
    }
    double denom = 0.0;
    for (double& t : terms) {
        t = std::exp(t - best);  // responsibilities up to normalization
        denom += t;
    }
    for (std::size_t r = 0; r < d; ++r) out[r] = 0.0;
    for (std::size_t i = 0; i < g.comps.size(); ++i)
        kernels::axpy(d, terms[i] / denom, grads.row(i), out);
}

Matrix gmm_sample(const GmmSpec& g, std::size_t n, Rng& rng) {
    const std::size_t d = g.dim;
    // Cumulative weights for categorical inversion.
    std::vector<double> cdf(g.weights.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < g.weights.size(); ++i) {
        acc += g.weights[i];
        cdf[i] = acc;
    }
    cdf.back() = 1.0;

    Matrix out(n, d);
    std::vector<double> z(d);
    for (std::size_t s = 0; s < n; ++s) {
        const double u = rng.uniform();
        std::size_t i = 0;
        while (i + 1 < cdf.size() && u >= cdf[i]) ++i;
        const auto& c = g.comps[i];
        for (std::size_t k = 0; k < d; ++k)
            z[k] = std::sqrt(c.eigenvalues[k]) * rng.normal();
        double* row = out.row(s);
        for (std::size_t r = 0; r < d; ++r) {
            double v = c.mean[r];
            for (std::size_t k = 0; k < d; ++k) v += c.rotation(r, k) * z[k];
            row[r] = v;
        }
    }
    return out;
}

std::vector<double> gmm_mean(const GmmSpec& g) {
    std::vector<double> m(g.dim, 0.0);
    for (std::size_t i = 0; i < g.comps.size(); ++i)
        kernels::axpy(g.dim, g.weights[i], g.comps[i].mean.data(), m.data());
    return m;
}

Matrix gmm_covariance(const GmmSpec& g) {
    const std::size_t d = g.dim;
    const auto m = gmm_mean(g);
    Matrix cov(d, d);
    for (std::size_t i = 0; i < g.comps.size(); ++i) {
        const auto& c = g.comps[i];
        const double w = g.weights[i];
        // w * (R diag(lambda) R^T + (mu - m)(mu - m)^T)
        for (std::size_t r = 0; r < d; ++r) {
            for (std::size_t s = 0; s < d; ++s) {
                double v = 0.0;
                for (std::size_t k = 0; k < d; ++k)
                    v += c.rotation(r, k) * c.eigenvalues[k] * c.rotation(s, k);
                v += (c.mean[r] - m[r]) * (c.mean[s] - m[s]);
                cov(r, s) += w * v;
            }
        }
    }
    return cov;
}

void write_gmm(std::ostream& os, const GmmSpec& g) {
    os << "shdiff-gmm 1\n";
    os << "dim " << g.dim << " components " << g.comps.size() << "\n";
    for (std::size_t i = 0; i < g.comps.size(); ++i) {
        os << "weight ";
        write_double(os, g.weights[i]);
        os << "\n";
        const auto& c = g.comps[i];
        for (std::size_t r = 0; r < g.dim; ++r) {
            if (r) os << ' ';
            write_double(os, c.mean[r]);
        }
        os << "\n";
        for (std::size_t r = 0; r < g.dim; ++r) {
            if (r) os << ' ';
            write_double(os, c.eigenvalues[r]);
        }
        os << "\n";
        for (std::size_t r = 0; r < g.dim; ++r) {
            for (std::size_t s = 0; s < g.dim; ++s) {
                if (s) os << ' ';
                write_double(os, c.rotation(r, s));
            }
            os << "\n";
        }
    }
}

GmmSpec read_gmm(std::istream& is) {
    std::string magic, kw1, kw2;
    int version = 0;
    std::size_t dim = 0, ncomp = 0;
    is >> magic >> version >> kw1 >> dim >> kw2 >> ncomp;
    if (magic != "shdiff-gmm" || version != 1 || kw1 != "dim" || kw2 != "components")
        throw std::runtime_error("gmm load: bad header");
    GmmSpec g;
    g.dim = dim;
    for (std::size_t i = 0; i < ncomp; ++i) {
        std::string kw;
        double w = 0.0;
        is >> kw >> w;
        if (kw != "weight") throw std::runtime_error("gmm load: bad component record");
        g.weights.push_back(w);
        GmmComponent c;
        c.mean.resize(dim);
        c.eigenvalues.resize(dim);
        c.rotation = Matrix(dim, dim);
        for (auto& v : c.mean) is >> v;
        for (auto& v : c.eigenvalues) is >> v;
        for (auto& v : c.rotation.data) is >> v;
        g.comps.push_back(std::move(c));
    }
    if (!is) throw std::runtime_error("gmm load: truncated record");
    g.validate();
    return g;
}

void save_gmm(const std::string& path, const GmmSpec& g) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    write_gmm(f, g);
    if (!f) throw std::runtime_error("write failed: " + path);
}

GmmSpec load_gmm(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open: " + path);
    return read_gmm(f);
}

std::vector<double> StudentMixtureSpec::location() const {
    return std::vector<double>(dim, 1.0 / std::sqrt(double(dim)));
}

Matrix student_mixture_sample(const StudentMixtureSpec& s, std::size_t n, Rng& rng) {
    const std::size_t d = s.dim;
    const auto mu = s.location();
    Matrix out(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        const double sign = rng.uniform() < 0.5 ? 1.0 : -1.0;
        // Scale mixture representation: x = mu + z * sqrt(nu / chi2_nu).
        double t = 1.0;
        if (std::isfinite(s.nu)) t = std::sqrt(s.nu / rng.chi_squared(s.nu));
        double* row = out.row(i);
        for (std::size_t k = 0; k < d; ++k) row[k] = sign * mu[k] + t * rng.normal();
    }
    return out;
}

double student_mixture_log_density(const StudentMixtureSpec& s, const double* x) {
    const std::size_t d = s.dim;
    const auto mu = s.location();
    auto log_t = [&](double sign) {
        double q = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const double dx = x[k] - sign * mu[k];
            q += dx * dx;
        }
        if (!std::isfinite(s.nu))  // Gaussian limit
            return -0.5 * (double(d) * kLog2Pi + q);
        const double nu = s.nu;
        return std::lgamma(0.5 * (nu + double(d))) - std::lgamma(0.5 * nu) -
               0.5 * double(d) * std::log(nu * std::numbers::pi) -
               0.5 * (nu + double(d)) * std::log1p(q / nu);
    };
    const double a = log_t(1.0), b = log_t(-1.0);
    const double m = std::max(a, b);
    return m + std::log(0.5 * (std::exp(a - m) + std::exp(b - m)));
}

Matrix forward_noise(const Matrix& x, double sigma, Rng& rng) {
    Matrix out = x;
    if (sigma != 0.0)
        for (auto& v : out.data) v += sigma * rng.normal();
    return out;
}

SampleBatch forward_noise(const SampleBatch& b, double sigma, Rng& rng) {
    SampleBatch out;
    out.points = forward_noise(b.points, sigma, rng);
    out.tag = SampleTag::noised;
    out.sigma = sigma;
    return out;
}

double iso_gaussian_log_density(const double* x, std::size_t d, double variance) {
    const double q = kernels::sumsq(x, d);
    return -0.5 * (double(d) * (kLog2Pi + std::log(variance)) + q / variance);
}

Matrix iso_gaussian_sample(std::size_t n, std::size_t d, double variance, Rng& rng) {
    Matrix out(n, d);
    const double sd = std::sqrt(variance);
    for (auto& v : out.data) v = sd * rng.normal();
    return out;
}

}  // namespace shdiff
