#include "shdiff/ht_prior.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace shdiff {

namespace {

double median_inplace(std::vector<double>& v) {
    const std::size_t n = v.size();
    std::nth_element(v.begin(), v.begin() + n / 2, v.end());
    double m = v[n / 2];
    if (n % 2 == 0) {
        std::nth_element(v.begin(), v.begin() + n / 2 - 1, v.begin() + n / 2);
        m = 0.5 * (m + v[n / 2 - 1]);
    }
    return m;
}

/// Hill estimate of one 1-D sample (consumed).
double hill_1d(std::vector<double> x, std::size_t k, bool center) {
    const std::size_t n = x.size();
    if (center) {
        std::vector<double> tmp = x;
        const double med = median_inplace(tmp);
        for (auto& v : x) v = std::fabs(v - med);
    } else {
        for (auto& v : x) v = std::fabs(v);
    }
    std::sort(x.begin(), x.end());
    const double floor_stat = x[n - k - 1];  // X_(n-k), ascending order
    if (!(floor_stat > 0.0))
        throw std::runtime_error("hill: nonpositive order statistic X_(n-k) after centering");
    double h = 0.0;
    for (std::size_t i = 1; i <= k; ++i) h += std::log(x[n - i]) - std::log(floor_stat);
    h /= double(k);
    if (!(h > 0.0)) throw std::runtime_error("hill: degenerate tail (H = 0)");
    return 1.0 / h;
}

}  // namespace

double hill_estimate(const SampleBatch& samples, const HillConfig& cfg) {
    const Matrix& x = samples.points;
    if (x.rows == 0 || x.cols == 0) throw std::invalid_argument("hill: empty sample");
    const std::size_t n = cfg.per_dimension ? x.rows : x.size();
    if (cfg.k < 2 || cfg.k >= n)
        throw std::invalid_argument("hill: k must satisfy 2 <= k < n");

    if (!cfg.per_dimension) return hill_1d(x.data, cfg.k, cfg.center);

    std::vector<double> per_dim(x.cols);
    std::vector<double> col(x.rows);
    for (std::size_t j = 0; j < x.cols; ++j) {
        for (std::size_t i = 0; i < x.rows; ++i) col[i] = x(i, j);
        per_dim[j] = hill_1d(col, cfg.k, cfg.center);
    }
    return median_inplace(per_dim);
}

void HtPriorSpec::validate() const {
    if (dim == 0) throw std::runtime_error("ht prior: zero dimension");
    if (!(nu_hat > 0.0)) throw std::runtime_error("ht prior: nu_hat must be > 0");
    if (!(sigma_T >= 0.0)) throw std::runtime_error("ht prior: sigma_T must be >= 0");
    if (mu_hat.size() != dim) throw std::runtime_error("ht prior: mu_hat size mismatch");
}

HtPriorSpec fit_ht_prior(const SampleBatch& samples, double sigma_T,
                         const HillConfig& cfg) {
    const Matrix& x = samples.points;
    HtPriorSpec spec;
    spec.dim = x.cols;
    spec.sigma_T = sigma_T;
    spec.hill_k = cfg.k;
    spec.nu_hat = hill_estimate(samples, cfg);

    // mu_hat: coordinate-wise median of the rows on the positive side of the
    // mean projection (the symmetric mixture's + component).
    std::vector<std::size_t> pos;
    for (std::size_t i = 0; i < x.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < x.cols; ++j) s += x(i, j);
        if (s > 0.0) pos.push_back(i);
    }
    if (pos.empty()) throw std::runtime_error("ht prior: no positive-projection rows");
    spec.mu_hat.resize(x.cols);
    std::vector<double> col(pos.size());
    for (std::size_t j = 0; j < x.cols; ++j) {
        for (std::size_t i = 0; i < pos.size(); ++i) col[i] = x(pos[i], j);
        spec.mu_hat[j] = median_inplace(col);
    }
    spec.validate();
    return spec;
}

SampleBatch ht_prior_sample(const HtPriorSpec& spec, std::size_t n, Rng& rng) {
    if (n == 0) throw std::invalid_argument("ht_prior_sample: n must be >= 1");
    spec.validate();
    const std::size_t d = spec.dim;
    const bool gaussian_limit = std::isinf(spec.nu_hat);
    Matrix pts(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        const double sign = rng.uniform() < 0.5 ? 1.0 : -1.0;
        double scale = 1.0;
        if (!gaussian_limit)
            scale = std::sqrt(spec.nu_hat / rng.chi_squared(spec.nu_hat));
        double* r = pts.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            r[j] = sign * spec.mu_hat[j] + scale * rng.normal();
            if (spec.sigma_T > 0.0) r[j] += spec.sigma_T * rng.normal();
        }
    }
    SampleBatch batch;
    batch.points = std::move(pts);
    batch.tag = SampleTag::generated;
    batch.sigma = spec.sigma_T;
    return batch;
}

void save_ht_prior(const std::string& path, const HtPriorSpec& spec) {
    spec.validate();
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    auto num = [&f](double v) {
        if (std::isinf(v)) {
            f << "inf";
            return;
        }
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        f << buf;
    };
    f << "shdiff-htprior 1\n";
    f << "dim " << spec.dim << " hill_k " << spec.hill_k << "\n";
    f << "nu_hat ";
    num(spec.nu_hat);
    f << " sigma_T ";
    num(spec.sigma_T);
    f << "\nmu_hat";
    for (double v : spec.mu_hat) {
        f << ' ';
        num(v);
    }
    f << "\n";
    if (!f) throw std::runtime_error("write failed: " + path);
}

HtPriorSpec load_ht_prior(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::string magic, kw;
    int version = 0;
    f >> magic >> version;
    if (!f || magic != "shdiff-htprior" || version != 1)
        throw std::runtime_error("not an ht-prior checkpoint: " + path);
    auto expect = [&](const char* tag) {
        f >> kw;
        if (!f || kw != tag)
            throw std::runtime_error("ht-prior checkpoint: expected " +
                                     std::string(tag) + " in " + path);
    };
    HtPriorSpec spec;
    expect("dim");
    f >> spec.dim;
    expect("hill_k");
    f >> spec.hill_k;
    auto num = [&]() {
        f >> kw;
        if (!f) throw std::runtime_error("ht-prior checkpoint: truncated " + path);
        if (kw == "inf") return std::numeric_limits<double>::infinity();
        return std::stod(kw);
    };
    expect("nu_hat");
    spec.nu_hat = num();
    expect("sigma_T");
    spec.sigma_T = num();
    expect("mu_hat");
    spec.mu_hat.resize(spec.dim);
    for (auto& v : spec.mu_hat) v = num();
    spec.validate();
    return spec;
}

}  // namespace shdiff
