#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "shdiff/ht_prior.hpp"
#include "shdiff/rng.hpp"
#include "shdiff/targets.hpp"
#include "shdiff/tensor.hpp"

using namespace shdiff;

namespace {

SampleBatch batch_of(Matrix m) {
    return SampleBatch{std::move(m), SampleTag::target_draw, 0.0};
}

Matrix pareto3_sample(std::size_t n, Rng& rng) {
    Matrix x(n, 1);
    for (auto& v : x.data) v = std::pow(rng.uniform_pos(), -1.0 / 3.0);
    return x;
}

/// Least-squares slope of ln S(t) against ln t, with S the empirical survival
/// of |first coordinate| at the given thresholds. Samples are drawn in chunks
/// so the large-n cases never materialize.
double survival_slope(const HtPriorSpec& spec, std::size_t n,
                      const std::vector<double>& thresholds, Rng& rng) {
    std::vector<std::size_t> counts(thresholds.size(), 0);
    const std::size_t chunk = 1u << 20;
    for (std::size_t done = 0; done < n;) {
        const std::size_t m = std::min(chunk, n - done);
        const SampleBatch b = ht_prior_sample(spec, m, rng);
        for (std::size_t i = 0; i < m; ++i) {
            const double a = std::fabs(b.points(i, 0));
            for (std::size_t t = 0; t < thresholds.size(); ++t)
                if (a > thresholds[t]) ++counts[t];
        }
        done += m;
    }
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
        REQUIRE(counts[t] > 0);
        const double lx = std::log(thresholds[t]);
        const double ly = std::log(double(counts[t]) / double(n));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double k = double(thresholds.size());
    return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

double quantile_at(std::vector<double>& v, double q) {
    const std::size_t idx = std::size_t(std::ceil(q * double(v.size()))) - 1;
    std::nth_element(v.begin(), v.begin() + idx, v.end());
    return v[idx];
}

}  // namespace

TEST_CASE("hill estimate reproduces the hand-computed example") {
    Matrix x(4, 1);
    x(0, 0) = 1.0;
    x(1, 0) = std::exp(1.0);
    x(2, 0) = std::exp(2.0);
    x(3, 0) = std::exp(3.0);
    HillConfig cfg;
    cfg.k = 3;
    cfg.center = false;  // already positive and anchored at 1
    const double nu = hill_estimate(batch_of(std::move(x)), cfg);
    CHECK(nu == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("hill estimate is consistent on exact Pareto(3) draws") {
    Rng rng(901);
    HillConfig cfg;
    cfg.center = false;  // raw Pareto draws are positive by construction
    const double nu = hill_estimate(batch_of(pareto3_sample(100000, rng)), cfg);
    CHECK(nu > 2.6);
    CHECK(nu < 3.4);
}

TEST_CASE("pooled estimation flattens the coordinates into one sample") {
    Rng rng(902);
    const Matrix one = pareto3_sample(100000, rng);
    Matrix two(50000, 2);
    std::copy(one.data.begin(), one.data.end(), two.data.begin());
    HillConfig cfg;
    cfg.center = false;
    cfg.per_dimension = false;
    const double pooled = hill_estimate(batch_of(std::move(two)), cfg);
    CHECK(pooled > 2.6);
    CHECK(pooled < 3.4);
}

TEST_CASE("hill estimate lands near nu on the heavy-tailed target") {
    Rng rng(903);
    StudentMixtureSpec target;
    target.dim = 10;
    target.nu = 3.0;
    const SampleBatch data = batch_of(student_mixture_sample(target, 100000, rng));
    const double nu = hill_estimate(data, HillConfig{});
    CHECK(nu > 2.3);
    CHECK(nu < 3.8);
}

TEST_CASE("median centering absorbs a constant shift") {
    Rng rng(904);
    StudentMixtureSpec target;
    target.dim = 4;
    target.nu = 3.0;
    const Matrix base = student_mixture_sample(target, 100000, rng);
    Matrix shifted = base;
    for (auto& v : shifted.data) v += 5.0;
    const double nu0 = hill_estimate(batch_of(base), HillConfig{});
    const double nu1 = hill_estimate(batch_of(std::move(shifted)), HillConfig{});
    CHECK(std::fabs(nu1 - nu0) / nu0 < 0.05);
}

TEST_CASE("hill rejects out-of-range k and degenerate order statistics") {
    Rng rng(905);
    const Matrix x = pareto3_sample(100, rng);
    HillConfig cfg;
    cfg.k = 1;
    CHECK_THROWS_AS(hill_estimate(batch_of(x), cfg), std::invalid_argument);
    cfg.k = 100;
    CHECK_THROWS_AS(hill_estimate(batch_of(x), cfg), std::invalid_argument);
    CHECK_THROWS_AS(hill_estimate(batch_of(Matrix()), HillConfig{}), std::invalid_argument);

    // Mostly-constant data: after centering, X_(n-k) is zero.
    Matrix flat(10, 1);
    for (std::size_t i = 0; i < 6; ++i) flat(i, 0) = 5.0;
    for (std::size_t i = 6; i < 10; ++i) flat(i, 0) = double(i - 5);
    cfg.k = 8;
    CHECK_THROWS_AS(hill_estimate(batch_of(std::move(flat)), cfg), std::runtime_error);
}

TEST_CASE("fitting the prior recovers tail index and component location") {
    Rng rng(906);
    StudentMixtureSpec target;
    target.dim = 4;
    target.nu = 3.0;
    const SampleBatch data = batch_of(student_mixture_sample(target, 20000, rng));
    const HtPriorSpec spec = fit_ht_prior(data, 2.0, HillConfig{});
    CHECK(spec.dim == 4);
    CHECK(spec.sigma_T == 2.0);
    CHECK(spec.hill_k == 350);
    CHECK(spec.nu_hat > 2.0);
    CHECK(spec.nu_hat < 4.5);
    const std::vector<double> mu = target.location();
    double lo = 1e9, hi = -1e9;
    for (std::size_t j = 0; j < 4; ++j) {
        CHECK(spec.mu_hat[j] > 0.0);
        CHECK(std::fabs(spec.mu_hat[j] - mu[j]) < 0.35);
        lo = std::min(lo, spec.mu_hat[j]);
        hi = std::max(hi, spec.mu_hat[j]);
    }
    CHECK(hi - lo < 0.25);  // coordinates play symmetric roles
}

TEST_CASE("prior marginals keep the power-law survival slope") {
    HtPriorSpec spec;
    spec.dim = 1;
    spec.nu_hat = 3.0;
    spec.mu_hat = {0.7};

    SUBCASE("sigma_T = 0 is the plain Student mixture") {
        Rng rng(907);
        spec.sigma_T = 0.0;
        const double slope = survival_slope(spec, 2000000, {6, 9, 13, 19}, rng);
        CHECK(slope > -3.8);
        CHECK(slope < -2.2);
    }
    SUBCASE("sigma_T = 2") {
        Rng rng(908);
        spec.sigma_T = 2.0;
        const double slope = survival_slope(spec, 6000000, {8, 12, 18, 26}, rng);
        CHECK(slope > -3.8);
        CHECK(slope < -2.2);
    }
    SUBCASE("sigma_T = 7") {
        Rng rng(909);
        spec.sigma_T = 7.0;
        const double slope = survival_slope(spec, 30000000, {33, 40, 50, 62}, rng);
        CHECK(slope > -3.8);
        CHECK(slope < -2.2);
    }
}

TEST_CASE("infinite dof degenerates to the Gaussian limit") {
    Rng rng(910);
    HtPriorSpec spec;
    spec.dim = 3;
    spec.nu_hat = std::numeric_limits<double>::infinity();
    spec.sigma_T = 1.5;
    spec.mu_hat = {0.0, 0.0, 0.0};
    const SampleBatch b = ht_prior_sample(spec, 1000000, rng);
    for (std::size_t j = 0; j < 3; ++j) {
        std::vector<double> col(b.points.rows);
        for (std::size_t i = 0; i < col.size(); ++i) col[i] = b.points(i, j);
        CHECK(std::fabs(testing::mean(col)) < 0.01);
        const double sd = testing::sample_std(col);
        CHECK(sd * sd == doctest::Approx(1.0 + 1.5 * 1.5).epsilon(0.02));
    }
}

TEST_CASE("increasing sigma_T strictly increases the marginal variance") {
    HtPriorSpec spec;
    spec.dim = 1;
    spec.nu_hat = 5.0;  // finite fourth moment keeps the estimate stable
    spec.mu_hat = {0.5};
    double prev = -1.0;
    std::uint64_t seed = 911;
    for (double sigma : {0.0, 1.0, 2.0, 4.0}) {
        Rng rng(seed++);
        spec.sigma_T = sigma;
        const SampleBatch b = ht_prior_sample(spec, 1000000, rng);
        std::vector<double> col(b.points.data);
        const double sd = testing::sample_std(col);
        CHECK(sd * sd > prev);
        prev = sd * sd;
    }
}

TEST_CASE("extreme quantile of the prior tracks the noised target") {
    // d=10, nu=3, sigma_T=2: q=0.9999 of the first marginal, prior vs the
    // empirically noised target, both at n=1e7 (drawn in chunks).
    const std::size_t total = 10000000, chunk = 100000;
    const double q = 0.9999, sigma_T = 2.0;

    StudentMixtureSpec target;
    target.dim = 10;
    target.nu = 3.0;

    Rng rng_t(912);
    std::vector<double> target_col;
    target_col.reserve(total);
    for (std::size_t done = 0; done < total; done += chunk) {
        Matrix clean = student_mixture_sample(target, chunk, rng_t);
        const Matrix noised = forward_noise(clean, sigma_T, rng_t);
        for (std::size_t i = 0; i < chunk; ++i) target_col.push_back(noised(i, 0));
    }
    const double want = quantile_at(target_col, q);
    target_col.clear();
    target_col.shrink_to_fit();

    HtPriorSpec spec;
    spec.dim = 10;
    spec.nu_hat = 3.0;
    spec.sigma_T = sigma_T;
    spec.mu_hat = target.location();

    Rng rng_p(913);
    std::vector<double> prior_col;
    prior_col.reserve(total);
    for (std::size_t done = 0; done < total; done += chunk) {
        const SampleBatch b = ht_prior_sample(spec, chunk, rng_p);
        for (std::size_t i = 0; i < chunk; ++i) prior_col.push_back(b.points(i, 0));
    }
    const double got = quantile_at(prior_col, q);

    CHECK(std::fabs(got - want) / std::fabs(want) < 0.35);
}

TEST_CASE("prior sampling is deterministic and tags its output") {
    HtPriorSpec spec;
    spec.dim = 2;
    spec.nu_hat = 3.0;
    spec.sigma_T = 2.0;
    spec.mu_hat = {0.5, 0.5};
    Rng r1(77), r2(77);
    const SampleBatch a = ht_prior_sample(spec, 100, r1);
    const SampleBatch b = ht_prior_sample(spec, 100, r2);
    CHECK(a.points.data == b.points.data);
    CHECK(a.tag == SampleTag::generated);
    CHECK(a.sigma == 2.0);
    Rng r3(78);
    CHECK_THROWS(ht_prior_sample(spec, 0, r3));
    spec.nu_hat = -1.0;
    CHECK_THROWS(ht_prior_sample(spec, 10, r3));
}

TEST_CASE("prior checkpoints round trip exactly") {
    HtPriorSpec spec;
    spec.dim = 3;
    spec.nu_hat = 2.87431592653589793;
    spec.sigma_T = 2.0;
    spec.mu_hat = {0.5124, -0.0032, 0.77};
    spec.hill_k = 350;
    const std::string path = "htprior_roundtrip.txt";
    save_ht_prior(path, spec);
    const HtPriorSpec back = load_ht_prior(path);
    CHECK(back.dim == spec.dim);
    CHECK(back.nu_hat == spec.nu_hat);
    CHECK(back.sigma_T == spec.sigma_T);
    CHECK(back.mu_hat == spec.mu_hat);
    CHECK(back.hill_k == spec.hill_k);

    spec.nu_hat = std::numeric_limits<double>::infinity();
    save_ht_prior(path, spec);
    CHECK(std::isinf(load_ht_prior(path).nu_hat));

    CHECK_THROWS_AS(load_ht_prior("does_not_exist.txt"), std::runtime_error);
    std::ofstream bad("htprior_bad.txt");
    bad << "shdiff-gmm 1\n";
    bad.close();
    CHECK_THROWS_AS(load_ht_prior("htprior_bad.txt"), std::runtime_error);
}
