#include "shdiff/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace shdiff {

std::vector<double> karras_sigmas(const ScheduleConfig& cfg) {
    if (cfg.steps == 0) throw std::invalid_argument("karras_sigmas: steps must be >= 1");
    if (!(cfg.sigma_min > 0.0) || !(cfg.sigma_max > cfg.sigma_min))
        throw std::invalid_argument("karras_sigmas: need 0 < sigma_min < sigma_max");
    if (!(cfg.rho > 0.0)) throw std::invalid_argument("karras_sigmas: rho must be > 0");

    std::vector<double> s;
    s.reserve(cfg.steps + 1);
    if (cfg.steps == 1) {
        s.push_back(cfg.sigma_max);
    } else {
        const double inv_rho = 1.0 / cfg.rho;
        const double hi = std::pow(cfg.sigma_max, inv_rho);
        const double lo = std::pow(cfg.sigma_min, inv_rho);
        for (std::size_t i = 0; i < cfg.steps; ++i) {
            const double t = double(i) / double(cfg.steps - 1);
            s.push_back(std::pow(hi + t * (lo - hi), cfg.rho));
        }
        // Guard the endpoints against pow round-off.
        s.front() = cfg.sigma_max;
        s.back() = cfg.sigma_min;
    }
    s.push_back(0.0);
    return s;
}

std::vector<double> gamma_weights(const std::vector<double>& sigmas) {
    if (sigmas.size() < 2)
        throw std::invalid_argument("gamma_weights: need at least two levels");
    std::vector<double> g;
    g.reserve(sigmas.size() - 1);
    for (std::size_t k = 0; k + 1 < sigmas.size(); ++k) {
        if (!(sigmas[k] > sigmas[k + 1]) || sigmas[k + 1] < 0.0)
            throw std::invalid_argument(
                "gamma_weights: grid must be strictly decreasing and non-negative");
        g.push_back(sigmas[k] * sigmas[k] - sigmas[k + 1] * sigmas[k + 1]);
    }
    return g;
}

}  // namespace shdiff
