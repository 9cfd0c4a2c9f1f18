#pragma once

#include <cstddef>
#include <vector>

namespace shdiff {

/// Noise-level grid parameters. sigma_max doubles as the diffusion horizon:
/// the chain starts from the target noised at sigma_max.
struct ScheduleConfig {
    std::size_t steps = 10;  // number of positive grid levels N
    double sigma_min = 0.002;
    double sigma_max = 80.0;
    double rho = 7.0;
};

/// Polynomial interpolation grid in sigma^(1/rho): N strictly decreasing
/// positive levels from sigma_max down to sigma_min, with a final 0 appended
/// (N + 1 values total). steps == 1 degenerates to {sigma_max, 0}.
std::vector<double> karras_sigmas(const ScheduleConfig& cfg);

/// Step weights gamma_k = sigma_k^2 - sigma_{k+1}^2 for each consecutive pair
/// of a strictly decreasing, non-negative grid. size() == sigmas.size() - 1.
std::vector<double> gamma_weights(const std::vector<double>& sigmas);

}  // namespace shdiff
