#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace shdiff {

enum class TargetKind { gmm, ht };
enum class InitFamily { pi_inf, empirical, flow_fixed, flow_dynamical, ht_prior };
enum class SamplerKind { heun, em };
enum class ScoreKind { analytic, denoiser };

std::string to_string(TargetKind k);
std::string to_string(InitFamily f);
std::string to_string(SamplerKind k);
std::string to_string(ScoreKind k);

/// One experiment: target -> horizon -> schedule -> initialization -> sampler
/// -> metrics (-> bound diagnostics). Defaults are desk-scale; the full
/// protocol is reachable by overriding sizes.
struct RunConfig {
    // [run]
    std::uint64_t seed = 1;
    std::string out_dir = "runs/out";
    std::size_t repetitions = 5;

    // [target]
    TargetKind target = TargetKind::gmm;
    std::size_t dim = 4;
    std::uint64_t target_seed = 1;
    double nu = 3.0;  // heavy-tailed target only
    std::size_t n_train = 100000;

    // [horizon]
    double sigma_T = 2.0;

    // [schedule]
    std::size_t steps = 10;
    double rho = 7.0;
    double sigma_min = 0.002;

    // [init]
    InitFamily init = InitFamily::pi_inf;
    std::string init_checkpoint;  // flow/ht-prior artifact; empty = fit in-run
    bool allow_training = true;
    std::size_t hill_k = 350;

    // [sampler]
    SamplerKind sampler = SamplerKind::heun;

    // [score]
    ScoreKind score = ScoreKind::analytic;
    std::string score_checkpoint;  // denoiser artifact; empty = train in-run
    std::size_t denoiser_width = 128;
    std::size_t denoiser_hidden = 4;
    std::size_t denoiser_batch = 256;
    std::size_t denoiser_epochs = 40;
    double denoiser_lr = 1e-3;

    // [flow]
    std::size_t flow_layers = 8;
    std::size_t flow_width = 256;
    std::size_t flow_depth = 2;
    std::size_t flow_batch = 2048;
    std::size_t flow_epochs = 100;
    double flow_lr = 1e-4;
    double training_factor = 1.0;

    // [metrics]
    std::size_t n_generated = 4096;
    std::size_t n_reference = 8192;
    std::size_t slices = 100;
    int order = 2;
    std::vector<double> quantiles;  // may be empty
    bool maxsw = false;

    // [bound]
    bool bound_enabled = true;
    std::size_t bound_n = 20000;

    /// Semantic checks beyond per-field parsing (cross-field constraints,
    /// positivity, family/target compatibility). Throws std::runtime_error.
    void validate() const;
};

/// Parse the sectioned key = value format. Unknown sections or keys, duplicate
/// keys, malformed values, and missing mandatory seeds (run.seed, target.seed)
/// are errors. `#` lines are comments. The result is validated.
RunConfig parse_config(const std::string& text);

/// Canonical serialization: fixed section and key order, shortest exact
/// number formatting. parse(canonical(c)) == c and canonical is idempotent
/// byte for byte.
std::string canonical_config(const RunConfig& cfg);

/// Apply one "section.key=value" override (CLI --set). Throws on unknown keys
/// or bad values; the caller re-validates afterwards.
void apply_override(RunConfig& cfg, const std::string& spec);

}  // namespace shdiff
