#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "shdiff/config.hpp"
#include "shdiff/denoiser.hpp"
#include "shdiff/flow.hpp"
#include "shdiff/ht_prior.hpp"
#include "shdiff/kl.hpp"
#include "shdiff/targets.hpp"

namespace shdiff {

struct MetricRow {
    std::string metric;
    std::size_t repetition = 0;
    double value = 0.0;
};

struct StageTime {
    std::string stage;
    double seconds = 0.0;
};

struct HtPriorInfo {
    bool present = false;
    double nu_hat = 0.0;
    std::size_t hill_k = 0;
    std::vector<double> mu_hat;
};

/// Everything a finished run produced. Replaying the embedded config snapshot
/// reproduces every metric and bound row bit for bit; wall clocks live only
/// here and in record.json, never in the CSV.
struct RunRecord {
    RunConfig config;
    std::string config_text;  // canonical snapshot
    std::vector<std::pair<std::string, std::string>> artifacts;  // name -> fnv64
    std::vector<MetricRow> rows;
    bool bound_present = false;
    BoundReport bound;
    HtPriorInfo ht_prior;
    std::vector<StageTime> stage_seconds;
};

/// Materialized pipeline pieces, reusable by the partial CLI commands. The
/// score model points into `gmm`/`denoiser`, so the struct is not copyable.
struct Pipeline {
    Pipeline() = default;
    Pipeline(const Pipeline&) = delete;
    Pipeline& operator=(const Pipeline&) = delete;

    RunConfig cfg;
    GmmSpec gmm;
    StudentMixtureSpec student;
    Matrix train_data;

    std::unique_ptr<ScoreModel> score;
    DenoiserNet denoiser;  // backing storage when score.kind = denoiser
    bool denoiser_trained_here = false;

    FlowModel flow;
    bool flow_ready = false;
    HtPriorSpec ht_spec;
    bool ht_ready = false;

    std::vector<double> ode_grid;  // Karras levels, trailing 0 included
    std::vector<double> em_grid;   // same grid without the trailing 0
};

/// Stage builders. Each throws std::runtime_error tagged "stage <name>: ..."
/// on failure; `prepare_*` persist any artifact they train into cfg.out_dir.
void prepare_target(Pipeline& p);      // stage "target"
void prepare_score(Pipeline& p);       // stage "score"
void prepare_init(Pipeline& p);        // stage "init" ("prior-missing" here)
/// Draw `n` initialization points for repetition `rep` (chunked, seeded).
Matrix draw_init(const Pipeline& p, std::size_t n, std::size_t rep);
/// Initialization + backward chain for repetition `rep`. stage "sample".
SampleBatch generate(const Pipeline& p, std::size_t n, std::size_t rep);
/// Fresh clean reference draws for repetition `rep`.
Matrix draw_reference(const Pipeline& p, std::size_t n, std::size_t rep);
/// Metric rows for one repetition. stage "evaluate".
std::vector<MetricRow> evaluate(const Pipeline& p, const SampleBatch& generated,
                                std::size_t rep);
/// Bound diagnostics (gmm targets). stage "bound".
BoundReport diagnose_bound(const Pipeline& p);

/// Full pipeline: target -> score -> init -> per-repetition sample+evaluate ->
/// bound -> report files in cfg.out_dir (config.ini, report.csv, summary.txt,
/// record.json, checkpoints, rep-0 samples).
RunRecord run_experiment(const RunConfig& cfg);

std::string report_csv(const RunRecord& record);
std::string report_summary(const RunRecord& record);
std::string record_json(const RunRecord& record);
/// Writes report.csv, summary.txt and record.json into cfg.out_dir.
void emit_report(const RunRecord& record);

}  // namespace shdiff
