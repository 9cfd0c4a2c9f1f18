// Command-line front end: short-horizon diffusion experiments driven by a
// sectioned key = value config file. Subcommands cover the partial stages
// (train-prior, train-denoiser, sample, evaluate, diagnose-bound) and the
// end-to-end `run`. Exit code 0 only on full success.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "shdiff/config.hpp"
#include "shdiff/harness.hpp"
#include "shdiff/io.hpp"

namespace {

using namespace shdiff;

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "config file (key = value sections)")
        ->required();
    cmd->add_option("--set", args.overrides,
                    "override config entries, section.key=value (repeatable)");
}

RunConfig load_config(const CommonArgs& args) {
    RunConfig cfg = parse_config(read_text_file(args.config_path));
    // The output directory is the one environment override the harness honors.
    if (const char* env = std::getenv("SHDIFF_OUT_DIR"); env && *env)
        cfg.out_dir = env;
    for (const std::string& spec : args.overrides) apply_override(cfg, spec);
    cfg.validate();
    return cfg;
}

std::vector<double> parse_horizons(const std::string& list) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= list.size()) {
        const std::size_t comma = list.find(',', start);
        const std::string item =
            list.substr(start, comma == std::string::npos ? comma : comma - start);
        out.push_back(std::stod(item));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

int cmd_train_prior(const CommonArgs& args) {
    const RunConfig cfg = load_config(args);
    if (cfg.init != InitFamily::flow_fixed &&
        cfg.init != InitFamily::flow_dynamical &&
        cfg.init != InitFamily::ht_prior) {
        std::cerr << "error: init.family " << to_string(cfg.init)
                  << " has nothing to train\n";
        return 1;
    }
    if (!cfg.init_checkpoint.empty()) {
        std::cerr << "error: init.checkpoint is already set; clear it to train\n";
        return 1;
    }
    Pipeline p;
    p.cfg = cfg;
    prepare_target(p);
    prepare_init(p);
    const char* name =
        cfg.init == InitFamily::ht_prior ? "htprior.txt" : "flow.ckpt";
    std::cout << cfg.out_dir << "/" << name << "\n";
    return 0;
}

int cmd_train_denoiser(const CommonArgs& args) {
    const RunConfig cfg = load_config(args);
    if (cfg.score != ScoreKind::denoiser) {
        std::cerr << "error: score.kind must be denoiser\n";
        return 1;
    }
    if (!cfg.score_checkpoint.empty()) {
        std::cerr << "error: score.checkpoint is already set; clear it to train\n";
        return 1;
    }
    Pipeline p;
    p.cfg = cfg;
    prepare_target(p);
    prepare_score(p);
    std::cout << cfg.out_dir << "/denoiser.ckpt\n";
    return 0;
}

int cmd_sample(const CommonArgs& args, const std::string& out_path, std::size_t n,
               std::size_t rep) {
    RunConfig cfg = load_config(args);
    Pipeline p;
    p.cfg = cfg;
    prepare_target(p);
    prepare_score(p);
    prepare_init(p);
    const SampleBatch batch =
        generate(p, n > 0 ? n : cfg.n_generated, rep);
    save_batch(out_path, batch);
    std::cout << out_path << "\n";
    return 0;
}

int cmd_evaluate(const CommonArgs& args, const std::string& generated_path,
                 std::size_t rep) {
    const RunConfig cfg = load_config(args);
    const SampleBatch generated = load_batch(generated_path);
    if (generated.dim() != cfg.dim) {
        std::cerr << "error: generated batch has dim " << generated.dim()
                  << ", config expects " << cfg.dim << "\n";
        return 1;
    }
    Pipeline p;
    p.cfg = cfg;
    prepare_target(p);
    std::string csv = "metric,repetition,value\n";
    for (const MetricRow& r : evaluate(p, generated, rep))
        csv += r.metric + "," + std::to_string(r.repetition) + "," +
               fmt_double(r.value) + "\n";
    write_text_file(cfg.out_dir + "/evaluate.csv", csv);
    std::cout << csv;
    return 0;
}

int cmd_diagnose_bound(const CommonArgs& args, const std::string& horizons) {
    const RunConfig base = load_config(args);
    std::vector<double> sigma_Ts{base.sigma_T};
    if (!horizons.empty()) sigma_Ts = parse_horizons(horizons);

    std::string csv = "sigma_T,term,value\n";
    for (double sigma_T : sigma_Ts) {
        RunConfig cfg = base;
        cfg.sigma_T = sigma_T;
        cfg.validate();
        Pipeline p;
        p.cfg = cfg;
        prepare_target(p);
        prepare_score(p);
        prepare_init(p);
        const BoundReport rep = diagnose_bound(p);
        const std::string prefix = fmt_double(sigma_T) + ",";
        if (rep.e_init_available) {
            csv += prefix + "e_init," + fmt_double(rep.e_init.value) + "\n";
            csv += prefix + "e_init_se," + fmt_double(rep.e_init.std_err) + "\n";
        }
        csv += prefix + "fisher_delta," + fmt_double(rep.fisher_delta.value) + "\n";
        csv += prefix + "fisher_T," + fmt_double(rep.fisher_T.value) + "\n";
        csv += prefix + "disc," + fmt_double(rep.disc.value) + "\n";
        csv += prefix + "disc_max_gamma," + fmt_double(rep.disc.max_gamma) + "\n";
        if (rep.e_train_available)
            csv += prefix + "e_train," + fmt_double(rep.e_train.value) + "\n";
    }
    write_text_file(base.out_dir + "/bound.csv", csv);
    std::cout << csv;
    return 0;
}

int cmd_run(const CommonArgs& args) {
    const RunConfig cfg = load_config(args);
    const RunRecord rec = run_experiment(cfg);
    std::cout << cfg.out_dir << "\n";
    for (const StageTime& s : rec.stage_seconds)
        std::cerr << "stage " << s.stage << ": " << fmt_double(s.seconds) << " s\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"short-horizon diffusion sampling experiments"};
    app.require_subcommand(1);

    CommonArgs train_prior_args, train_denoiser_args, sample_args, eval_args,
        bound_args, run_args;
    std::string sample_out = "samples.bin", eval_generated, bound_horizons;
    std::size_t sample_n = 0, sample_rep = 0, eval_rep = 0;

    add_common(app.add_subcommand("train-prior",
                                  "fit the initialization prior (flow or ht)"),
               train_prior_args);
    add_common(app.add_subcommand("train-denoiser", "train the denoiser score"),
               train_denoiser_args);

    CLI::App* sample_cmd =
        app.add_subcommand("sample", "generate samples via the backward chain");
    add_common(sample_cmd, sample_args);
    sample_cmd->add_option("--out", sample_out, "output batch file");
    sample_cmd->add_option("--n", sample_n, "sample count (default metrics.n_generated)");
    sample_cmd->add_option("--rep", sample_rep, "repetition index for seeding");

    CLI::App* eval_cmd =
        app.add_subcommand("evaluate", "metrics for a generated batch");
    add_common(eval_cmd, eval_args);
    eval_cmd->add_option("--generated", eval_generated, "batch file to score")
        ->required();
    eval_cmd->add_option("--rep", eval_rep, "repetition index for seeding");

    CLI::App* bound_cmd = app.add_subcommand(
        "diagnose-bound", "error-decomposition terms (gmm targets)");
    add_common(bound_cmd, bound_args);
    bound_cmd->add_option("--horizons", bound_horizons,
                          "comma-separated sigma_T list (default: config value)");

    add_common(app.add_subcommand("run", "end-to-end experiment"), run_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("train-prior")) return cmd_train_prior(train_prior_args);
        if (app.got_subcommand("train-denoiser"))
            return cmd_train_denoiser(train_denoiser_args);
        if (app.got_subcommand("sample"))
            return cmd_sample(sample_args, sample_out, sample_n, sample_rep);
        if (app.got_subcommand("evaluate"))
            return cmd_evaluate(eval_args, eval_generated, eval_rep);
        if (app.got_subcommand("diagnose-bound"))
            return cmd_diagnose_bound(bound_args, bound_horizons);
        if (app.got_subcommand("run")) return cmd_run(run_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << "error: no subcommand\n";
    return 1;
}
