#include "shdiff/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "shdiff/io.hpp"
#include "shdiff/metrics.hpp"
#include "shdiff/samplers.hpp"
#include "shdiff/schedule.hpp"

namespace shdiff {

namespace {

constexpr std::size_t kGenChunk = 16384;

[[noreturn]] void stage_fail(const char* stage, const std::string& what) {
    throw std::runtime_error(std::string("stage ") + stage + ": " + what);
}

std::string artifact_path(const RunConfig& cfg, const char* name) {
    return cfg.out_dir + "/" + name;
}

/// One chunk of initialization draws with the chunk's own stream.
Matrix init_chunk(const Pipeline& p, std::size_t m, Rng& rng) {
    const RunConfig& cfg = p.cfg;
    switch (cfg.init) {
        case InitFamily::pi_inf:
            return iso_gaussian_sample(m, cfg.dim, cfg.sigma_T * cfg.sigma_T, rng);
        case InitFamily::empirical: {
            // Noised bootstrap of the training set: the empirical measure
            // convolved with N(0, sigma_T^2 I).
            Matrix x(m, cfg.dim);
            for (std::size_t i = 0; i < m; ++i) {
                const double* src = p.train_data.row(rng.below(p.train_data.rows));
                double* dst = x.row(i);
                for (std::size_t j = 0; j < cfg.dim; ++j)
                    dst[j] = src[j] + cfg.sigma_T * rng.normal();
            }
            return x;
        }
        case InitFamily::flow_fixed:
        case InitFamily::flow_dynamical:
            return flow_sample(p.flow, m, rng).points;
        case InitFamily::ht_prior:
            return ht_prior_sample(p.ht_spec, m, rng).points;
    }
    throw std::runtime_error("bad init family");
}

double sample_mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / double(v.size());
}

double sample_std(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = sample_mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / double(v.size() - 1));
}

void append_estimate_rows(std::string& out, const char* name,
                          const McEstimate& est) {
    out += std::string(name) + ",0," + fmt_double(est.value) + "\n";
    out += std::string(name) + "_se,0," + fmt_double(est.std_err) + "\n";
    out += std::string(name) + "_n,0," + fmt_double(double(est.n)) + "\n";
}

}  // namespace

void prepare_target(Pipeline& p) {
    try {
        const RunConfig& cfg = p.cfg;
        ensure_dir(cfg.out_dir);

        ScheduleConfig sched;
        sched.steps = cfg.steps;
        sched.sigma_min = cfg.sigma_min;
        sched.sigma_max = cfg.sigma_T;
        sched.rho = cfg.rho;
        p.ode_grid = karras_sigmas(sched);
        p.em_grid = p.ode_grid;
        p.em_grid.pop_back();

        Rng rng(derive_seed(cfg.seed, "train-data"));
        if (cfg.target == TargetKind::gmm) {
            p.gmm = make_grid_gmm(cfg.dim, cfg.target_seed);
            p.train_data = gmm_sample(p.gmm, cfg.n_train, rng);
        } else {
            p.student.dim = cfg.dim;
            p.student.nu = cfg.nu;
            p.train_data = student_mixture_sample(p.student, cfg.n_train, rng);
        }
        save_batch(artifact_path(cfg, "train.bin"),
                   SampleBatch{p.train_data, SampleTag::target_draw, 0.0});
    } catch (const std::exception& e) {
        stage_fail("target", e.what());
    }
}

void prepare_score(Pipeline& p) {
    try {
        const RunConfig& cfg = p.cfg;
        if (cfg.score == ScoreKind::analytic) {
            p.score = std::make_unique<GmmScore>(p.gmm);
            return;
        }
        if (!cfg.score_checkpoint.empty()) {
            p.denoiser = load_denoiser(cfg.score_checkpoint);
            if (p.denoiser.dim != cfg.dim)
                throw std::runtime_error("denoiser checkpoint dim mismatch");
        } else {
            DenoiseTrainConfig tc;
            tc.lr = cfg.denoiser_lr;
            tc.batch = cfg.denoiser_batch;
            tc.epochs = cfg.denoiser_epochs;
            tc.sigma_min = cfg.sigma_min;
            tc.sigma_max = cfg.sigma_T;
            tc.width = cfg.denoiser_width;
            tc.hidden_layers = cfg.denoiser_hidden;
            tc.seed = derive_seed(cfg.seed, "denoiser");
            p.denoiser = train_denoiser(p.train_data, tc).net;
            p.denoiser_trained_here = true;
            save_denoiser(artifact_path(cfg, "denoiser.ckpt"), p.denoiser);
        }
        p.score = std::make_unique<DenoiserScore>(p.denoiser);
    } catch (const std::exception& e) {
        stage_fail("score", e.what());
    }
}

void prepare_init(Pipeline& p) {
    try {
        const RunConfig& cfg = p.cfg;
        if (cfg.init == InitFamily::flow_fixed ||
            cfg.init == InitFamily::flow_dynamical) {
            if (!cfg.init_checkpoint.empty()) {
                p.flow = load_flow(cfg.init_checkpoint);
                if (p.flow.dim != cfg.dim)
                    throw std::runtime_error("flow checkpoint dim mismatch");
                if (std::fabs(p.flow.sigma_T - cfg.sigma_T) > 1e-12)
                    throw std::runtime_error("flow checkpoint horizon mismatch");
            } else if (!cfg.allow_training) {
                throw std::runtime_error(
                    "prior-missing: init.checkpoint not set and training disabled");
            } else {
                FlowTrainConfig tc;
                tc.layers = cfg.flow_layers;
                tc.width = cfg.flow_width;
                tc.depth = cfg.flow_depth;
                tc.batch = cfg.flow_batch;
                tc.epochs = cfg.flow_epochs;
                tc.lr = cfg.flow_lr;
                tc.training_factor = cfg.training_factor;
                const FlowTrainMode mode = cfg.init == InitFamily::flow_fixed
                                               ? FlowTrainMode::fixed
                                               : FlowTrainMode::dynamical;
                Rng rng(derive_seed(cfg.seed, "flow"));
                SampleBatch data{p.train_data, SampleTag::target_draw, 0.0};
                p.flow = train_flow(data, cfg.sigma_T, tc, mode, rng).model;
                save_flow(artifact_path(cfg, "flow.ckpt"), p.flow);
            }
            p.flow_ready = true;
        } else if (cfg.init == InitFamily::ht_prior) {
            if (!cfg.init_checkpoint.empty()) {
                p.ht_spec = load_ht_prior(cfg.init_checkpoint);
                if (p.ht_spec.dim != cfg.dim)
                    throw std::runtime_error("ht-prior checkpoint dim mismatch");
                if (std::fabs(p.ht_spec.sigma_T - cfg.sigma_T) > 1e-12)
                    throw std::runtime_error("ht-prior checkpoint horizon mismatch");
            } else {
                HillConfig hill;
                hill.k = cfg.hill_k;
                SampleBatch data{p.train_data, SampleTag::target_draw, 0.0};
                p.ht_spec = fit_ht_prior(data, cfg.sigma_T, hill);
                save_ht_prior(artifact_path(cfg, "htprior.txt"), p.ht_spec);
            }
            p.ht_ready = true;
        }
    } catch (const std::exception& e) {
        stage_fail("init", e.what());
    }
}

Matrix draw_init(const Pipeline& p, std::size_t n, std::size_t rep) {
    const std::uint64_t rep_seed = derive_seed(p.cfg.seed, "init", rep);
    Matrix out(n, p.cfg.dim);
    std::size_t done = 0, chunk_index = 0;
    while (done < n) {
        const std::size_t m = std::min(kGenChunk, n - done);
        Rng rng(derive_seed(rep_seed, "chunk", chunk_index));
        const Matrix x = init_chunk(p, m, rng);
        std::copy(x.data.begin(), x.data.end(), out.row(done));
        done += m;
        ++chunk_index;
    }
    return out;
}

SampleBatch generate(const Pipeline& p, std::size_t n, std::size_t rep) {
    try {
        if (!p.score) throw std::runtime_error("score model not prepared");
        const RunConfig& cfg = p.cfg;
        const std::uint64_t init_seed = derive_seed(cfg.seed, "init", rep);
        const std::uint64_t chain_seed = derive_seed(cfg.seed, "chain", rep);

        Matrix out(n, cfg.dim);
        std::size_t done = 0, chunk_index = 0;
        while (done < n) {
            const std::size_t m = std::min(kGenChunk, n - done);
            Rng init_rng(derive_seed(init_seed, "chunk", chunk_index));
            const Matrix x0 = init_chunk(p, m, init_rng);
            Matrix xT;
            if (cfg.sampler == SamplerKind::heun) {
                xT = heun_sample(*p.score, x0, p.ode_grid);
            } else {
                Rng chain_rng(derive_seed(chain_seed, "chunk", chunk_index));
                xT = em_sample(*p.score, x0, p.em_grid, chain_rng);
            }
            std::copy(xT.data.begin(), xT.data.end(), out.row(done));
            done += m;
            ++chunk_index;
        }
        SampleBatch batch;
        batch.points = std::move(out);
        batch.tag = SampleTag::generated;
        batch.sigma = cfg.sampler == SamplerKind::heun ? 0.0 : cfg.sigma_min;
        return batch;
    } catch (const std::exception& e) {
        stage_fail("sample", e.what());
    }
}

Matrix draw_reference(const Pipeline& p, std::size_t n, std::size_t rep) {
    Rng rng(derive_seed(p.cfg.seed, "reference", rep));
    if (p.cfg.target == TargetKind::gmm) return gmm_sample(p.gmm, n, rng);
    return student_mixture_sample(p.student, n, rng);
}

std::vector<MetricRow> evaluate(const Pipeline& p, const SampleBatch& generated,
                                std::size_t rep) {
    try {
        const RunConfig& cfg = p.cfg;
        const Matrix ref = draw_reference(p, cfg.n_reference, rep);

        std::vector<MetricRow> rows;
        Rng slice_rng(derive_seed(cfg.seed, "slices", rep));
        rows.push_back({"swd", rep,
                        sliced_wasserstein(generated.points, ref, cfg.slices,
                                           cfg.order, slice_rng)});
        if (cfg.maxsw) {
            MaxSwConfig mc;
            mc.seed = derive_seed(cfg.seed, "maxsw", rep);
            rows.push_back(
                {"maxsw", rep,
                 max_sliced_wasserstein(generated.points, ref, mc, cfg.order)
                     .value});
        }
        for (double q : cfg.quantiles) {
            const std::size_t n_min = std::min(generated.n(), ref.rows);
            if (!quantile_resolution_ok(n_min, q))
                throw std::runtime_error("quantile " + fmt_double(q) +
                                         " unresolvable at n = " +
                                         std::to_string(n_min));
            const auto qerr = quantile_rel_error(generated.points, ref, {q});
            rows.push_back({"qerr_q" + fmt_double(q) + "_mean", rep, qerr[0].mean});
            rows.push_back({"qerr_q" + fmt_double(q) + "_std", rep, qerr[0].stddev});
        }
        return rows;
    } catch (const std::exception& e) {
        stage_fail("evaluate", e.what());
    }
}

BoundReport diagnose_bound(const Pipeline& p) {
    try {
        const RunConfig& cfg = p.cfg;
        if (cfg.target != TargetKind::gmm)
            throw std::runtime_error(
                "bound diagnostics need a gmm target (analytic density)");

        BoundReport report;
        const GmmSpec& g = p.gmm;
        const GmmScore truth(g);

        // E_init = KL(p_T || prior) when the prior has a tractable density.
        if (cfg.init == InitFamily::pi_inf || cfg.init == InitFamily::flow_fixed ||
            cfg.init == InitFamily::flow_dynamical) {
            Rng rng(derive_seed(cfg.seed, "bound-init"));
            SampleBatch p_T{
                forward_noise(gmm_sample(g, cfg.bound_n, rng), cfg.sigma_T, rng),
                SampleTag::noised, cfg.sigma_T};
            const LogDensityFn logp = [&g, &cfg](const double* x) {
                return gmm_log_density(g, cfg.sigma_T, x);
            };
            LogDensityFn logq;
            if (cfg.init == InitFamily::pi_inf) {
                const double var = cfg.sigma_T * cfg.sigma_T;
                const std::size_t d = cfg.dim;
                logq = [d, var](const double* x) {
                    return iso_gaussian_log_density(x, d, var);
                };
            } else {
                const FlowModel& flow = p.flow;
                logq = [&flow](const double* x) {
                    Matrix one(1, flow.dim);
                    std::copy(x, x + flow.dim, one.row(0));
                    return flow_logdensity(flow, one)[0];
                };
            }
            report.e_init = mc_kl(logp, logq, p_T);
            report.e_init_available = true;
        }

        const auto noised_sampler = [&g](double sigma) {
            return [&g, sigma](std::size_t n, Rng& rng) {
                return forward_noise(gmm_sample(g, n, rng), sigma, rng);
            };
        };
        Rng fisher_rng(derive_seed(cfg.seed, "bound-fisher"));
        report.fisher_delta = mc_fisher(truth, cfg.sigma_min,
                                        noised_sampler(cfg.sigma_min), cfg.bound_n,
                                        fisher_rng);
        report.fisher_T = mc_fisher(truth, cfg.sigma_T, noised_sampler(cfg.sigma_T),
                                    cfg.bound_n, fisher_rng);
        report.disc = disc_bound_term(p.em_grid, report.fisher_delta.value,
                                      report.fisher_T.value);

        if (cfg.score == ScoreKind::denoiser && p.score) {
            Rng rng(derive_seed(cfg.seed, "bound-train"));
            const std::size_t per_level =
                std::max<std::size_t>(256, cfg.bound_n / (p.em_grid.size() - 1));
            report.e_train = train_error_term(
                *p.score, truth,
                [&g](std::size_t n, Rng& r) { return gmm_sample(g, n, r); },
                p.em_grid, per_level, rng);
            report.e_train_available = true;
        }
        return report;
    } catch (const std::exception& e) {
        stage_fail("bound", e.what());
    }
}

RunRecord run_experiment(const RunConfig& cfg) {
    cfg.validate();
    RunRecord rec;
    rec.config = cfg;
    rec.config_text = canonical_config(cfg);
    ensure_dir(cfg.out_dir);
    write_text_file(artifact_path(cfg, "config.ini"), rec.config_text);

    Pipeline p;
    p.cfg = cfg;

    const auto timed = [&rec](const char* stage, auto&& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const auto t1 = std::chrono::steady_clock::now();
        rec.stage_seconds.push_back(
            {stage, std::chrono::duration<double>(t1 - t0).count()});
    };

    timed("target", [&] { prepare_target(p); });
    timed("score", [&] { prepare_score(p); });
    timed("init", [&] { prepare_init(p); });

    double sample_secs = 0.0, eval_secs = 0.0;
    for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
        auto t0 = std::chrono::steady_clock::now();
        const SampleBatch gen = generate(p, cfg.n_generated, rep);
        if (rep == 0) save_batch(artifact_path(cfg, "generated_rep0.bin"), gen);
        auto t1 = std::chrono::steady_clock::now();
        const std::vector<MetricRow> rows = evaluate(p, gen, rep);
        rec.rows.insert(rec.rows.end(), rows.begin(), rows.end());
        auto t2 = std::chrono::steady_clock::now();
        sample_secs += std::chrono::duration<double>(t1 - t0).count();
        eval_secs += std::chrono::duration<double>(t2 - t1).count();
    }
    rec.stage_seconds.push_back({"sample", sample_secs});
    rec.stage_seconds.push_back({"evaluate", eval_secs});

    if (cfg.bound_enabled && cfg.target == TargetKind::gmm) {
        timed("bound", [&] {
            rec.bound = diagnose_bound(p);
            rec.bound_present = true;
        });
    }

    if (p.ht_ready) {
        rec.ht_prior.present = true;
        rec.ht_prior.nu_hat = p.ht_spec.nu_hat;
        rec.ht_prior.hill_k = p.ht_spec.hill_k;
        rec.ht_prior.mu_hat = p.ht_spec.mu_hat;
    }

    const auto add_artifact = [&rec, &cfg](const char* name, const std::string& path) {
        rec.artifacts.emplace_back(name, fnv1a_file_hex(path));
        (void)cfg;
    };
    add_artifact("config.ini", artifact_path(cfg, "config.ini"));
    add_artifact("train.bin", artifact_path(cfg, "train.bin"));
    if (cfg.score == ScoreKind::denoiser)
        add_artifact("denoiser.ckpt", cfg.score_checkpoint.empty()
                                          ? artifact_path(cfg, "denoiser.ckpt")
                                          : cfg.score_checkpoint);
    if (p.flow_ready)
        add_artifact("flow.ckpt", cfg.init_checkpoint.empty()
                                      ? artifact_path(cfg, "flow.ckpt")
                                      : cfg.init_checkpoint);
    if (p.ht_ready)
        add_artifact("htprior.txt", cfg.init_checkpoint.empty()
                                        ? artifact_path(cfg, "htprior.txt")
                                        : cfg.init_checkpoint);
    if (cfg.repetitions > 0)
        add_artifact("generated_rep0.bin", artifact_path(cfg, "generated_rep0.bin"));

    emit_report(rec);
    return rec;
}

std::string report_csv(const RunRecord& rec) {
    std::string out = "# shdiff-report 1\nmetric,repetition,value\n";
    for (const MetricRow& r : rec.rows)
        out += r.metric + "," + std::to_string(r.repetition) + "," +
               fmt_double(r.value) + "\n";
    if (rec.bound_present) {
        if (rec.bound.e_init_available)
            append_estimate_rows(out, "bound.e_init", rec.bound.e_init);
        append_estimate_rows(out, "bound.fisher_delta", rec.bound.fisher_delta);
        append_estimate_rows(out, "bound.fisher_T", rec.bound.fisher_T);
        out += "bound.disc,0," + fmt_double(rec.bound.disc.value) + "\n";
        out += "bound.disc_max_gamma,0," + fmt_double(rec.bound.disc.max_gamma) + "\n";
        out += "bound.disc_gap,0," + fmt_double(rec.bound.disc.gap) + "\n";
        if (rec.bound.e_train_available)
            append_estimate_rows(out, "bound.e_train", rec.bound.e_train);
    }
    return out;
}

std::string report_summary(const RunRecord& rec) {
    const RunConfig& cfg = rec.config;
    std::string out = "shdiff run summary 1\n";
    out += "target: " + to_string(cfg.target) + " dim " + std::to_string(cfg.dim) +
           " seed " + std::to_string(cfg.target_seed) + "\n";
    out += "horizon: sigma_T " + fmt_double(cfg.sigma_T) + "\n";
    out += "schedule: steps " + std::to_string(cfg.steps) + " rho " +
           fmt_double(cfg.rho) + " sigma_min " + fmt_double(cfg.sigma_min) + "\n";
    out += "init: " + to_string(cfg.init) + "\n";
    out += "sampler: " + to_string(cfg.sampler) + "\n";
    out += "score: " + to_string(cfg.score) + "\n";
    out += "repetitions: " + std::to_string(cfg.repetitions) + "\n";

    // Mean +/- sample std per metric, in first-appearance order.
    std::vector<std::string> names;
    for (const MetricRow& r : rec.rows)
        if (std::find(names.begin(), names.end(), r.metric) == names.end())
            names.push_back(r.metric);
    for (const std::string& name : names) {
        std::vector<double> vals;
        for (const MetricRow& r : rec.rows)
            if (r.metric == name) vals.push_back(r.value);
        out += "metric " + name + ": mean " + fmt_double(sample_mean(vals)) +
               " std " + fmt_double(sample_std(vals)) + " n " +
               std::to_string(vals.size()) + "\n";
    }

    if (rec.ht_prior.present) {
        out += "ht-prior: nu_hat " + fmt_double(rec.ht_prior.nu_hat) + " hill_k " +
               std::to_string(rec.ht_prior.hill_k) + " mu_hat";
        for (double v : rec.ht_prior.mu_hat) out += " " + fmt_double(v);
        out += "\n";
    }

    if (rec.bound_present) {
        const auto est_line = [&out](const char* name, const McEstimate& e) {
            out += std::string("bound ") + name + ": " + fmt_double(e.value) +
                   " se " + fmt_double(e.std_err) + " n " + std::to_string(e.n) +
                   "\n";
        };
        if (rec.bound.e_init_available) est_line("e_init", rec.bound.e_init);
        est_line("fisher_delta", rec.bound.fisher_delta);
        est_line("fisher_T", rec.bound.fisher_T);
        out += "bound disc: value " + fmt_double(rec.bound.disc.value) +
               " max_gamma " + fmt_double(rec.bound.disc.max_gamma) + " gap " +
               fmt_double(rec.bound.disc.gap) + "\n";
        if (rec.bound.e_train_available) est_line("e_train", rec.bound.e_train);
    }
    return out;
}

std::string record_json(const RunRecord& rec) {
    nlohmann::json j;
    j["schema"] = 1;
    j["config"] = rec.config_text;
    nlohmann::json arts = nlohmann::json::object();
    for (const auto& [name, hash] : rec.artifacts) arts[name] = hash;
    j["artifacts"] = arts;
    nlohmann::json rows = nlohmann::json::array();
    for (const MetricRow& r : rec.rows)
        rows.push_back({{"metric", r.metric},
                        {"repetition", r.repetition},
                        {"value", r.value}});
    j["rows"] = rows;
    nlohmann::json stages = nlohmann::json::object();
    for (const StageTime& s : rec.stage_seconds) stages[s.stage] = s.seconds;
    j["stage_seconds"] = stages;
    if (rec.bound_present) {
        nlohmann::json b;
        const auto est = [](const McEstimate& e) {
            return nlohmann::json{{"value", e.value},
                                  {"std_err", e.std_err},
                                  {"n", e.n},
                                  {"support_violation", e.support_violation}};
        };
        if (rec.bound.e_init_available) b["e_init"] = est(rec.bound.e_init);
        b["fisher_delta"] = est(rec.bound.fisher_delta);
        b["fisher_T"] = est(rec.bound.fisher_T);
        b["disc"] = {{"value", rec.bound.disc.value},
                     {"max_gamma", rec.bound.disc.max_gamma},
                     {"gap", rec.bound.disc.gap},
                     {"negative_gap", rec.bound.disc.negative_gap}};
        if (rec.bound.e_train_available) b["e_train"] = est(rec.bound.e_train);
        j["bound"] = b;
    }
    if (rec.ht_prior.present) {
        j["ht_prior"] = {{"nu_hat", rec.ht_prior.nu_hat},
                         {"hill_k", rec.ht_prior.hill_k},
                         {"mu_hat", rec.ht_prior.mu_hat}};
    }
    return j.dump(2) + "\n";
}

void emit_report(const RunRecord& rec) {
    const RunConfig& cfg = rec.config;
    ensure_dir(cfg.out_dir);
    write_text_file(artifact_path(cfg, "report.csv"), report_csv(rec));
    write_text_file(artifact_path(cfg, "summary.txt"), report_summary(rec));
    write_text_file(artifact_path(cfg, "record.json"), record_json(rec));
}

}  // namespace shdiff
