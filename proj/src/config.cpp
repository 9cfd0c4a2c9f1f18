#include "shdiff/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>
#include <sstream>
#include <stdexcept>

#include "shdiff/io.hpp"

namespace shdiff {

namespace {

[[noreturn]] void fail(const std::string& msg) {
    throw std::runtime_error("config: " + msg);
}

std::uint64_t parse_u64(const std::string& key, const std::string& val) {
    if (val.empty() || val[0] == '-') fail(key + ": expected a nonnegative integer");
    char* end = nullptr;
    const unsigned long long v = std::strtoull(val.c_str(), &end, 10);
    if (end != val.c_str() + val.size()) fail(key + ": bad integer '" + val + "'");
    return v;
}

double parse_f64(const std::string& key, const std::string& val) {
    char* end = nullptr;
    const double v = std::strtod(val.c_str(), &end);
    if (val.empty() || end != val.c_str() + val.size())
        fail(key + ": bad number '" + val + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& val) {
    if (val == "true") return true;
    if (val == "false") return false;
    fail(key + ": expected true or false, got '" + val + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& val) {
    std::vector<double> out;
    if (val.empty()) return out;
    std::size_t start = 0;
    while (start <= val.size()) {
        const std::size_t comma = val.find(',', start);
        const std::string item =
            val.substr(start, comma == std::string::npos ? comma : comma - start);
        out.push_back(parse_f64(key, item));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

std::string join_list(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += fmt_double(v[i]);
    }
    return out;
}

template <class T>
T enum_from(const std::string& key, const std::string& val,
            std::initializer_list<std::pair<const char*, T>> table) {
    for (const auto& [name, value] : table)
        if (val == name) return value;
    fail(key + ": unknown value '" + val + "'");
}

struct FieldDef {
    const char* section;
    const char* key;
    std::string (*get)(const RunConfig&);
    void (*set)(RunConfig&, const std::string&);
};

// Canonical section and key order. Every field of RunConfig appears exactly
// once; the serializer and parser share this table.
const FieldDef kFields[] = {
    {"run", "seed", [](const RunConfig& c) { return std::to_string(c.seed); },
     [](RunConfig& c, const std::string& v) { c.seed = parse_u64("run.seed", v); }},
    {"run", "out_dir", [](const RunConfig& c) { return c.out_dir; },
     [](RunConfig& c, const std::string& v) { c.out_dir = v; }},
    {"run", "repetitions",
     [](const RunConfig& c) { return std::to_string(c.repetitions); },
     [](RunConfig& c, const std::string& v) {
         c.repetitions = parse_u64("run.repetitions", v);
     }},

    {"target", "kind", [](const RunConfig& c) { return to_string(c.target); },
     [](RunConfig& c, const std::string& v) {
         c.target = enum_from<TargetKind>("target.kind", v,
                                          {{"gmm", TargetKind::gmm},
                                           {"ht", TargetKind::ht}});
     }},
    {"target", "dim", [](const RunConfig& c) { return std::to_string(c.dim); },
     [](RunConfig& c, const std::string& v) { c.dim = parse_u64("target.dim", v); }},
    {"target", "seed",
     [](const RunConfig& c) { return std::to_string(c.target_seed); },
     [](RunConfig& c, const std::string& v) {
         c.target_seed = parse_u64("target.seed", v);
     }},
    {"target", "nu", [](const RunConfig& c) { return fmt_double(c.nu); },
     [](RunConfig& c, const std::string& v) { c.nu = parse_f64("target.nu", v); }},
    {"target", "n_train",
     [](const RunConfig& c) { return std::to_string(c.n_train); },
     [](RunConfig& c, const std::string& v) {
         c.n_train = parse_u64("target.n_train", v);
     }},

    {"horizon", "sigma_T", [](const RunConfig& c) { return fmt_double(c.sigma_T); },
     [](RunConfig& c, const std::string& v) {
         c.sigma_T = parse_f64("horizon.sigma_T", v);
     }},

    {"schedule", "steps", [](const RunConfig& c) { return std::to_string(c.steps); },
     [](RunConfig& c, const std::string& v) {
         c.steps = parse_u64("schedule.steps", v);
     }},
    {"schedule", "rho", [](const RunConfig& c) { return fmt_double(c.rho); },
     [](RunConfig& c, const std::string& v) {
         c.rho = parse_f64("schedule.rho", v);
     }},
    {"schedule", "sigma_min",
     [](const RunConfig& c) { return fmt_double(c.sigma_min); },
     [](RunConfig& c, const std::string& v) {
         c.sigma_min = parse_f64("schedule.sigma_min", v);
     }},

    {"init", "family", [](const RunConfig& c) { return to_string(c.init); },
     [](RunConfig& c, const std::string& v) {
         c.init = enum_from<InitFamily>(
             "init.family", v,
             {{"pi-inf", InitFamily::pi_inf},
              {"empirical", InitFamily::empirical},
              {"flow-fixed", InitFamily::flow_fixed},
              {"flow-dynamical", InitFamily::flow_dynamical},
              {"ht-prior", InitFamily::ht_prior}});
     }},
    {"init", "checkpoint", [](const RunConfig& c) { return c.init_checkpoint; },
     [](RunConfig& c, const std::string& v) { c.init_checkpoint = v; }},
    {"init", "allow_training",
     [](const RunConfig& c) { return std::string(c.allow_training ? "true" : "false"); },
     [](RunConfig& c, const std::string& v) {
         c.allow_training = parse_bool("init.allow_training", v);
     }},
    {"init", "hill_k", [](const RunConfig& c) { return std::to_string(c.hill_k); },
     [](RunConfig& c, const std::string& v) {
         c.hill_k = parse_u64("init.hill_k", v);
     }},

    {"sampler", "kind", [](const RunConfig& c) { return to_string(c.sampler); },
     [](RunConfig& c, const std::string& v) {
         c.sampler = enum_from<SamplerKind>("sampler.kind", v,
                                            {{"heun", SamplerKind::heun},
                                             {"em", SamplerKind::em}});
     }},

    {"score", "kind", [](const RunConfig& c) { return to_string(c.score); },
     [](RunConfig& c, const std::string& v) {
         c.score = enum_from<ScoreKind>("score.kind", v,
                                        {{"analytic", ScoreKind::analytic},
                                         {"denoiser", ScoreKind::denoiser}});
     }},
    {"score", "checkpoint", [](const RunConfig& c) { return c.score_checkpoint; },
     [](RunConfig& c, const std::string& v) { c.score_checkpoint = v; }},
    {"score", "width",
     [](const RunConfig& c) { return std::to_string(c.denoiser_width); },
     [](RunConfig& c, const std::string& v) {
         c.denoiser_width = parse_u64("score.width", v);
     }},
    {"score", "hidden_layers",
     [](const RunConfig& c) { return std::to_string(c.denoiser_hidden); },
     [](RunConfig& c, const std::string& v) {
         c.denoiser_hidden = parse_u64("score.hidden_layers", v);
     }},
    {"score", "batch",
     [](const RunConfig& c) { return std::to_string(c.denoiser_batch); },
     [](RunConfig& c, const std::string& v) {
         c.denoiser_batch = parse_u64("score.batch", v);
     }},
    {"score", "epochs",
     [](const RunConfig& c) { return std::to_string(c.denoiser_epochs); },
     [](RunConfig& c, const std::string& v) {
         c.denoiser_epochs = parse_u64("score.epochs", v);
     }},
    {"score", "lr", [](const RunConfig& c) { return fmt_double(c.denoiser_lr); },
     [](RunConfig& c, const std::string& v) {
         c.denoiser_lr = parse_f64("score.lr", v);
     }},

    {"flow", "layers",
     [](const RunConfig& c) { return std::to_string(c.flow_layers); },
     [](RunConfig& c, const std::string& v) {
         c.flow_layers = parse_u64("flow.layers", v);
     }},
    {"flow", "width", [](const RunConfig& c) { return std::to_string(c.flow_width); },
     [](RunConfig& c, const std::string& v) {
         c.flow_width = parse_u64("flow.width", v);
     }},
    {"flow", "depth", [](const RunConfig& c) { return std::to_string(c.flow_depth); },
     [](RunConfig& c, const std::string& v) {
         c.flow_depth = parse_u64("flow.depth", v);
     }},
    {"flow", "batch", [](const RunConfig& c) { return std::to_string(c.flow_batch); },
     [](RunConfig& c, const std::string& v) {
         c.flow_batch = parse_u64("flow.batch", v);
     }},
    {"flow", "epochs",
     [](const RunConfig& c) { return std::to_string(c.flow_epochs); },
     [](RunConfig& c, const std::string& v) {
         c.flow_epochs = parse_u64("flow.epochs", v);
     }},
    {"flow", "lr", [](const RunConfig& c) { return fmt_double(c.flow_lr); },
     [](RunConfig& c, const std::string& v) {
         c.flow_lr = parse_f64("flow.lr", v);
     }},
    {"flow", "training_factor",
     [](const RunConfig& c) { return fmt_double(c.training_factor); },
     [](RunConfig& c, const std::string& v) {
         c.training_factor = parse_f64("flow.training_factor", v);
     }},

    {"metrics", "n_generated",
     [](const RunConfig& c) { return std::to_string(c.n_generated); },
     [](RunConfig& c, const std::string& v) {
         c.n_generated = parse_u64("metrics.n_generated", v);
     }},
    {"metrics", "n_reference",
     [](const RunConfig& c) { return std::to_string(c.n_reference); },
     [](RunConfig& c, const std::string& v) {
         c.n_reference = parse_u64("metrics.n_reference", v);
     }},
    {"metrics", "slices",
     [](const RunConfig& c) { return std::to_string(c.slices); },
     [](RunConfig& c, const std::string& v) {
         c.slices = parse_u64("metrics.slices", v);
     }},
    {"metrics", "order", [](const RunConfig& c) { return std::to_string(c.order); },
     [](RunConfig& c, const std::string& v) {
         c.order = int(parse_u64("metrics.order", v));
     }},
    {"metrics", "quantiles",
     [](const RunConfig& c) { return join_list(c.quantiles); },
     [](RunConfig& c, const std::string& v) {
         c.quantiles = parse_list("metrics.quantiles", v);
     }},
    {"metrics", "maxsw",
     [](const RunConfig& c) { return std::string(c.maxsw ? "true" : "false"); },
     [](RunConfig& c, const std::string& v) {
         c.maxsw = parse_bool("metrics.maxsw", v);
     }},

    {"bound", "enabled",
     [](const RunConfig& c) { return std::string(c.bound_enabled ? "true" : "false"); },
     [](RunConfig& c, const std::string& v) {
         c.bound_enabled = parse_bool("bound.enabled", v);
     }},
    {"bound", "n_mc", [](const RunConfig& c) { return std::to_string(c.bound_n); },
     [](RunConfig& c, const std::string& v) {
         c.bound_n = parse_u64("bound.n_mc", v);
     }},
};

const FieldDef* find_field(const std::string& section, const std::string& key) {
    for (const auto& f : kFields)
        if (section == f.section && key == f.key) return &f;
    return nullptr;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

std::string to_string(TargetKind k) {
    return k == TargetKind::gmm ? "gmm" : "ht";
}

std::string to_string(InitFamily f) {
    switch (f) {
        case InitFamily::pi_inf: return "pi-inf";
        case InitFamily::empirical: return "empirical";
        case InitFamily::flow_fixed: return "flow-fixed";
        case InitFamily::flow_dynamical: return "flow-dynamical";
        case InitFamily::ht_prior: return "ht-prior";
    }
    fail("bad init family");
}

std::string to_string(SamplerKind k) {
    return k == SamplerKind::heun ? "heun" : "em";
}

std::string to_string(ScoreKind k) {
    return k == ScoreKind::analytic ? "analytic" : "denoiser";
}

void RunConfig::validate() const {
    if (out_dir.empty()) fail("run.out_dir must not be empty");
    if (dim < 2) fail("target.dim must be at least 2");
    if (target == TargetKind::ht && !(nu > 0.0)) fail("target.nu must be positive");
    if (n_train < 2) fail("target.n_train must be at least 2");
    if (!(sigma_T > 0.0)) fail("horizon.sigma_T must be positive");
    if (steps < 1) fail("schedule.steps must be at least 1");
    if (!(rho > 0.0)) fail("schedule.rho must be positive");
    if (!(sigma_min > 0.0) || sigma_min >= sigma_T)
        fail("schedule.sigma_min must lie in (0, sigma_T)");
    if (hill_k < 2) fail("init.hill_k must be at least 2");
    if (target == TargetKind::ht && score == ScoreKind::analytic)
        fail("score.kind = analytic requires a gmm target");
    if (init == InitFamily::ht_prior && target != TargetKind::ht)
        fail("init.family = ht-prior requires an ht target");
    if (score == ScoreKind::denoiser) {
        if (denoiser_width == 0 || denoiser_batch == 0 || denoiser_epochs == 0 ||
            !(denoiser_lr > 0.0))
            fail("score training sizes must be positive");
    }
    if (init == InitFamily::flow_fixed || init == InitFamily::flow_dynamical) {
        if (flow_layers < 2 || flow_width == 0 || flow_batch == 0 ||
            flow_epochs == 0 || !(flow_lr > 0.0) || !(training_factor > 0.0))
            fail("flow training sizes must be positive (layers >= 2)");
    }
    if (n_generated == 0 || n_reference == 0)
        fail("metrics sample sizes must be positive");
    if (slices == 0) fail("metrics.slices must be positive");
    if (order != 1 && order != 2) fail("metrics.order must be 1 or 2");
    for (double q : quantiles)
        if (!(q > 0.0) || !(q < 1.0)) fail("metrics.quantiles must lie in (0, 1)");
    if (bound_enabled && bound_n < 2) fail("bound.n_mc must be at least 2");
}

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::set<std::string> seen;
    std::string section;
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                fail("line " + std::to_string(lineno) + ": malformed section header");
            section = t.substr(1, t.size() - 2);
            bool known = false;
            for (const auto& f : kFields)
                if (section == f.section) known = true;
            if (!known) fail("unknown section [" + section + "]");
            continue;
        }
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            fail("line " + std::to_string(lineno) + ": expected key = value");
        if (section.empty())
            fail("line " + std::to_string(lineno) + ": key outside any section");
        const std::string key = trim(t.substr(0, eq));
        const std::string val = trim(t.substr(eq + 1));
        const FieldDef* field = find_field(section, key);
        if (!field) fail("unknown key " + section + "." + key);
        const std::string full = section + "." + key;
        if (!seen.insert(full).second) fail("duplicate key " + full);
        field->set(cfg, val);
    }
    if (!seen.count("run.seed")) fail("run.seed is mandatory");
    if (!seen.count("target.seed")) fail("target.seed is mandatory");
    cfg.validate();
    return cfg;
}

std::string canonical_config(const RunConfig& cfg) {
    std::string out;
    std::string section;
    for (const auto& f : kFields) {
        if (section != f.section) {
            if (!section.empty()) out += "\n";
            section = f.section;
            out += "[" + section + "]\n";
        }
        const std::string val = f.get(cfg);
        out += f.key;
        out += val.empty() ? " =" : " = " + val;
        out += "\n";
    }
    return out;
}

void apply_override(RunConfig& cfg, const std::string& spec) {
    const std::size_t eq = spec.find('=');
    if (eq == std::string::npos) fail("override needs section.key=value: " + spec);
    const std::string path = trim(spec.substr(0, eq));
    const std::string val = trim(spec.substr(eq + 1));
    const std::size_t dot = path.find('.');
    if (dot == std::string::npos)
        fail("override needs section.key=value: " + spec);
    const FieldDef* field = find_field(path.substr(0, dot), path.substr(dot + 1));
    if (!field) fail("unknown key " + path);
    field->set(cfg, val);
}

}  // namespace shdiff
