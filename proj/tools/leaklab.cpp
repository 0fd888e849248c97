// leaklab command line: experiments, manifest lint, dataset synthesis, audit checks.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "leaklab/experiment.hpp"
#include "leaklab/lint.hpp"
#include "leaklab/pipeline.hpp"
#include "leaklab/synth.hpp"

namespace fs = std::filesystem;
using namespace leaklab;

namespace {

enum Exit { kOk = 0, kViolations = 1, kBadInput = 2, kRuntime = 3 };

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::optional<Seed> env_seed() {
    const char* s = std::getenv("LEAKLAB_SEED");
    if (!s || !*s) return std::nullopt;
    char* end = nullptr;
    const auto v = std::strtoull(s, &end, 10);
    if (*end) throw ConfigError(std::string("LEAKLAB_SEED is not an unsigned integer: '") + s + "'");
    return v;
}

struct ExperimentArgs {
    std::string name;
    std::string config;
    std::optional<Seed> seed;
    std::optional<int> repeats;
    std::optional<int> threads;
    std::string out = ".";
    bool print_config = false;
    bool quiet = false;
};

int cmd_experiment(const ExperimentArgs& a) {
    const ExperimentKind kind = experiment_kind_from_string(a.name);
    ExperimentConfig cfg = default_config(kind);
    bool file_seed = false;
    if (!a.config.empty()) {
        const std::string text = slurp(a.config);
        cfg = config_from_json(text, kind);
        if (cfg.kind != kind)
            throw ConfigError("config '" + a.config + "' is for " + to_string(cfg.kind) + ", not " + a.name);
        file_seed = nlohmann::json::parse(text).contains("seed");
    }
    // flag > config file > LEAKLAB_SEED > built-in default
    if (a.seed) cfg.seed = *a.seed;
    else if (!file_seed)
        if (auto s = env_seed()) cfg.seed = *s;
    if (a.repeats) cfg.repeats = *a.repeats;
    if (a.threads) cfg.threads = *a.threads;
    cfg.validate();
    if (a.print_config) {
        std::cout << config_to_json(cfg);
        return kOk;
    }

    const TrendSeries t = run_experiment(cfg);
    const fs::path dir(a.out);
    write_file_atomic((dir / (a.name + "_raw.csv")).string(), raw_csv(t));
    write_file_atomic((dir / (a.name + "_summary.csv")).string(), summary_csv(t));
    write_file_atomic((dir / (a.name + "_audit.jsonl")).string(), audit_jsonl(t));
    if (!a.quiet) std::cout << summary_table(t);
    return kOk;
}

int cmd_lint(const std::string& path, const std::string& format) {
    const lint::Manifest m = lint::load_manifest(path);
    const auto findings = lint::lint(m);
    std::cout << (format == "jsonl" ? lint::findings_jsonl(findings) : lint::findings_table(findings));
    return lint::has_violation(findings) ? kViolations : kOk;
}

struct SynthArgs {
    std::string generator;
    std::string config;
    std::string out;
    std::optional<Seed> seed;
};

int cmd_synth(const SynthArgs& a) {
    nlohmann::json j = nlohmann::json::object();
    if (!a.config.empty()) {
        try {
            j = nlohmann::json::parse(slurp(a.config));
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(std::string("synth config: ") + e.what());
        }
        if (!j.is_object()) throw ConfigError("synth config: expected a JSON object");
    }
    std::set<std::string> known{"n", "d", "n_informative", "separation", "seed"};
    auto get = [&](const char* key, auto fallback) {
        known.insert(key);
        if (!j.contains(key)) return fallback;
        try {
            return j.at(key).get<decltype(fallback)>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError(std::string("synth config: field '") + key + "' has the wrong type");
        }
    };
    BlobConfig blob;
    blob.n = get("n", blob.n);
    blob.d = get("d", blob.d);
    blob.n_informative = get("n_informative", blob.n_informative);
    blob.separation = get("separation", blob.separation);
    blob.seed = get("seed", blob.seed);
    if (a.seed) blob.seed = *a.seed;
    else if (!j.contains("seed"))
        if (auto s = env_seed()) blob.seed = *s;

    Dataset ds;
    if (a.generator == "blobs") {
        ds = gen_blobs(blob);
    } else if (a.generator == "multisource") {
        const int sources = get("n_sources", 3);
        ds = gen_multisource(blob, sources, get("source_shift", 1.0));
    } else if (a.generator == "windows") {
        const WindowPair w = gen_drifting_windows(blob, get("overlap", 0.5), get("drift_phase", std::numbers::pi / 2));
        // The whole drifting sequence; each window is a time_index range.
        IndexList tail;
        for (Index i = w.shared; i < w.eval.rows(); ++i) tail.push_back(i);
        ds = concat(w.train, w.eval.subset(tail));
    } else if (a.generator == "frankenstein") {
        FrankensteinPlan plan;
        plan.stages = get("stages", plan.stages);
        plan.fresh_per_stage = get("fresh_per_stage", plan.fresh_per_stage);
        plan.dup_fraction = get("dup_fraction", plan.dup_fraction);
        plan.separation_decay = get("separation_decay", plan.separation_decay);
        plan.seed = blob.seed;
        ds = compose_frankenstein(plan, blob).back();
    } else if (a.generator == "spurious") {
        const double delta = get("delta", 5.0);
        ds = inject_spurious_feature(gen_blobs(blob), delta, get("leaky", true), derive_seed(blob.seed, {1}));
    } else {
        throw ConfigError("unknown generator '" + a.generator + "' (blobs, multisource, windows, frankenstein, spurious)");
    }
    for (const auto& [key, val] : j.items())
        if (!known.count(key)) throw ConfigError("synth config: unknown field '" + key + "' for " + a.generator);
    if (a.out.empty() || a.out == "-") write_csv(std::cout, ds);
    else save_csv(a.out, ds);
    return kOk;
}

int cmd_audit_check(const std::string& path) {
    auto logs = parse_audit_jsonl(slurp(path));
    std::size_t bad_clean = 0, mismatched = 0, leaky_flagged = 0;
    for (auto& log : logs) {
        std::vector<bool> stored;
        for (const auto& r : log.records) stored.push_back(r.violation);
        const auto v = audit_check(log);
        for (std::size_t i = 0; i < stored.size(); ++i)
            if (stored[i] != log.records[i].violation) {
                ++mismatched;
                std::cout << log.run << ": step " << log.records[i].step << " (" << log.records[i].kind
                          << ") stored violation=" << std::boolalpha << stored[i] << ", recomputed "
                          << log.records[i].violation << '\n';
            }
        const bool clean = log.scope.rfind("clean", 0) == 0;
        if (!v.empty() && clean) {
            ++bad_clean;
            for (const auto& x : v)
                std::cout << log.run << ": step " << x.step << " (" << x.kind << ") " << x.reason << ", "
                          << x.offending.size() << " id(s)\n";
        }
        if (!v.empty() && !clean) ++leaky_flagged;
    }
    std::cout << logs.size() << " run(s); " << leaky_flagged << " leaky-scope run(s) with violations; " << bad_clean
              << " clean-scope run(s) with violations; " << mismatched << " stored flag(s) disagree\n";
    return bad_clean || mismatched ? kViolations : kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"leaklab: data leakage laboratory"};
    app.require_subcommand(1);

    auto* exp = app.add_subcommand("experiment", "run a leakage experiment");
    exp->require_subcommand(1);
    auto* run = exp->add_subcommand("run", "sweep one leakage parameter, leaky vs clean");
    ExperimentArgs ea;
    run->add_option("name", ea.name, "experiment name")->required();
    run->add_option("--config", ea.config, "JSON config file");
    run->add_option("--seed", ea.seed, "seed (wins over the config file and LEAKLAB_SEED)");
    run->add_option("--repeats", ea.repeats, "override repeats");
    run->add_option("--threads", ea.threads, "worker threads, 0 = all cores");
    run->add_option("--out", ea.out, "output directory");
    run->add_flag("--print-config", ea.print_config, "print the resolved config and exit");
    run->add_flag("-q,--quiet", ea.quiet, "no summary table");

    auto* lnt = app.add_subcommand("lint", "check a pipeline manifest");
    std::string manifest, format = "table";
    lnt->add_option("path", manifest, "manifest JSON")->required();
    lnt->add_option("--format", format, "table or jsonl")->check(CLI::IsMember({"table", "jsonl"}));

    auto* syn = app.add_subcommand("synth", "generate a dataset as CSV");
    SynthArgs sa;
    syn->add_option("generator", sa.generator, "blobs | multisource | windows | frankenstein | spurious")->required();
    syn->add_option("--config", sa.config, "JSON generator config");
    syn->add_option("--out", sa.out, "output CSV (default stdout)");
    syn->add_option("--seed", sa.seed, "seed override");

    auto* aud = app.add_subcommand("audit", "inspect audit logs");
    aud->require_subcommand(1);
    auto* chk = aud->add_subcommand("check", "recompute violations of an audit JSONL file");
    std::string audit_path;
    chk->add_option("jsonl", audit_path, "audit log")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kBadInput;
    }

    try {
        if (*run) return cmd_experiment(ea);
        if (*lnt) return cmd_lint(manifest, format);
        if (*syn) return cmd_synth(sa);
        if (*chk) return cmd_audit_check(audit_path);
    } catch (const lint::ManifestError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kBadInput;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kBadInput;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kBadInput;
    } catch (const DivergenceError& e) {
        std::cerr << "diverged: " << e.what() << '\n';
        return kRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
    return kOk;
}
