#include "leaklab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "json.hpp"
#include "leaklab/split.hpp"

namespace leaklab {

using nlohmann::json;

namespace {

constexpr ExperimentKind kKinds[] = {ExperimentKind::frankenstein,        ExperimentKind::label_delta,
                                     ExperimentKind::smote_overlap,       ExperimentKind::normalization_shift,
                                     ExperimentKind::set_intersection,    ExperimentKind::window_overlap,
                                     ExperimentKind::distribution_shift};

std::vector<double> grid(double lo, double hi, double step) {
    std::vector<double> v;
    const auto n = static_cast<int>(std::llround((hi - lo) / step));
    for (int i = 0; i <= n; ++i) v.push_back(std::round((lo + i * step) * 1e9) / 1e9);
    return v;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace

const char* to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::frankenstein: return "frankenstein";
        case ExperimentKind::label_delta: return "label_delta";
        case ExperimentKind::smote_overlap: return "smote_overlap";
        case ExperimentKind::normalization_shift: return "normalization_shift";
        case ExperimentKind::set_intersection: return "set_intersection";
        case ExperimentKind::window_overlap: return "window_overlap";
        case ExperimentKind::distribution_shift: return "distribution_shift";
    }
    return "?";
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
    for (auto k : kKinds)
        if (name == to_string(k)) return k;
    std::string known;
    for (auto k : kKinds) known += std::string(known.empty() ? "" : ", ") + to_string(k);
    throw ConfigError("unknown experiment '" + name + "' (known: " + known + ")");
}

const std::vector<ExperimentKind>& all_experiment_kinds() {
    static const std::vector<ExperimentKind> all(std::begin(kKinds), std::end(kKinds));
    return all;
}

void ExperimentConfig::validate() const {
    if (sweep.empty()) throw ConfigError("experiment: sweep must not be empty");
    for (std::size_t i = 0; i < sweep.size(); ++i) {
        if (!std::isfinite(sweep[i])) throw ConfigError("experiment: sweep values must be finite");
        if (i && !(sweep[i] > sweep[i - 1])) throw ConfigError("experiment: sweep must be strictly increasing");
    }
    if (repeats < 1) throw ConfigError("experiment: repeats must be >= 1");
    if (folds < 2) throw ConfigError("experiment: folds must be >= 2");
    if (threads < 0) throw ConfigError("experiment: threads must be >= 0");
    if (!(eval_fraction > 0.0 && eval_fraction < 1.0)) throw ConfigError("experiment: eval_fraction must lie in (0, 1)");
    blob.validate();
    train.validate();

    const double lo = sweep.front(), hi = sweep.back();
    auto range = [&](bool ok, const char* what) {
        if (!ok) throw ConfigError(std::string(to_string(kind)) + ": sweep values must be " + what);
    };
    switch (kind) {
        case ExperimentKind::frankenstein:
            plan.validate();
            for (double s : sweep)
                range(s == std::floor(s) && s >= 1 && s <= plan.stages - 1, "integer stages in [1, stages - 1]");
            break;
        case ExperimentKind::label_delta: range(lo >= 0, "deltas >= 0"); break;
        case ExperimentKind::smote_overlap:
            range(lo >= 0 && hi <= 1, "overlap ratios in [0, 1]");
            if (smote_k < 1) throw ConfigError("smote_overlap: smote_k must be >= 1");
            if (!(minority_fraction > 0.0 && minority_fraction <= 0.5))
                throw ConfigError("smote_overlap: minority_fraction must lie in (0, 0.5]");
            break;
        case ExperimentKind::normalization_shift: break;
        case ExperimentKind::set_intersection: range(lo >= 0 && hi <= 1, "contamination fractions in [0, 1]"); break;
        case ExperimentKind::window_overlap: range(lo >= 0 && hi < 1, "overlaps in [0, 1)"); break;
        case ExperimentKind::distribution_shift:
            range(lo >= 0, "source shifts >= 0");
            if (n_sources < 2) throw ConfigError("distribution_shift: n_sources must be >= 2");
            break;
    }
}

ExperimentConfig default_config(ExperimentKind kind) {
    ExperimentConfig c;
    c.kind = kind;
    c.train.learning_rate = 0.2;
    switch (kind) {
        case ExperimentKind::frankenstein:
            c.sweep = {1, 2, 3, 4};
            c.plan.stages = 5;
            c.plan.fresh_per_stage = 250;
            c.plan.dup_fraction = 0.5;
            c.plan.separation_decay = 0.85;
            break;
        case ExperimentKind::label_delta: c.sweep = {0, 5, 10, 15, 20, 25}; break;
        case ExperimentKind::smote_overlap:
            c.sweep = {0, 0.2, 0.4, 0.5, 0.6, 0.8, 1.0};
            c.blob.separation = 0.7;
            c.train.learning_rate = 0.5;
            break;
        case ExperimentKind::normalization_shift: c.sweep = grid(0, 5, 0.5); break;
        case ExperimentKind::set_intersection: c.sweep = grid(0, 1, 0.1); break;
        case ExperimentKind::window_overlap: c.sweep = grid(0, 0.9, 0.1); break;
        case ExperimentKind::distribution_shift:
            c.sweep = {0, 1, 2, 3, 4, 5};
            c.eval_fraction = 0.5;
            break;
    }
    return c;
}

// ---------------------------------------------------------------------------
// JSON config

namespace {

template <typename T>
void take(const json& obj, const char* key, T& into, std::set<std::string>& used) {
    if (!obj.contains(key)) return;
    used.insert(key);
    try {
        into = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config: field '") + key + "' has the wrong type");
    }
}

void reject_unknown(const json& obj, const std::set<std::string>& used, const std::string& where) {
    for (const auto& [key, val] : obj.items())
        if (!used.count(key)) throw ConfigError("config: unknown field '" + where + key + "'");
}

const json& object_at(const json& root, const char* key) {
    const json& o = root.at(key);
    if (!o.is_object()) throw ConfigError(std::string("config: '") + key + "' must be an object");
    return o;
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text, ExperimentKind fallback) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("config: malformed JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config: expected a JSON object");
    ExperimentKind kind = fallback;
    if (root.contains("kind")) {
        if (!root.at("kind").is_string()) throw ConfigError("config: 'kind' must be a string");
        kind = experiment_kind_from_string(root.at("kind").get<std::string>());
    }
    ExperimentConfig c = default_config(kind);
    std::set<std::string> used{"kind"};
    take(root, "sweep", c.sweep, used);
    take(root, "repeats", c.repeats, used);
    take(root, "folds", c.folds, used);
    take(root, "seed", c.seed, used);
    take(root, "threads", c.threads, used);
    take(root, "eval_fraction", c.eval_fraction, used);
    take(root, "smote_k", c.smote_k, used);
    take(root, "minority_fraction", c.minority_fraction, used);
    take(root, "n_sources", c.n_sources, used);
    take(root, "drift_phase", c.drift_phase, used);
    if (root.contains("blob")) {
        used.insert("blob");
        const json& b = object_at(root, "blob");
        std::set<std::string> u;
        take(b, "n", c.blob.n, u);
        take(b, "d", c.blob.d, u);
        take(b, "n_informative", c.blob.n_informative, u);
        take(b, "separation", c.blob.separation, u);
        reject_unknown(b, u, "blob.");
    }
    if (root.contains("train")) {
        used.insert("train");
        const json& t = object_at(root, "train");
        std::set<std::string> u;
        take(t, "learning_rate", c.train.learning_rate, u);
        take(t, "max_epochs", c.train.max_epochs, u);
        take(t, "hidden1", c.train.hidden1, u);
        take(t, "hidden2", c.train.hidden2, u);
        if (t.contains("patience") && !t.at("patience").is_null()) {
            int p = 0;
            take(t, "patience", p, u);
            c.train.patience = p;
        }
        u.insert("patience");
        reject_unknown(t, u, "train.");
    }
    if (root.contains("frankenstein")) {
        used.insert("frankenstein");
        const json& f = object_at(root, "frankenstein");
        std::set<std::string> u;
        take(f, "stages", c.plan.stages, u);
        take(f, "fresh_per_stage", c.plan.fresh_per_stage, u);
        take(f, "dup_fraction", c.plan.dup_fraction, u);
        take(f, "separation_decay", c.plan.separation_decay, u);
        reject_unknown(f, u, "frankenstein.");
    }
    reject_unknown(root, used, "");
    c.validate();
    return c;
}

std::string config_to_json(const ExperimentConfig& c) {
    json j;
    j["kind"] = to_string(c.kind);
    j["sweep"] = c.sweep;
    j["repeats"] = c.repeats;
    j["folds"] = c.folds;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["eval_fraction"] = c.eval_fraction;
    j["smote_k"] = c.smote_k;
    j["minority_fraction"] = c.minority_fraction;
    j["n_sources"] = c.n_sources;
    j["drift_phase"] = c.drift_phase;
    j["blob"] = {{"n", c.blob.n}, {"d", c.blob.d}, {"n_informative", c.blob.n_informative},
                 {"separation", c.blob.separation}};
    j["train"] = {{"learning_rate", c.train.learning_rate}, {"max_epochs", c.train.max_epochs},
                  {"hidden1", c.train.hidden1}, {"hidden2", c.train.hidden2},
                  {"patience", c.train.patience ? json(*c.train.patience) : json(nullptr)}};
    j["frankenstein"] = {{"stages", c.plan.stages}, {"fresh_per_stage", c.plan.fresh_per_stage},
                         {"dup_fraction", c.plan.dup_fraction}, {"separation_decay", c.plan.separation_decay}};
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

Aggregate aggregate(const std::vector<double>& values) {
    if (values.empty()) throw InsufficientDataError("aggregate: no values");
    const auto n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / n;
    if (values.size() == 1) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (n - 1.0))};
}

const TrendPoint& TrendSeries::at(double param, const std::string& condition) const {
    for (const auto& p : points)
        if (p.param == param && p.condition == condition) return p;
    throw IndexError("trend: no point at " + fmt(param) + "/" + condition);
}

std::vector<double> TrendSeries::means(const std::string& condition) const {
    std::vector<double> out;
    for (const auto& p : points)
        if (p.condition == condition) out.push_back(p.mean);
    return out;
}

std::vector<double> TrendSeries::stds(const std::string& condition) const {
    std::vector<double> out;
    for (const auto& p : points)
        if (p.condition == condition) out.push_back(p.std);
    return out;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
    std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                      : std::max<std::size_t>(1, std::thread::hardware_concurrency());
    workers = std::min(workers, n);
    std::vector<std::exception_ptr> errors(n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
                break;
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::atomic<bool> failed{false};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i; !failed && (i = next++) < n;) {
                    try {
                        body(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                        failed = true;
                    }
                }
            });
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// Runners

namespace {

struct Outcome {
    double accuracy = 0.0;
    AuditLog audit;
};

// One execution. A clean job may stand for several sweep values at once.
struct Job {
    std::vector<double> params;
    std::string condition;
    int repeat = 0;
    int fold = 0;
    std::function<Outcome()> run;
};

Seed data_seed(const ExperimentConfig& c, int r) { return derive_seed(c.seed, {static_cast<std::uint64_t>(r), 0}); }
Seed exec_seed(const ExperimentConfig& c, int r) { return derive_seed(c.seed, {static_cast<std::uint64_t>(r), 1}); }
Seed aux_seed(const ExperimentConfig& c, int r) { return derive_seed(c.seed, {static_cast<std::uint64_t>(r), 2}); }

BlobConfig blob_for(const ExperimentConfig& c, int r) {
    BlobConfig b = c.blob;
    b.seed = data_seed(c, r);
    return b;
}

ScopePolicy clean_policy() { return {}; }
ScopePolicy leaky_policy(double leak_fraction = 1.0) {
    ScopePolicy p;
    p.mode = ScopeMode::leaky;
    p.leak_fraction = leak_fraction;
    return p;
}

// Clean runs must be spotless; a leaky run must leave a trace exactly when the
// leak parameter put something to leak.
void enforce(AuditLog& log, bool leaky, bool expect_leak) {
    const auto v = audit_check(log);
    if (!leaky && !v.empty())
        throw AuditInvariantError("clean run '" + log.run + "' has " + std::to_string(v.size()) +
                                  " audit violation(s), first at step " + std::to_string(v.front().step) + " (" +
                                  v.front().kind + ": " + v.front().reason + ")");
    if (leaky && expect_leak && v.empty())
        throw AuditInvariantError("leaky run '" + log.run + "' left no audit violation");
    if (leaky && !expect_leak && !v.empty())
        throw AuditInvariantError("leaky run '" + log.run + "' flagged a leak with nothing to leak");
}

Outcome finish(ExecutionResult res, const std::string& run, bool leaky, bool expect_leak) {
    res.audit.run = run;
    // The condition, not the fit policy, decides how the run is judged: leaky
    // splits and label-built columns run under a clean fit scope.
    res.audit.scope = std::string(leaky ? "leaky" : "clean") + " (" + res.audit.scope + ")";
    enforce(res.audit, leaky, expect_leak);
    return {res.accuracy, std::move(res.audit)};
}

std::string run_name(const ExperimentConfig& c, double param, const std::string& cond, int r, int f) {
    return std::string(to_string(c.kind)) + "/" + fmt(param) + "/" + cond + "/r" + std::to_string(r) + "/f" +
           std::to_string(f);
}

TrainStep train_step(const ExperimentConfig& c) { return TrainStep{c.train, false, 0.2}; }

TrendSeries collect(const ExperimentConfig& c, std::vector<Job>& jobs) {
    std::vector<Outcome> out(jobs.size());
    parallel_for(jobs.size(), c.threads, [&](std::size_t i) { out[i] = jobs[i].run(); });

    TrendSeries t;
    t.kind = c.kind;
    std::map<std::pair<std::size_t, int>, std::vector<RawAccuracy>> by_point;  // (sweep index, leaky first)
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        for (double p : jobs[i].params) {
            const auto at = static_cast<std::size_t>(std::find(c.sweep.begin(), c.sweep.end(), p) - c.sweep.begin());
            by_point[{at, jobs[i].condition == "leaky" ? 0 : 1}].push_back(
                {p, jobs[i].condition, jobs[i].repeat, jobs[i].fold, out[i].accuracy});
        }
        t.audits.push_back(std::move(out[i].audit));
    }
    for (auto& [key, rows] : by_point) {
        std::sort(rows.begin(), rows.end(), [](const RawAccuracy& a, const RawAccuracy& b) {
            return std::tie(a.repeat, a.fold) < std::tie(b.repeat, b.fold);
        });
        TrendPoint pt;
        pt.param = rows.front().param;
        pt.condition = rows.front().condition;
        for (const auto& r : rows) pt.raw.push_back(r.accuracy);
        const Aggregate a = aggregate(pt.raw);
        pt.mean = a.mean;
        pt.std = a.std;
        t.points.push_back(std::move(pt));
        t.raw.insert(t.raw.end(), rows.begin(), rows.end());
    }
    return t;
}

bool shares_provenance(const Dataset& ds, const SplitPair& sp) {
    return !set_intersection(ds.provenance(sp.train_indices), ds.provenance(sp.eval_indices)).empty();
}

}  // namespace

TrendSeries run_frankenstein(const ExperimentConfig& c) {
    if (c.kind != ExperimentKind::frankenstein) throw ConfigError("run_frankenstein: config is for another experiment");
    c.validate();
    std::vector<Job> jobs;
    for (double stage : c.sweep)
        for (const char* cond : {"leaky", "clean"})
            for (int r = 0; r < c.repeats; ++r)
                for (int f = 0; f < c.folds; ++f) {
                    const bool leaky = std::string(cond) == "leaky";
                    jobs.push_back({{stage}, cond, r, f, [&c, stage, leaky, r, f] {
                                        FrankensteinPlan plan = c.plan;
                                        plan.seed = data_seed(c, r);
                                        const Dataset ds = compose_frankenstein(plan, c.blob)[static_cast<std::size_t>(stage)];
                                        SplitStep split;
                                        split.strategy = SplitStep::Strategy::kfold;
                                        split.folds = c.folds;
                                        split.fold = f;
                                        PipelinePlan p{{split, train_step(c), EvaluateStep{!leaky}}, false};
                                        auto res = execute(p, ds, leaky ? leaky_policy() : clean_policy(), exec_seed(c, r));
                                        const bool expect = leaky && shares_provenance(ds, res.split);
                                        return finish(std::move(res), run_name(c, stage, leaky ? "leaky" : "clean", r, f),
                                                      leaky, expect);
                                    }});
                }
    return collect(c, jobs);
}

TrendSeries run_label_delta(const ExperimentConfig& c) {
    if (c.kind != ExperimentKind::label_delta) throw ConfigError("run_label_delta: config is for another experiment");
    c.validate();
    std::vector<Job> jobs;
    for (double delta : c.sweep)
        for (const char* cond : {"leaky", "clean"})
            for (int r = 0; r < c.repeats; ++r) {
                const bool leaky = std::string(cond) == "leaky";
                jobs.push_back({{delta}, cond, r, 0, [&c, delta, leaky, r] {
                                    const Dataset base = gen_blobs(blob_for(c, r));
                                    const Dataset ds = inject_spurious_feature(base, delta, leaky, aux_seed(c, r));
                                    SplitStep split;
                                    split.eval_fraction = c.eval_fraction;
                                    PipelinePlan p{{split, PreprocessStep{}, train_step(c), EvaluateStep{}}, false};
                                    // The spurious column is a fitted scope too: when it copies the
                                    // label, it was built from every row's label, eval rows included.
                                    auto res = execute(p, ds, clean_policy(), exec_seed(c, r));
                                    const bool label_built = leaky && delta > 0;
                                    if (label_built) {
                                        AuditRecord rec;
                                        rec.step = -1;
                                        rec.kind = "inject_spurious";
                                        rec.role = AuditRole::fit;
                                        rec.saw_provenance = ds.provenance();
                                        res.audit.records.insert(res.audit.records.begin(), std::move(rec));
                                    }
                                    return finish(std::move(res), run_name(c, delta, leaky ? "leaky" : "clean", r, 0),
                                                  leaky, label_built);
                                }});
            }
    return collect(c, jobs);
}

namespace {

// Blobs with class 1 thinned to roughly minority_fraction of the rows.
Dataset imbalanced_blobs(const ExperimentConfig& c, int r) {
    const Dataset full = gen_blobs(blob_for(c, r));
    Rng rng = make_rng(aux_seed(c, r));
    std::bernoulli_distribution keep(c.minority_fraction / (1.0 - c.minority_fraction));
    IndexList rows;
    for (Index i = 0; i < full.rows(); ++i)
        if (full.labels()(i) == 0 || keep(rng)) rows.push_back(i);
    return full.subset(rows);
}

}  // namespace

TrendSeries run_smote_overlap(const ExperimentConfig& c) {
    if (c.kind != ExperimentKind::smote_overlap) throw ConfigError("run_smote_overlap: config is for another experiment");
    c.validate();
    auto one = [&c](double ratio, bool leaky, int r, int f, std::string name) {
        const Dataset ds = imbalanced_blobs(c, r);
        SplitStep split;
        split.strategy = SplitStep::Strategy::kfold;
        split.folds = c.folds;
        split.fold = f;
        SynthesizeStep smote;
        smote.k = c.smote_k;
        PipelinePlan p{{split, smote, train_step(c), EvaluateStep{}}, false};
        auto res = execute(p, ds, leaky ? leaky_policy(ratio) : clean_policy(), exec_seed(c, r));
        bool expect = false;
        if (leaky) {
            Index count[2] = {0, 0};
            for (Index i : res.split.train_indices) ++count[ds.labels()(i)];
            const int minority = count[1] <= count[0] ? 1 : 0;
            const auto& ev = res.split.eval_indices;
            const auto visible = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(ev.size())));
            for (std::size_t q = 0; q < visible && q < ev.size(); ++q)
                if (ds.labels()(ev[q]) == minority) expect = true;
        }
        return finish(std::move(res), name, leaky, expect);
    };
    std::vector<Job> jobs;
    for (double ratio : c.sweep)
        for (int r = 0; r < c.repeats; ++r)
            for (int f = 0; f < c.folds; ++f)
                jobs.push_back({{ratio}, "leaky", r, f, [=] { return one(ratio, true, r, f, run_name(c, ratio, "leaky", r, f)); }});
    // The clean baseline does not depend on the ratio.
    for (int r = 0; r < c.repeats; ++r)
        for (int f = 0; f < c.folds; ++f)
            jobs.push_back({c.sweep, "clean", r, f, [=] { return one(0.0, false, r, f, run_name(c, 0.0, "clean", r, f)); }});
    return collect(c, jobs);
}

TrendSeries run_normalization_shift(const ExperimentConfig& c) {
    if (c.kind != ExperimentKind::normalization_shift)
        throw ConfigError("run_normalization_shift: config is for another experiment");
    c.validate();
    std::vector<Job> jobs;
    for (double shift : c.sweep)
        for (const char* cond : {"leaky", "clean"})
            for (int r = 0; r < c.repeats; ++r) {
                const bool leaky = std::string(cond) == "leaky";
                jobs.push_back({{shift}, cond, r, 0, [&c, shift, leaky, r] {
                                    const Dataset base = gen_blobs(blob_for(c, r));
                                    SplitStep split;
                                    split.strategy = SplitStep::Strategy::given;
                                    split.given = holdout(base, c.eval_fraction, true, aux_seed(c, r));
                                    const Dataset ds = apply_shift(base, shift, split.given.eval_indices);
                                    PipelinePlan p{{split, PreprocessStep{}, train_step(c), EvaluateStep{}}, false};
                                    auto res = execute(p, ds, leaky ? leaky_policy() : clean_policy(), exec_seed(c, r));
                                    return finish(std::move(res), run_name(c, shift, leaky ? "leaky" : "clean", r, 0),
                                                  leaky, leaky);
                                }});
            }
    return collect(c, jobs);
}

TrendSeries run_set_intersection(const ExperimentConfig& c) {
    if (c.kind != ExperimentKind::set_intersection)
        throw ConfigError("run_set_intersection: config is for another experiment");
    c.validate();
    auto one = [&c](double fraction, bool leaky, int r, int f, std::string name) {
        const Dataset ds = gen_blobs(blob_for(c, r));
        SplitPair sp = kfold_stratified(ds, c.folds, aux_seed(c, r)).pair(f);
        const IndexList picks = contamination_rows(static_cast<Index>(sp.eval_indices.size()), fraction,
                                                   derive_seed(aux_seed(c, r), {static_cast<std::uint64_t>(f)}));
        for (Index q : picks) sp.train_indices.push_back(sp.eval_indices[static_cast<std::size_t>(q)]);
        sp.leaky_strategy = !picks.empty();
        SplitStep split;
        split.strategy = SplitStep::Strategy::given;
        split.given = sp;
        PipelinePlan p{{split, train_step(c), EvaluateStep{}}, false};
        auto res = execute(p, ds, leaky ? leaky_policy() : clean_policy(), exec_seed(c, r));
        return finish(std::move(res), name, leaky, !picks.empty());
    };
    std::vector<Job> jobs;
    for (double fraction : c.sweep)
        for (int r = 0; r < c.repeats; ++r)
            for (int f = 0; f < c.folds; ++f)
                jobs.push_back(
                    {{fraction}, "leaky", r, f, [=] { return one(fraction, true, r, f, run_name(c, fraction, "leaky", r, f)); }});
    for (int r = 0; r < c.repeats; ++r)
        for (int f = 0; f < c.folds; ++f)
            jobs.push_back({c.sweep, "clean", r, f, [=] { return one(0.0, false, r, f, run_name(c, 0.0, "clean", r, f)); }});
    return collect(c, jobs);
}

TrendSeries run_window_overlap(const ExperimentConfig& c) {
    if (c.kind != ExperimentKind::window_overlap) throw ConfigError("run_window_overlap: config is for another experiment");
    c.validate();
    std::vector<Job> jobs;
    for (double overlap : c.sweep)
        for (const char* cond : {"leaky", "clean"})
            for (int r = 0; r < c.repeats; ++r) {
                const bool leaky = std::string(cond) == "leaky";
                jobs.push_back({{overlap}, cond, r, 0, [&c, overlap, leaky, r] {
                                    const WindowPair w = gen_drifting_windows(blob_for(c, r), overlap, c.drift_phase);
                                    const Dataset ds = concat(w.train, w.eval);
                                    const Index n_train = w.train.rows();
                                    SplitStep split;
                                    split.strategy = SplitStep::Strategy::given;
                                    split.given.strategy = "windows";
                                    split.given.leaky_strategy = leaky && w.shared > 0;
                                    // Clean training stops where the evaluation window begins.
                                    for (Index i = 0; i < (leaky ? n_train : n_train - w.shared); ++i)
                                        split.given.train_indices.push_back(i);
                                    for (Index i = n_train; i < ds.rows(); ++i) split.given.eval_indices.push_back(i);
                                    PipelinePlan p{{split, train_step(c), EvaluateStep{}}, false};
                                    auto res = execute(p, ds, leaky ? leaky_policy() : clean_policy(), exec_seed(c, r));
                                    return finish(std::move(res), run_name(c, overlap, leaky ? "leaky" : "clean", r, 0),
                                                  leaky, leaky && w.shared > 0);
                                }});
            }
    return collect(c, jobs);
}

TrendSeries run_distribution_shift(const ExperimentConfig& c) {
    if (c.kind != ExperimentKind::distribution_shift)
        throw ConfigError("run_distribution_shift: config is for another experiment");
    c.validate();
    std::vector<Job> jobs;
    for (double shift : c.sweep)
        for (const char* cond : {"leaky", "clean"})
            for (int r = 0; r < c.repeats; ++r) {
                const bool leaky = std::string(cond) == "leaky";
                jobs.push_back({{shift}, cond, r, 0, [&c, shift, leaky, r] {
                                    const Dataset ds = gen_multisource(blob_for(c, r), c.n_sources, shift);
                                    SplitStep split;
                                    if (leaky) {
                                        split.strategy = SplitStep::Strategy::holdout;
                                        split.eval_fraction = c.eval_fraction;
                                    } else {
                                        split.strategy = SplitStep::Strategy::group;
                                        split.axis = GroupAxis::source;
                                        split.held_out = c.n_sources - 1;
                                    }
                                    PipelinePlan p{{split, PreprocessStep{}, train_step(c), EvaluateStep{}}, true};
                                    auto res = execute(p, ds, clean_policy(), exec_seed(c, r));
                                    return finish(std::move(res), run_name(c, shift, leaky ? "leaky" : "clean", r, 0),
                                                  leaky, leaky);
                                }});
            }
    return collect(c, jobs);
}

TrendSeries run_experiment(const ExperimentConfig& c) {
    switch (c.kind) {
        case ExperimentKind::frankenstein: return run_frankenstein(c);
        case ExperimentKind::label_delta: return run_label_delta(c);
        case ExperimentKind::smote_overlap: return run_smote_overlap(c);
        case ExperimentKind::normalization_shift: return run_normalization_shift(c);
        case ExperimentKind::set_intersection: return run_set_intersection(c);
        case ExperimentKind::window_overlap: return run_window_overlap(c);
        case ExperimentKind::distribution_shift: return run_distribution_shift(c);
    }
    throw ConfigError("unknown experiment kind");
}

// ---------------------------------------------------------------------------
// Output

std::string raw_csv(const TrendSeries& t) {
    std::string out = "experiment,param,condition,repeat,fold,accuracy\n";
    for (const auto& r : t.raw)
        out += std::string(to_string(t.kind)) + "," + fmt(r.param) + "," + r.condition + "," + std::to_string(r.repeat) +
               "," + std::to_string(r.fold) + "," + fmt(r.accuracy) + "\n";
    return out;
}

std::string summary_csv(const TrendSeries& t) {
    std::string out = "experiment,param,condition,mean,std\n";
    for (const auto& p : t.points)
        out += std::string(to_string(t.kind)) + "," + fmt(p.param) + "," + p.condition + "," + fmt(p.mean) + "," +
               fmt(p.std) + "\n";
    return out;
}

std::string audit_jsonl(const TrendSeries& t) {
    std::string out;
    for (const auto& a : t.audits) out += a.to_jsonl();
    return out;
}

std::string summary_table(const TrendSeries& t) {
    std::ostringstream out;
    char line[128];
    std::snprintf(line, sizeof line, "%-10s  %-8s %-8s  %-8s %-8s  %s\n", "param", "leaky", "±", "clean", "±", "gap");
    out << to_string(t.kind) << '\n' << line;
    std::vector<double> params;
    for (const auto& p : t.points)
        if (std::find(params.begin(), params.end(), p.param) == params.end()) params.push_back(p.param);
    for (double param : params) {
        const auto& l = t.at(param, "leaky");
        const auto& c = t.at(param, "clean");
        std::snprintf(line, sizeof line, "%-10s  %.4f   %.4f    %.4f   %.4f    %+.4f\n", fmt(param).c_str(), l.mean,
                      l.std, c.mean, c.std, l.mean - c.mean);
        out << line;
    }
    return out.str();
}

}  // namespace leaklab
