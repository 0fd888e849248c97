#include "leaklab/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <type_traits>

#include "json.hpp"

namespace leaklab {

std::string ScopePolicy::describe() const {
    std::string s = mode == ScopeMode::clean ? "clean" : "leaky";
    s += validation == ValidationHandling::split_before_fit ? "+split_before_fit" : "+split_after_fit";
    if (mode == ScopeMode::leaky && leak_fraction < 1.0) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "+leak%.4g", leak_fraction);
        s += buf;
    }
    return s;
}

std::string step_kind(const PlanStep& step) {
    return std::visit(
        [](const auto& s) -> std::string {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, SynthesizeStep>)
                return s.method == SynthesizeStep::Method::smote ? "smote" : "centroid_undersample";
            else if constexpr (std::is_same_v<T, PreprocessStep>)
                return to_string(s.kind);
            else if constexpr (std::is_same_v<T, SplitStep>)
                return "split";
            else if constexpr (std::is_same_v<T, TrainStep>)
                return "train";
            else
                return "evaluate";
        },
        step);
}

void PipelinePlan::validate() const {
    int splits = 0, trains = 0, evaluates = 0;
    int train_at = -1, eval_at = -1, split_at = -1;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const auto& s = steps[i];
        if (std::holds_alternative<SplitStep>(s)) {
            ++splits;
            split_at = static_cast<int>(i);
        } else if (std::holds_alternative<TrainStep>(s)) {
            ++trains;
            train_at = static_cast<int>(i);
        } else if (std::holds_alternative<EvaluateStep>(s)) {
            ++evaluates;
            eval_at = static_cast<int>(i);
        } else if (train_at >= 0) {
            throw ConfigError("plan: step " + std::to_string(i) + " (" + step_kind(s) +
                              ") comes after training");
        }
    }
    if (splits != 1) throw ConfigError("plan: exactly one split step required, found " + std::to_string(splits));
    if (trains != 1) throw ConfigError("plan: exactly one train step required, found " + std::to_string(trains));
    if (evaluates != 1)
        throw ConfigError("plan: exactly one evaluate step required, found " + std::to_string(evaluates));
    if (eval_at < train_at) throw ConfigError("plan: evaluate must follow train");
    if (split_at > train_at) throw ConfigError("plan: split must precede train");
}

const char* to_string(AuditRole role) {
    switch (role) {
        case AuditRole::split: return "split";
        case AuditRole::fit: return "fit";
        case AuditRole::resample: return "resample";
        case AuditRole::train: return "train";
        case AuditRole::validation: return "validation";
        case AuditRole::evaluate: return "evaluate";
    }
    return "unknown";
}

AuditRole audit_role_from_string(const std::string& name) {
    for (auto r : {AuditRole::split, AuditRole::fit, AuditRole::resample, AuditRole::train,
                   AuditRole::validation, AuditRole::evaluate})
        if (name == to_string(r)) return r;
    throw ParseError("unknown audit role '" + name + "'");
}

AuditRecord& AuditLog::add(std::string kind, AuditRole role, ProvenanceSet saw,
                           std::vector<std::int64_t> sources) {
    AuditRecord r;
    r.step = static_cast<int>(records.size());
    r.kind = std::move(kind);
    r.role = role;
    r.saw_provenance = std::move(saw);
    r.saw_sources = make_set(std::move(sources));
    records.push_back(std::move(r));
    return records.back();
}

std::string AuditLog::to_jsonl() const {
    std::ostringstream out;
    nlohmann::json head;
    head["run"] = run;
    head["step"] = -1;
    head["kind"] = "split";
    head["role"] = "split";
    head["scope"] = scope;
    head["strategy"] = strategy;
    head["eval_provenance"] = eval_provenance;
    head["validation_provenance"] = validation_provenance;
    head["eval_sources"] = eval_sources;
    head["require_source_disjoint"] = require_source_disjoint;
    head["saw_provenance"] = nlohmann::json::array();
    head["violation"] = false;
    out << head.dump() << '\n';
    for (const auto& r : records) {
        nlohmann::json j;
        j["run"] = run;
        j["step"] = r.step;
        j["kind"] = r.kind;
        j["role"] = to_string(r.role);
        j["saw_provenance"] = r.saw_provenance;
        if (!r.saw_sources.empty()) j["saw_sources"] = r.saw_sources;
        j["violation"] = r.violation;
        out << j.dump() << '\n';
    }
    return out.str();
}

std::vector<AuditLog> parse_audit_jsonl(const std::string& text) {
    std::vector<AuditLog> logs;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    auto require = [&](const nlohmann::json& j, const char* key) -> const nlohmann::json& {
        if (!j.contains(key)) throw ParseError("audit line " + std::to_string(line_no) + ": missing field '" + key + "'");
        return j.at(key);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
            const auto role = audit_role_from_string(require(j, "role").get<std::string>());
            const auto run = require(j, "run").get<std::string>();
            if (role == AuditRole::split) {
                AuditLog log;
                log.run = run;
                log.scope = j.value("scope", "");
                log.strategy = j.value("strategy", "");
                log.eval_provenance = make_set(require(j, "eval_provenance").get<std::vector<ProvenanceId>>());
                log.validation_provenance = make_set(j.value("validation_provenance", std::vector<ProvenanceId>{}));
                log.eval_sources = make_set(j.value("eval_sources", std::vector<std::int64_t>{}));
                log.require_source_disjoint = j.value("require_source_disjoint", false);
                logs.push_back(std::move(log));
                continue;
            }
            if (logs.empty() || logs.back().run != run)
                throw ParseError("audit line " + std::to_string(line_no) + ": record for run '" + run +
                                 "' before its split header");
            AuditRecord r;
            r.step = require(j, "step").get<int>();
            r.kind = require(j, "kind").get<std::string>();
            r.role = role;
            r.saw_provenance = make_set(require(j, "saw_provenance").get<std::vector<ProvenanceId>>());
            r.saw_sources = make_set(j.value("saw_sources", std::vector<std::int64_t>{}));
            r.violation = require(j, "violation").get<bool>();
            logs.back().records.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("audit line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return logs;
}

std::vector<Violation> audit_violations(const AuditLog& log) {
    std::vector<Violation> out;
    for (const auto& r : log.records) {
        const bool reads_data = r.role == AuditRole::fit || r.role == AuditRole::resample;
        auto flag = [&](const ProvenanceSet& forbidden, const char* what) {
            auto hit = set_intersection(r.saw_provenance, forbidden);
            if (!hit.empty()) out.push_back({r.step, r.kind, std::move(hit), what});
        };
        if (reads_data || r.role == AuditRole::train) flag(log.eval_provenance, "saw evaluation rows");
        if (reads_data) flag(log.validation_provenance, "saw validation rows");
        if (r.role == AuditRole::validation) flag(log.eval_provenance, "validation monitor overlaps evaluation rows");
        if (r.role == AuditRole::train && log.require_source_disjoint) {
            std::vector<std::int64_t> shared;
            std::set_intersection(r.saw_sources.begin(), r.saw_sources.end(), log.eval_sources.begin(),
                                  log.eval_sources.end(), std::back_inserter(shared));
            if (!shared.empty())
                out.push_back({r.step, r.kind, ProvenanceSet(shared.begin(), shared.end()),
                               "trained on sources held out for evaluation"});
        }
    }
    return out;
}

std::vector<Violation> audit_check(AuditLog& log) {
    auto out = audit_violations(log);
    for (auto& r : log.records) r.violation = false;
    for (const auto& v : out)
        for (auto& r : log.records)
            if (r.step == v.step && r.kind == v.kind) r.violation = true;
    return out;
}

std::vector<Violation> audit_check(const AuditLog& log, const Dataset& ds, const SplitPair& split) {
    split.validate(ds.rows());
    AuditLog copy = log;
    copy.eval_provenance = ds.provenance(split.eval_indices);
    return audit_violations(copy);
}

// ---------------------------------------------------------------------------

namespace {

IndexList sorted_unique(IndexList v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

IndexList set_union(const IndexList& a, const IndexList& b) {
    IndexList out = a;
    out.insert(out.end(), b.begin(), b.end());
    return sorted_unique(std::move(out));
}

IndexList set_minus(const IndexList& a, const IndexList& b) {
    IndexList sa = sorted_unique(a), sb = sorted_unique(b), out;
    std::set_difference(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(out));
    return out;
}

struct Runner {
    const PipelinePlan& plan;
    const ScopePolicy& policy;
    Seed seed;

    Dataset work;
    IndexList train, val, eval;  // indices into work
    std::map<ProvenanceId, ProvenanceSet> donors_of;  // synthetic row -> donor ids
    ExecutionResult result;

    IndexList fit_rows() const {
        if (policy.mode == ScopeMode::clean) {
            return policy.validation == ValidationHandling::split_before_fit ? sorted_unique(train)
                                                                              : set_union(train, val);
        }
        const auto visible = static_cast<std::size_t>(
            std::floor(policy.leak_fraction * static_cast<double>(eval.size())));
        const IndexList hidden(eval.begin() + static_cast<std::ptrdiff_t>(std::min(visible, eval.size())), eval.end());
        IndexList all(static_cast<std::size_t>(work.rows()));
        std::iota(all.begin(), all.end(), Index{0});
        return set_minus(all, set_minus(hidden, set_union(train, val)));
    }

    // Provenance read through these rows, following synthetic rows to their donors.
    ProvenanceSet saw(const IndexList& rows) const {
        ProvenanceSet ids;
        for (Index r : rows) {
            const auto id = work.meta()[static_cast<std::size_t>(r)].provenance_id;
            auto it = donors_of.find(id);
            if (it == donors_of.end()) {
                ids.push_back(id);
            } else {
                ids.insert(ids.end(), it->second.begin(), it->second.end());
            }
        }
        return make_set(std::move(ids));
    }

    std::vector<std::int64_t> sources(const IndexList& rows) const {
        std::vector<std::int64_t> out;
        for (Index r : rows)
            if (const auto& s = work.meta()[static_cast<std::size_t>(r)].source_id) out.push_back(*s);
        return out;
    }

    void split_step(const SplitStep& s, int at) {
        const Seed split_seed = derive_seed(seed, {1});
        SplitPair sp;
        switch (s.strategy) {
            case SplitStep::Strategy::holdout: sp = holdout(work, s.eval_fraction, s.stratified, split_seed); break;
            case SplitStep::Strategy::kfold: sp = kfold_stratified(work, s.folds, split_seed).pair(s.fold); break;
            case SplitStep::Strategy::with_replacement:
                sp = sample_with_replacement_split(work, s.eval_fraction, split_seed);
                break;
            case SplitStep::Strategy::group: sp = group_split(work, s.axis, s.held_out); break;
            case SplitStep::Strategy::temporal: sp = temporal_split(work, s.cut_time); break;
            case SplitStep::Strategy::given:
                sp = s.given;
                sp.validate(work.rows());
                if (sp.strategy.empty()) sp.strategy = "given";
                break;
        }
        if (sp.train_indices.empty() || sp.eval_indices.empty())
            throw InsufficientDataError("split produced an empty side");
        result.split = sp;
        train = sp.train_indices;
        eval = sp.eval_indices;
        result.audit.strategy = sp.strategy;
        (void)at;

        for (const auto& step : plan.steps)
            if (const auto* t = std::get_if<TrainStep>(&step); t && t->uses_validation) {
                SplitPair carve = carve_validation(work, train, t->validation_fraction, derive_seed(seed, {2}));
                train = carve.train_indices;
                val = carve.eval_indices;
            }
    }

    void preprocess_step(const PreprocessStep& s, int at) {
        const IndexList fit = fit_rows();
        result.audit.add(to_string(s.kind), AuditRole::fit, saw(fit)).step = at;
        switch (s.kind) {
            case PreprocKind::standardize:
            case PreprocKind::minmax:
            case PreprocKind::ttest_select: {
                PreprocParams p = s.kind == PreprocKind::standardize ? fit_standardizer(work, fit)
                                  : s.kind == PreprocKind::minmax    ? fit_minmax(work, fit)
                                                                     : fit_ttest_selector(work, fit, s.top_k);
                work = apply(p, work);
                result.params.push_back(std::move(p));
                break;
            }
            case PreprocKind::knn_impute: {
                work = knn_impute(work, s.k, fit);
                PreprocParams p;
                p.kind = PreprocKind::knn_impute;
                p.k = s.k;
                p.donor_rows = fit;
                p.fitted_on = static_cast<Index>(fit.size());
                result.params.push_back(std::move(p));
                break;
            }
            case PreprocKind::moving_average: {
                // Rows smoothed together share information; fit rows form one
                // sequence and every other role is smoothed on its own.
                const IndexList v = set_minus(val, fit);
                const IndexList e = set_minus(set_minus(eval, fit), v);
                IndexList all(static_cast<std::size_t>(work.rows()));
                std::iota(all.begin(), all.end(), Index{0});
                const IndexList rest = set_minus(set_minus(set_minus(all, fit), v), e);
                Matrix x = work.features();
                for (const IndexList* seg : {&fit, &v, &e, &rest}) {
                    if (seg->empty()) continue;
                    const Dataset smoothed = moving_average_smooth(work.subset(*seg), s.window);
                    for (std::size_t q = 0; q < seg->size(); ++q)
                        x.row((*seg)[q]) = smoothed.features().row(static_cast<Index>(q));
                }
                work = work.with_features(std::move(x));
                PreprocParams p;
                p.kind = PreprocKind::moving_average;
                p.window = s.window;
                p.fitted_on = static_cast<Index>(fit.size());
                result.params.push_back(std::move(p));
                break;
            }
        }
    }

    void synthesize_step(const SynthesizeStep& s, int at) {
        Index count[2] = {0, 0};
        for (Index r : train) ++count[work.labels()(r)];
        const int minority = count[1] <= count[0] ? 1 : 0;
        const int majority = 1 - minority;
        const IndexList fit = fit_rows();
        const Seed rs = derive_seed(seed, {3, static_cast<std::uint64_t>(at)});
        ResampleReport rep;
        IndexList read;  // rows the resampler looked at
        if (s.method == SynthesizeStep::Method::smote) {
            const Index n_new = s.amount.value_or(std::max<Index>(1, count[majority] - count[minority]));
            rep = smote(work, minority, s.k, n_new, fit, rs);
            for (Index r : fit)
                if (work.labels()(r) == minority) read.push_back(r);
        } else {
            const Index clusters = s.amount.value_or(std::max<Index>(1, count[minority]));
            rep = centroid_undersample(work, majority, clusters, fit, rs);
            read = rep.removed;
            train = set_minus(train, rep.removed);
        }
        ProvenanceSet seen = saw(read);
        const ProvenanceSet donors = rep.all_donors();
        seen.insert(seen.end(), donors.begin(), donors.end());
        result.audit.add(step_kind(s), AuditRole::resample, make_set(std::move(seen))).step = at;

        const Index base = work.rows();
        for (Index q = 0; q < rep.generated.rows(); ++q) {
            donors_of[rep.generated.meta()[static_cast<std::size_t>(q)].provenance_id] =
                rep.donors[static_cast<std::size_t>(q)];
            train.push_back(base + q);
        }
        work = concat(work, rep.generated);
        result.resamples.push_back(std::move(rep));
    }

    void train_step(const TrainStep& s, int at) {
        TrainConfig cfg = s.config;
        cfg.seed = derive_seed(seed, {4, s.config.seed});
        result.training = work.subset(train);
        result.audit.add("train", AuditRole::train, saw(train), sources(train)).step = at;
        auto m0 = init_mlp<double>(work.cols(), cfg);
        if (s.uses_validation) {
            result.audit.add("validation", AuditRole::validation, saw(val)).step = at;
            result.model = train_early_stop(std::move(m0), result.training, work.subset(val), cfg);
        } else {
            result.model = leaklab::train(std::move(m0), result.training, cfg);
        }
    }

    void evaluate_step(const EvaluateStep& s, int at) {
        IndexList scored = eval;
        if (s.dedup_against_train) {
            const IndexList keep = dedup_eval_indices(work.subset(train), work.subset(eval));
            scored.clear();
            for (Index q : keep) scored.push_back(eval[static_cast<std::size_t>(q)]);
        }
        result.eval_rows = static_cast<Index>(scored.size());
        result.audit.eval_provenance = saw(scored);
        result.audit.eval_sources = make_set(sources(scored));
        result.audit.add("evaluate", AuditRole::evaluate, saw(scored)).step = at;
        if (scored.empty()) throw InsufficientDataError("evaluate: no eval rows left to score");
        result.accuracy = accuracy(result.model, work.subset(scored));
    }

    ExecutionResult run(const Dataset& ds) {
        plan.validate();
        if (!(policy.leak_fraction >= 0.0 && policy.leak_fraction <= 1.0))
            throw ConfigError("scope policy: leak_fraction must lie in [0, 1]");
        work = ds;
        result.audit.scope = policy.describe();
        result.audit.require_source_disjoint = plan.require_source_disjoint;
        // The split is decided on the raw rows before anything else runs.
        for (std::size_t i = 0; i < plan.steps.size(); ++i)
            if (const auto* s = std::get_if<SplitStep>(&plan.steps[i])) split_step(*s, static_cast<int>(i));
        result.audit.validation_provenance = saw(val);

        for (std::size_t i = 0; i < plan.steps.size(); ++i) {
            const int at = static_cast<int>(i);
            std::visit(
                [&](const auto& s) {
                    using T = std::decay_t<decltype(s)>;
                    if constexpr (std::is_same_v<T, PreprocessStep>) preprocess_step(s, at);
                    else if constexpr (std::is_same_v<T, SynthesizeStep>) synthesize_step(s, at);
                    else if constexpr (std::is_same_v<T, TrainStep>) train_step(s, at);
                    else if constexpr (std::is_same_v<T, EvaluateStep>) evaluate_step(s, at);
                },
                plan.steps[i]);
        }
        audit_check(result.audit);
        return std::move(result);
    }
};

}  // namespace

ExecutionResult execute(const PipelinePlan& plan, const Dataset& ds, const ScopePolicy& policy, Seed seed) {
    Runner runner{plan, policy, seed, {}, {}, {}, {}, {}, {}};
    return runner.run(ds);
}

}  // namespace leaklab
