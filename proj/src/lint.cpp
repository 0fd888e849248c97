#include "leaklab/lint.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

namespace leaklab::lint {

using nlohmann::json;

namespace {

template <typename E, std::size_t N>
std::optional<E> lookup(const std::string& token, const E (&all)[N]) {
    for (E e : all)
        if (token == to_string(e)) return e;
    return std::nullopt;
}

constexpr Paradigm kParadigms[] = {Paradigm::inductive, Paradigm::transductive, Paradigm::domain_adaptation,
                                   Paradigm::domain_generalization};
constexpr Axis kAxes[] = {Axis::cross_source, Axis::cross_time, Axis::cross_group, Axis::none};
constexpr TargetRole kRoles[] = {TargetRole::predict_known_target_only, TargetRole::generalize_to_target_domain};
constexpr StepKind kKinds[] = {StepKind::collect,  StepKind::synthesize,        StepKind::preprocess,
                               StepKind::feature_engineer, StepKind::split, StepKind::derive_validation,
                               StepKind::train,    StepKind::evaluate,          StepKind::fine_tune};
constexpr Region kRegions[] = {Region::train, Region::eval, Region::validation, Region::all,
                               Region::source, Region::target_train, Region::target_eval};
constexpr Category kCategories[] = {Category::data_collecting, Category::synthesis, Category::direct_label,
                                    Category::indirect_label, Category::normalization, Category::cleaning,
                                    Category::imputation, Category::feature_engineering,
                                    Category::sets_intersection, Category::overlap, Category::distribution};

std::string join(const std::vector<std::string>& parts, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

}  // namespace

const char* to_string(Paradigm p) {
    switch (p) {
        case Paradigm::inductive: return "inductive";
        case Paradigm::transductive: return "transductive";
        case Paradigm::domain_adaptation: return "domain_adaptation";
        case Paradigm::domain_generalization: return "domain_generalization";
    }
    return "?";
}
const char* to_string(Axis a) {
    switch (a) {
        case Axis::cross_source: return "cross_source";
        case Axis::cross_time: return "cross_time";
        case Axis::cross_group: return "cross_group";
        case Axis::none: return "none";
    }
    return "?";
}
const char* to_string(TargetRole r) {
    return r == TargetRole::predict_known_target_only ? "predict_known_target_only" : "generalize_to_target_domain";
}
const char* to_string(StepKind k) {
    switch (k) {
        case StepKind::collect: return "collect";
        case StepKind::synthesize: return "synthesize";
        case StepKind::preprocess: return "preprocess";
        case StepKind::feature_engineer: return "feature_engineer";
        case StepKind::split: return "split";
        case StepKind::derive_validation: return "derive_validation";
        case StepKind::train: return "train";
        case StepKind::evaluate: return "evaluate";
        case StepKind::fine_tune: return "fine_tune";
    }
    return "?";
}
const char* to_string(Region r) {
    switch (r) {
        case Region::train: return "train";
        case Region::eval: return "eval";
        case Region::validation: return "validation";
        case Region::all: return "all";
        case Region::source: return "source";
        case Region::target_train: return "target_train";
        case Region::target_eval: return "target_eval";
    }
    return "?";
}
const char* to_string(Category c) {
    switch (c) {
        case Category::data_collecting: return "data_collecting";
        case Category::synthesis: return "synthesis";
        case Category::direct_label: return "direct_label";
        case Category::indirect_label: return "indirect_label";
        case Category::normalization: return "normalization";
        case Category::cleaning: return "cleaning";
        case Category::imputation: return "imputation";
        case Category::feature_engineering: return "feature_engineering";
        case Category::sets_intersection: return "sets_intersection";
        case Category::overlap: return "overlap";
        case Category::distribution: return "distribution";
    }
    return "?";
}
const char* to_string(Severity s) {
    switch (s) {
        case Severity::info: return "info";
        case Severity::caution: return "caution";
        case Severity::violation: return "violation";
    }
    return "?";
}

bool TaskContext::has_axis(Axis a) const { return std::find(axes.begin(), axes.end(), a) != axes.end(); }

ManifestError::ManifestError(std::vector<std::string> defects)
    : ParseError("invalid manifest:\n  " + join(defects, "\n  ")), defects_(std::move(defects)) {}

// ---------------------------------------------------------------------------
// Parsing

namespace {

class Validator {
public:
    std::vector<std::string> defects;

    void defect(const std::string& where, const std::string& what) { defects.push_back(where + ": " + what); }

    template <typename E, std::size_t N>
    std::optional<E> token(const json& j, const std::string& where, const E (&all)[N], const char* what) {
        if (!j.is_string()) {
            defect(where, std::string("expected a ") + what + " string");
            return std::nullopt;
        }
        const auto t = j.get<std::string>();
        auto v = lookup(t, all);
        if (!v) defect(where, std::string("unknown ") + what + " '" + t + "'");
        return v;
    }

    std::optional<bool> boolean(const json& j, const std::string& where) {
        if (!j.is_boolean()) {
            defect(where, "expected true or false");
            return std::nullopt;
        }
        return j.get<bool>();
    }

    std::optional<std::string> string(const json& j, const std::string& where) {
        if (!j.is_string()) {
            defect(where, "expected a string");
            return std::nullopt;
        }
        return j.get<std::string>();
    }

    TaskContext context(const json& root) {
        TaskContext ctx;
        if (!root.contains("context")) return ctx;
        const json& c = root.at("context");
        if (!c.is_object()) {
            defect("/context", "expected an object");
            return ctx;
        }
        for (const auto& [key, val] : c.items()) {
            const std::string where = "/context/" + key;
            if (key == "paradigm") {
                if (auto p = token(val, where, kParadigms, "paradigm")) ctx.paradigm = *p;
            } else if (key == "axes") {
                if (!val.is_array()) {
                    defect(where, "expected an array");
                    continue;
                }
                ctx.axes.clear();
                for (std::size_t i = 0; i < val.size(); ++i)
                    if (auto a = token(val[i], where + "/" + std::to_string(i), kAxes, "axis")) ctx.axes.push_back(*a);
                std::sort(ctx.axes.begin(), ctx.axes.end());
                ctx.axes.erase(std::unique(ctx.axes.begin(), ctx.axes.end()), ctx.axes.end());
            } else if (key == "target_role") {
                if (auto r = token(val, where, kRoles, "target role")) ctx.target_role = *r;
            } else {
                defect(where, "unknown context field");
            }
        }
        if (ctx.axes.empty()) defect("/context/axes", "must not be empty");
        if (ctx.axes.size() > 1 && ctx.has_axis(Axis::none))
            defect("/context/axes", "'none' cannot be combined with other axes");
        if (ctx.paradigm == Paradigm::transductive && !(ctx.axes.size() == 1 && ctx.axes[0] == Axis::none))
            defect("/context/axes", "a transductive task makes no generalization claim; axes must be [\"none\"]");
        if (ctx.target_role && ctx.paradigm != Paradigm::domain_adaptation)
            defect("/context/target_role", "only meaningful for domain_adaptation");
        return ctx;
    }

    StepAttributes attributes(const json& a, const std::string& where) {
        StepAttributes out;
        if (!a.is_object()) {
            defect(where, "expected an object");
            return out;
        }
        for (const auto& [key, val] : a.items()) {
            const std::string at = where + "/" + key;
            if (key == "category") out.category = token(val, at, kCategories, "category");
            else if (key == "reads_labels") out.reads_labels = boolean(val, at);
            else if (key == "split_kind") out.split_kind = string(val, at);
            else if (key == "with_replacement") out.with_replacement = boolean(val, at);
            else if (key == "shared_instances") out.shared_instances = boolean(val, at);
            else if (key == "overlapping_windows") out.overlapping_windows = boolean(val, at);
            else if (key == "respects_time") out.respects_time = boolean(val, at);
            else if (key == "respects_groups") out.respects_groups = boolean(val, at);
            else if (key == "region") out.region = token(val, at, kRegions, "region");
            else if (key == "monitors") out.monitors = token(val, at, kRegions, "region");
            else if (key == "validation_handling") {
                out.validation_handling = string(val, at);
                if (out.validation_handling && *out.validation_handling != "split_before_fit" &&
                    *out.validation_handling != "split_after_fit")
                    defect(at, "expected 'split_before_fit' or 'split_after_fit', found '" +
                                   *out.validation_handling + "'");
            } else if (key == "features") {
                if (!val.is_array()) {
                    defect(at, "expected an array of {name, provenance}");
                    continue;
                }
                for (std::size_t i = 0; i < val.size(); ++i) {
                    const std::string fw = at + "/" + std::to_string(i);
                    const json& f = val[i];
                    if (!f.is_object() || !f.contains("name") || !f.contains("provenance") ||
                        !f.at("name").is_string() || !f.at("provenance").is_string()) {
                        defect(fw, "expected {\"name\": string, \"provenance\": string}");
                        continue;
                    }
                    FeatureDecl d{f.at("name").get<std::string>(), f.at("provenance").get<std::string>()};
                    if (d.provenance != "measured" && d.provenance != "label_copied" && d.provenance != "label_derived")
                        defect(fw + "/provenance", "unknown provenance '" + d.provenance +
                                                       "' (measured, label_copied, label_derived)");
                    out.features.push_back(std::move(d));
                }
            } else if (key == "drop") {
                if (!val.is_array()) {
                    defect(at, "expected an array of feature names");
                    continue;
                }
                for (std::size_t i = 0; i < val.size(); ++i)
                    if (auto s = string(val[i], at + "/" + std::to_string(i))) out.drop.push_back(*s);
            } else {
                defect(at, "unknown attribute '" + key + "'");
            }
        }
        return out;
    }

    std::vector<ManifestStep> steps(const json& root) {
        std::vector<ManifestStep> out;
        if (!root.contains("steps") || !root.at("steps").is_array()) {
            defect("/steps", "expected an array of steps");
            return out;
        }
        const json& arr = root.at("steps");
        std::map<std::string, std::size_t> seen;
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string where = "/steps/" + std::to_string(i);
            const json& s = arr[i];
            ManifestStep step;
            if (!s.is_object()) {
                defect(where, "expected an object");
                continue;
            }
            for (const auto& [key, val] : s.items())
                if (key != "id" && key != "kind" && key != "fit_inputs" && key != "attributes")
                    defect(where + "/" + key, "unknown step field");
            if (!s.contains("id") || !s.at("id").is_string() || s.at("id").get<std::string>().empty()) {
                defect(where + "/id", "missing or empty step id");
            } else {
                step.id = s.at("id").get<std::string>();
                auto [it, fresh] = seen.emplace(step.id, i);
                if (!fresh)
                    defect(where + "/id", "duplicate step id '" + step.id + "' (first used at /steps/" +
                                              std::to_string(it->second) + ")");
            }
            if (!s.contains("kind")) defect(where + "/kind", "missing step kind");
            else if (auto k = token(s.at("kind"), where + "/kind", kKinds, "step kind")) step.kind = *k;
            if (s.contains("fit_inputs")) {
                const json& fi = s.at("fit_inputs");
                if (!fi.is_array()) defect(where + "/fit_inputs", "expected an array of regions");
                else
                    for (std::size_t q = 0; q < fi.size(); ++q)
                        if (auto r = token(fi[q], where + "/fit_inputs/" + std::to_string(q), kRegions, "region"))
                            step.fit_inputs.push_back(*r);
            }
            if (s.contains("attributes")) step.attributes = attributes(s.at("attributes"), where + "/attributes");
            out.push_back(std::move(step));
        }
        const auto splits = std::count_if(out.begin(), out.end(), [](const auto& s) { return s.kind == StepKind::split; });
        if (splits != 1) defect("/steps", "exactly one split step required, found " + std::to_string(splits));

        // Regions that only exist once the split (or the validation carve) has happened.
        bool split_seen = false, carve_seen = false;
        for (std::size_t i = 0; i < out.size(); ++i) {
            const auto& s = out[i];
            for (Region r : s.fit_inputs) {
                const bool post_split = r == Region::train || r == Region::eval || r == Region::validation;
                if (post_split && !split_seen)
                    defect("/steps/" + std::to_string(i) + "/fit_inputs",
                           std::string("region '") + to_string(r) + "' does not exist before the split step");
                if (r == Region::validation && !carve_seen)
                    defect("/steps/" + std::to_string(i) + "/fit_inputs",
                           "region 'validation' used before any derive_validation step");
            }
            if (s.kind == StepKind::split) split_seen = true;
            if (s.kind == StepKind::derive_validation) {
                if (!split_seen)
                    defect("/steps/" + std::to_string(i), "derive_validation must come after the split step");
                carve_seen = true;
            }
        }
        return out;
    }
};

std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

}  // namespace

Manifest parse_manifest(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_col(text, e.byte == 0 ? 0 : e.byte - 1);
        throw ParseError("manifest line " + std::to_string(line) + ", column " + std::to_string(col) +
                         ": malformed JSON (" + e.what() + ")");
    }
    Validator v;
    Manifest m;
    if (!root.is_object()) {
        v.defect("/", "expected a JSON object with 'context' and 'steps'");
        throw ManifestError(v.defects);
    }
    for (const auto& [key, val] : root.items())
        if (key != "context" && key != "steps") v.defect("/" + key, "unknown top-level field");
    m.context = v.context(root);
    m.steps = v.steps(root);
    if (!v.defects.empty()) throw ManifestError(v.defects);
    return m;
}

Manifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open manifest '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_manifest(buf.str());
}

// ---------------------------------------------------------------------------
// Rules

namespace {

bool covers_eval(const std::vector<Region>& regions) {
    return std::any_of(regions.begin(), regions.end(), [](Region r) {
        return r == Region::eval || r == Region::all || r == Region::target_eval;
    });
}

bool contains(const std::vector<Region>& regions, Region r) {
    return std::find(regions.begin(), regions.end(), r) != regions.end();
}

Category fit_category(const ManifestStep& s) {
    if (s.attributes.category) return *s.attributes.category;
    return s.kind == StepKind::feature_engineer ? Category::feature_engineering : Category::normalization;
}

bool is_fit_step(const ManifestStep& s) {
    return s.kind == StepKind::preprocess || s.kind == StepKind::feature_engineer || s.kind == StepKind::synthesize;
}

struct Emitter {
    std::vector<std::pair<std::size_t, Finding>>& out;
    void operator()(std::size_t pos, const char* rule, Category c, Severity s, const std::string& step_id,
                    std::string msg) {
        out.push_back({pos, Finding{rule, c, s, step_id, std::move(msg)}});
    }
};

}  // namespace

std::vector<Finding> lint(const std::vector<ManifestStep>& steps, const TaskContext& ctx) {
    std::vector<std::pair<std::size_t, Finding>> found;
    Emitter emit{found};
    const bool transductive = ctx.paradigm == Paradigm::transductive;

    std::size_t first_train = steps.size();
    for (std::size_t i = 0; i < steps.size(); ++i)
        if (steps[i].kind == StepKind::train || steps[i].kind == StepKind::fine_tune) {
            first_train = i;
            break;
        }

    for (std::size_t i = 0; i < steps.size(); ++i) {
        const ManifestStep& s = steps[i];
        const auto& a = s.attributes;

        // R1: a fitted transform that saw the evaluation rows.
        if ((s.kind == StepKind::preprocess || s.kind == StepKind::feature_engineer) && covers_eval(s.fit_inputs)) {
            const bool labels = a.reads_labels.value_or(false);
            const bool downgrade = transductive && !labels;
            emit(i, "R1", fit_category(s), downgrade ? Severity::info : Severity::violation, s.id,
                 downgrade ? "transform fitted on evaluation rows; acceptable for a transductive task"
                           : labels ? "label-reading transform fitted on rows that include the evaluation set"
                                    : "transform parameters estimated on rows that include the evaluation set; "
                                      "fit on the training rows only");
        }

        // R2: resampling that drew on evaluation rows.
        if (s.kind == StepKind::synthesize && covers_eval(s.fit_inputs)) {
            emit(i, "R2", Category::synthesis, transductive ? Severity::info : Severity::violation, s.id,
                 transductive ? "synthetic rows derived from evaluation rows; acceptable for a transductive task"
                              : "synthetic rows derived from evaluation rows; resample after splitting, "
                                "on the training rows only");
        }

        // R3: the validation set shaped the transforms the model is trained with.
        if (s.kind == StepKind::derive_validation) {
            std::optional<std::size_t> culprit;
            for (std::size_t q = 0; q < i; ++q)
                if (is_fit_step(steps[q]) && contains(steps[q].fit_inputs, Region::train)) culprit = q;
            const bool after_fit = a.validation_handling && *a.validation_handling == "split_after_fit";
            if (culprit || after_fit) {
                const Category c = culprit ? (steps[*culprit].kind == StepKind::synthesize ? Category::synthesis
                                                                                           : fit_category(steps[*culprit]))
                                           : Category::normalization;
                emit(i, "R3", c, Severity::violation, s.id,
                     culprit ? "validation carved after step '" + steps[*culprit].id +
                                   "' was fitted on the whole training set; carve first, then fit on the remainder"
                             : std::string("validation carved after fitting on the whole training set"));
            }
        }
        if (is_fit_step(s) && contains(s.fit_inputs, Region::validation)) {
            emit(i, "R3", s.kind == StepKind::synthesize ? Category::synthesis : fit_category(s), Severity::violation,
                 s.id, "fitted on the validation rows used for model selection");
        }

        // R4: the split itself puts the same instances (or segments) on both sides.
        if (s.kind == StepKind::split) {
            if (a.with_replacement.value_or(false) || a.shared_instances.value_or(false))
                emit(i, "R4", Category::sets_intersection, Severity::violation, s.id,
                     "split can assign the same instance to training and evaluation");
            if (a.overlapping_windows.value_or(false))
                emit(i, "R4", Category::overlap, Severity::violation, s.id,
                     "training and evaluation windows share segments");
        }
        if (s.kind == StepKind::evaluate && a.region && *a.region == Region::validation) {
            const bool monitored = std::any_of(steps.begin(), steps.end(), [](const ManifestStep& t) {
                return t.attributes.monitors && *t.attributes.monitors == Region::validation;
            });
            const bool carved = std::any_of(steps.begin(), steps.end(),
                                            [](const ManifestStep& t) { return t.kind == StepKind::derive_validation; });
            if (monitored || carved)
                emit(i, "R4", Category::sets_intersection, Severity::violation, s.id,
                     "final evaluation reuses the validation set that chose the stopping point");
        }

        // R5 / R6: a split that erases the axis the task claims to generalize over.
        if (s.kind == StepKind::split) {
            if (ctx.has_axis(Axis::cross_time)) {
                if (!a.respects_time)
                    emit(i, "R5", Category::distribution, Severity::caution, s.id,
                         "task generalizes across time but the split does not declare respects_time");
                else if (!*a.respects_time)
                    emit(i, "R5", Category::distribution, Severity::violation, s.id,
                         "task generalizes across time but the split ignores acquisition order");
            }
            if (ctx.has_axis(Axis::cross_source) || ctx.has_axis(Axis::cross_group)) {
                if (!a.respects_groups)
                    emit(i, "R6", Category::distribution, Severity::caution, s.id,
                         "task generalizes across sources or groups but the split does not declare respects_groups");
                else if (!*a.respects_groups)
                    emit(i, "R6", Category::distribution, Severity::violation, s.id,
                         "task generalizes across sources or groups but the split mixes them");
            }
        }

        // R7: domain adaptation scored on the very target data it adapted on.
        if (ctx.paradigm == Paradigm::domain_adaptation && s.kind == StepKind::evaluate) {
            const Region scored = a.region.value_or(Region::eval);
            const bool target = scored == Region::target_train || scored == Region::target_eval || scored == Region::all;
            const bool reused = std::any_of(steps.begin(), steps.end(), [&](const ManifestStep& t) {
                return (t.kind == StepKind::train || t.kind == StepKind::fine_tune) &&
                       (contains(t.fit_inputs, scored) || contains(t.fit_inputs, Region::all));
            });
            if (target && reused) {
                const bool known = ctx.target_role && *ctx.target_role == TargetRole::predict_known_target_only;
                emit(i, "R7", Category::distribution, known ? Severity::info : Severity::violation, s.id,
                     known ? "evaluated on target data used for adaptation; fine when only that data must be predicted"
                           : "evaluated on the target data used for adaptation; reserve a separate target portion");
            }
        }

        // R8: features that carry the label, unless dropped before training.
        if (s.kind == StepKind::collect) {
            for (const auto& f : a.features) {
                if (f.provenance == "measured") continue;
                bool dropped = false;
                for (std::size_t q = i + 1; q < first_train && q < steps.size(); ++q)
                    if (std::find(steps[q].attributes.drop.begin(), steps[q].attributes.drop.end(), f.name) !=
                        steps[q].attributes.drop.end())
                        dropped = true;
                if (dropped) continue;
                const bool direct = f.provenance == "label_copied";
                emit(i, "R8", direct ? Category::direct_label : Category::indirect_label, Severity::violation, s.id,
                     "feature '" + f.name + "' " + (direct ? "copies the label" : "is derived from the label"));
            }
        }
    }

    std::stable_sort(found.begin(), found.end(), [](const auto& x, const auto& y) {
        if (x.first != y.first) return x.first < y.first;
        return x.second.rule_id < y.second.rule_id;
    });
    std::vector<Finding> out;
    for (auto& [pos, f] : found) out.push_back(std::move(f));
    return out;
}

std::vector<Finding> lint(const Manifest& manifest) { return lint(manifest.steps, manifest.context); }

bool has_violation(const std::vector<Finding>& findings) {
    return std::any_of(findings.begin(), findings.end(),
                       [](const Finding& f) { return f.severity == Severity::violation; });
}

std::string findings_jsonl(const std::vector<Finding>& findings) {
    std::string out;
    for (const auto& f : findings) {
        json j;
        j["rule_id"] = f.rule_id;
        j["taxonomy_category"] = to_string(f.category);
        j["severity"] = to_string(f.severity);
        j["step_id"] = f.step_id;
        j["message"] = f.message;
        out += j.dump() + "\n";
    }
    return out;
}

std::string findings_table(const std::vector<Finding>& findings) {
    if (findings.empty()) return "no findings\n";
    std::size_t w_step = 4, w_cat = 8;
    for (const auto& f : findings) {
        w_step = std::max(w_step, f.step_id.size());
        w_cat = std::max(w_cat, std::string(to_string(f.category)).size());
    }
    std::ostringstream out;
    auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w > s.size() ? w - s.size() : 0, ' '); };
    out << pad("step", w_step) << "  rule  " << pad("category", w_cat) << "  severity   message\n";
    for (const auto& f : findings)
        out << pad(f.step_id, w_step) << "  " << pad(f.rule_id, 4) << "  " << pad(to_string(f.category), w_cat) << "  "
            << pad(to_string(f.severity), 9) << "  " << f.message << '\n';
    return out.str();
}

}  // namespace leaklab::lint
