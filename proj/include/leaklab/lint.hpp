#pragma once

#include <optional>
#include <string>
#include <vector>

#include "leaklab/errors.hpp"

namespace leaklab::lint {

enum class Paradigm { inductive, transductive, domain_adaptation, domain_generalization };
enum class Axis { cross_source, cross_time, cross_group, none };
enum class TargetRole { predict_known_target_only, generalize_to_target_domain };

struct TaskContext {
    Paradigm paradigm = Paradigm::inductive;
    std::vector<Axis> axes{Axis::none};
    std::optional<TargetRole> target_role;

    bool has_axis(Axis a) const;
};

enum class StepKind {
    collect, synthesize, preprocess, feature_engineer, split, derive_validation, train, evaluate, fine_tune
};

enum class Region { train, eval, validation, all, source, target_train, target_eval };

enum class Category {
    data_collecting, synthesis, direct_label, indirect_label, normalization, cleaning,
    imputation, feature_engineering, sets_intersection, overlap, distribution
};

enum class Severity { info, caution, violation };

struct FeatureDecl {
    std::string name;
    std::string provenance;  // measured | label_copied | label_derived
};

/// Typed view of a step's attribute map; absent keys stay unset.
struct StepAttributes {
    std::optional<Category> category;  // preprocess / feature_engineer
    std::optional<bool> reads_labels;
    std::optional<std::string> split_kind;
    std::optional<bool> with_replacement;
    std::optional<bool> shared_instances;
    std::optional<bool> overlapping_windows;
    std::optional<bool> respects_time;
    std::optional<bool> respects_groups;
    std::optional<Region> region;               // evaluate: the scored region
    std::optional<std::string> validation_handling;  // split_before_fit | split_after_fit
    std::optional<Region> monitors;             // train: early-stopping region
    std::vector<FeatureDecl> features;          // collect
    std::vector<std::string> drop;              // feature names removed by this step
};

struct ManifestStep {
    std::string id;
    StepKind kind = StepKind::collect;
    std::vector<Region> fit_inputs;
    StepAttributes attributes;
};

struct Manifest {
    TaskContext context;
    std::vector<ManifestStep> steps;
};

struct Finding {
    std::string rule_id;
    Category category = Category::normalization;
    Severity severity = Severity::violation;
    std::string step_id;
    std::string message;
};

/// Structural defects, all of them, with JSON-pointer locations.
class ManifestError : public ParseError {
public:
    explicit ManifestError(std::vector<std::string> defects);
    const std::vector<std::string>& defects() const noexcept { return defects_; }

private:
    std::vector<std::string> defects_;
};

const char* to_string(Paradigm p);
const char* to_string(Axis a);
const char* to_string(TargetRole r);
const char* to_string(StepKind k);
const char* to_string(Region r);
const char* to_string(Category c);
const char* to_string(Severity s);

/// Parses and structurally validates a manifest document. Throws ParseError
/// (malformed JSON, with line and column) or ManifestError.
Manifest parse_manifest(const std::string& text);
Manifest load_manifest(const std::string& path);

/// Findings ordered by step position, then rule.
std::vector<Finding> lint(const Manifest& manifest);
std::vector<Finding> lint(const std::vector<ManifestStep>& steps, const TaskContext& ctx);

bool has_violation(const std::vector<Finding>& findings);

std::string findings_jsonl(const std::vector<Finding>& findings);
std::string findings_table(const std::vector<Finding>& findings);

}  // namespace leaklab::lint
