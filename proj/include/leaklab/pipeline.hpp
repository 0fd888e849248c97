#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "leaklab/core.hpp"
#include "leaklab/model.hpp"
#include "leaklab/preprocess.hpp"
#include "leaklab/resample.hpp"
#include "leaklab/split.hpp"

namespace leaklab {

enum class ScopeMode { clean, leaky };
enum class ValidationHandling { split_before_fit, split_after_fit };

struct ScopePolicy {
    ScopeMode mode = ScopeMode::clean;
    ValidationHandling validation = ValidationHandling::split_before_fit;
    // Leaky mode only: share of the eval rows (taken in eval order) visible to
    // fitting and resampling. 1 means every row.
    double leak_fraction = 1.0;

    std::string describe() const;
};

struct SynthesizeStep {
    enum class Method { smote, centroid };
    Method method = Method::smote;
    Index k = 5;
    // smote: rows to generate; centroid: clusters. Unset balances the classes
    // of the training rows.
    std::optional<Index> amount;
};

struct PreprocessStep {
    PreprocKind kind = PreprocKind::standardize;
    Index k = 5;       // knn_impute
    Index window = 3;  // moving_average
    Index top_k = 5;   // ttest_select
};

struct SplitStep {
    enum class Strategy { holdout, kfold, with_replacement, group, temporal, given };
    Strategy strategy = Strategy::holdout;
    double eval_fraction = 0.2;
    bool stratified = true;
    Index folds = 5;
    Index fold = 0;
    GroupAxis axis = GroupAxis::source;
    std::int64_t held_out = 0;
    Index cut_time = 0;
    SplitPair given;  // Strategy::given
};

struct TrainStep {
    TrainConfig config;
    bool uses_validation = false;
    double validation_fraction = 0.2;
};

struct EvaluateStep {
    // Drop eval rows that exactly duplicate a training row before scoring.
    bool dedup_against_train = false;
};

using PlanStep = std::variant<SynthesizeStep, PreprocessStep, SplitStep, TrainStep, EvaluateStep>;

struct PipelinePlan {
    std::vector<PlanStep> steps;
    // The task claims generalization across sources: training on any source
    // that also appears in eval counts as leakage.
    bool require_source_disjoint = false;

    void validate() const;
};

std::string step_kind(const PlanStep& step);

enum class AuditRole { split, fit, resample, train, validation, evaluate };
const char* to_string(AuditRole role);
AuditRole audit_role_from_string(const std::string& name);

struct AuditRecord {
    int step = 0;
    std::string kind;
    AuditRole role = AuditRole::fit;
    ProvenanceSet saw_provenance;
    std::vector<std::int64_t> saw_sources;  // sorted, unique; train records only
    bool violation = false;
};

struct Violation {
    int step = 0;
    std::string kind;
    ProvenanceSet offending;
    std::string reason;
};

/// What every fitted component of one execution saw, plus the sets it must not see.
struct AuditLog {
    std::string run;
    std::string scope;
    std::string strategy;
    ProvenanceSet eval_provenance;
    ProvenanceSet validation_provenance;
    std::vector<std::int64_t> eval_sources;
    bool require_source_disjoint = false;
    std::vector<AuditRecord> records;

    AuditRecord& add(std::string kind, AuditRole role, ProvenanceSet saw,
                     std::vector<std::int64_t> sources = {});

    /// One JSON object per line: a split header, then one line per record.
    std::string to_jsonl() const;
};

/// Parses concatenated to_jsonl output back into logs, one per run.
std::vector<AuditLog> parse_audit_jsonl(const std::string& text);

/// Flags fit/resample/train records that saw eval provenance, fit/resample
/// records that saw validation provenance, a validation monitor overlapping
/// eval, and (when required) training sources shared with eval. Sets each
/// record's violation flag.
std::vector<Violation> audit_check(AuditLog& log);
/// Same check without touching the log.
std::vector<Violation> audit_violations(const AuditLog& log);
/// Checks the log against the eval rows of an explicit split of ds.
std::vector<Violation> audit_check(const AuditLog& log, const Dataset& ds, const SplitPair& split);

struct ExecutionResult {
    double accuracy = 0.0;
    Index eval_rows = 0;  // rows actually scored
    AuditLog audit;
    SplitPair split;
    std::vector<PreprocParams> params;
    std::vector<ResampleReport> resamples;
    Mlp<double> model;
    Dataset training;  // rows the model was fit on, after every transform
};

/// Runs plan on ds under policy. The split is computed first on the raw rows;
/// the policy then decides which rows every data-dependent step may learn from.
ExecutionResult execute(const PipelinePlan& plan, const Dataset& ds, const ScopePolicy& policy, Seed seed);

}  // namespace leaklab
