#pragma once

#include <functional>
#include <string>
#include <vector>

#include "leaklab/model.hpp"
#include "leaklab/pipeline.hpp"
#include "leaklab/synth.hpp"

namespace leaklab {

enum class ExperimentKind {
    frankenstein, label_delta, smote_overlap, normalization_shift, set_intersection, window_overlap,
    distribution_shift
};

const char* to_string(ExperimentKind k);
ExperimentKind experiment_kind_from_string(const std::string& name);  // ConfigError when unknown
const std::vector<ExperimentKind>& all_experiment_kinds();

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::label_delta;
    std::vector<double> sweep;
    int repeats = 10;
    int folds = 5;
    BlobConfig blob;      // blob.seed is replaced per repeat
    TrainConfig train;    // train.seed is replaced per execution
    Seed seed = 7;
    int threads = 0;      // 0: one per hardware thread

    double eval_fraction = 0.2;         // holdout experiments
    FrankensteinPlan plan;              // frankenstein (plan.seed is replaced per repeat)
    Index smote_k = 5;
    double minority_fraction = 0.25;    // smote_overlap: expected share of class 1
    int n_sources = 2;                  // distribution_shift
    double drift_phase = 1.5707963267948966;  // window_overlap: radians per window

    void validate() const;
};

/// Calibrated defaults for one experiment; the sweep mirrors the figure axis.
ExperimentConfig default_config(ExperimentKind kind);

/// Overlays a JSON document on the defaults of its "kind" (or of fallback when
/// the document has none). Unknown keys are config errors.
ExperimentConfig config_from_json(const std::string& text, ExperimentKind fallback);
std::string config_to_json(const ExperimentConfig& cfg);

struct RawAccuracy {
    double param = 0.0;
    std::string condition;  // leaky | clean
    int repeat = 0;
    int fold = 0;
    double accuracy = 0.0;
};

struct TrendPoint {
    double param = 0.0;
    std::string condition;
    double mean = 0.0;
    double std = 0.0;
    std::vector<double> raw;
};

struct TrendSeries {
    ExperimentKind kind = ExperimentKind::label_delta;
    std::vector<RawAccuracy> raw;
    std::vector<TrendPoint> points;  // sweep order, leaky before clean
    std::vector<AuditLog> audits;

    const TrendPoint& at(double param, const std::string& condition) const;
    std::vector<double> means(const std::string& condition) const;
    std::vector<double> stds(const std::string& condition) const;
};

struct Aggregate {
    double mean = 0.0;
    double std = 0.0;
};

/// Mean and sample standard deviation (n - 1); std is 0 for one value.
Aggregate aggregate(const std::vector<double>& values);

TrendSeries run_frankenstein(const ExperimentConfig& cfg);
TrendSeries run_label_delta(const ExperimentConfig& cfg);
TrendSeries run_smote_overlap(const ExperimentConfig& cfg);
TrendSeries run_normalization_shift(const ExperimentConfig& cfg);
TrendSeries run_set_intersection(const ExperimentConfig& cfg);
TrendSeries run_window_overlap(const ExperimentConfig& cfg);
TrendSeries run_distribution_shift(const ExperimentConfig& cfg);
TrendSeries run_experiment(const ExperimentConfig& cfg);

std::string raw_csv(const TrendSeries& t);
std::string summary_csv(const TrendSeries& t);
std::string audit_jsonl(const TrendSeries& t);
std::string summary_table(const TrendSeries& t);

/// Runs body(i) for i in [0, n) on up to `threads` workers. The first exception
/// by index is rethrown after every worker has stopped.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

}  // namespace leaklab
