#pragma once
// Random pipeline plans over random datasets, for the scope metamorphic laws.

#include <algorithm>
#include <string>

#include "leaklab/pipeline.hpp"
#include "support/gen.hpp"

namespace leaklab::testgen {

struct RandomCase {
    Dataset data;
    PipelinePlan plan;
    bool data_dependent = false;  // some step learns from data before training
    std::string label;            // short description for failure messages
};

inline RandomCase random_case(Seed seed) {
    Rng rng = make_rng(seed);
    std::bernoulli_distribution coin(0.5);
    RandomCase c;

    const bool impute = coin(rng);
    const bool smooth = std::bernoulli_distribution(0.3)(rng);
    Shape shape;
    shape.min_rows = 40;
    shape.max_rows = 90;
    shape.min_cols = 2;
    shape.max_cols = 5;
    shape.missing = impute ? 0.1 : 0.0;
    shape.sources = 3;
    c.data = dataset(rng, shape);
    // Rows in time order so smoothing and temporal splits both apply.
    std::vector<Metadata> meta = c.data.meta();
    for (std::size_t i = 0; i < meta.size(); ++i) meta[i].time_index = static_cast<Index>(i);
    c.data = Dataset(c.data.features(), c.data.labels(), std::move(meta), c.data.missing());

    std::vector<PlanStep> pre;
    if (impute) {
        PreprocessStep s;
        s.kind = PreprocKind::knn_impute;
        s.k = draw(rng, 1, 4);
        pre.push_back(s);
        c.label += "knn ";
    }
    if (smooth) {
        // Synthetic rows carry no time, so smoothing runs before any resampler.
        PreprocessStep s;
        s.kind = PreprocKind::moving_average;
        s.window = 2 * draw(rng, 1, 2) + 1;
        pre.push_back(s);
        c.label += "smooth ";
    }
    std::vector<PlanStep> shuffled;
    if (coin(rng)) shuffled.push_back(PreprocessStep{PreprocKind::standardize});
    if (coin(rng)) shuffled.push_back(PreprocessStep{PreprocKind::minmax});
    if (coin(rng)) {
        PreprocessStep s;
        s.kind = PreprocKind::ttest_select;
        s.top_k = draw(rng, 1, c.data.cols());
        shuffled.push_back(s);
    }
    if (coin(rng)) {
        SynthesizeStep s;
        s.method = coin(rng) ? SynthesizeStep::Method::smote : SynthesizeStep::Method::centroid;
        s.k = 2;
        if (s.method == SynthesizeStep::Method::smote) s.amount = draw(rng, 1, 15);
        shuffled.push_back(s);
    }
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    for (auto& s : shuffled) {
        c.label += step_kind(s) + ' ';
        pre.push_back(std::move(s));
    }
    c.data_dependent = !pre.empty();

    SplitStep split;
    switch (draw(rng, 0, 3)) {
        case 0:
            split.strategy = SplitStep::Strategy::holdout;
            split.eval_fraction = 0.2 + 0.2 * static_cast<double>(draw(rng, 0, 2));
            break;
        case 1:
            split.strategy = SplitStep::Strategy::kfold;
            split.folds = draw(rng, 2, 5);
            split.fold = draw(rng, 0, split.folds - 1);
            break;
        case 2:
            split.strategy = SplitStep::Strategy::group;
            split.axis = GroupAxis::source;
            split.held_out = draw(rng, 0, 2);
            break;
        default:
            split.strategy = SplitStep::Strategy::temporal;
            split.cut_time = c.data.rows() * draw(rng, 5, 8) / 10;
            break;
    }
    c.label += "| split " + std::to_string(static_cast<int>(split.strategy));

    TrainStep train;
    train.config.hidden1 = 4;
    train.config.hidden2 = 3;
    train.config.max_epochs = 15;
    train.config.learning_rate = 0.2;
    train.uses_validation = coin(rng);
    if (train.uses_validation) c.label += " +val";

    // The split may sit anywhere before training; the runner decides it first.
    const auto at = static_cast<std::size_t>(draw(rng, 0, static_cast<Index>(pre.size())));
    pre.insert(pre.begin() + static_cast<std::ptrdiff_t>(at), split);
    c.plan.steps = std::move(pre);
    c.plan.steps.push_back(train);
    c.plan.steps.push_back(EvaluateStep{});
    return c;
}

/// A case whose split, resamplers and class coverage all succeed. Draws that
/// the library rightly rejects (a source held out that is absent, too few
/// minority rows for SMOTE) are skipped by bumping the seed.
template <typename Fn>
void for_each_runnable_case(int count, Seed first, Fn&& fn) {
    int done = 0;
    for (Seed s = first; done < count; ++s) {
        RandomCase c = random_case(s);
        ExecutionResult clean;
        try {
            clean = execute(c.plan, c.data, ScopePolicy{}, s);
        } catch (const InsufficientDataError&) {
            continue;
        } catch (const ConfigError&) {
            continue;
        } catch (const ClassCoverageError&) {
            continue;
        }
        fn(s, c, clean);
        ++done;
    }
}

/// Rewrite every feature of the eval rows; labels and metadata stay.
inline Dataset rewrite_eval_rows(const Dataset& ds, const IndexList& eval, Seed seed) {
    Rng rng = make_rng(seed);
    return scramble_rows(ds, eval, rng);
}

}  // namespace leaklab::testgen
