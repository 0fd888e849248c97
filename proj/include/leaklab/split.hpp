#pragma once

#include <vector>

#include "leaklab/core.hpp"
#include "leaklab/rng.hpp"

namespace leaklab {

struct FoldSet {
    std::vector<IndexList> folds;
    bool stratified = true;
    Seed seed = 0;

    Index size() const noexcept { return static_cast<Index>(folds.size()); }
    /// Fold f as evaluation, the remaining folds (in fold order) as training.
    SplitPair pair(Index f) const;
};

/// Disjoint train/eval split with |eval| = round(eval_fraction * n).
SplitPair holdout(const Dataset& ds, double eval_fraction, bool stratified, Seed seed);

/// k folds dealt class by class in shuffled order, so per-fold class counts
/// differ by at most one from proportional.
FoldSet kfold_stratified(const Dataset& ds, Index k, Seed seed);

/// Train and eval each drawn with replacement from every row, then made
/// unique within each set. The two sets usually overlap; the pair is marked leaky.
SplitPair sample_with_replacement_split(const Dataset& ds, double eval_fraction, Seed seed);

enum class GroupAxis { source, group };

/// All rows whose id on the given axis equals held_out become eval.
SplitPair group_split(const Dataset& ds, GroupAxis axis, std::int64_t held_out);

/// time_index < cut_time is train; the rest (ties included) is eval.
SplitPair temporal_split(const Dataset& ds, Index cut_time);

/// Positions into eval of floor(fraction * |eval|) rows chosen without replacement.
IndexList contamination_rows(Index eval_rows, double fraction, Seed seed);

/// train followed by exact copies of floor(fraction * |eval|) eval rows.
Dataset contaminate(const Dataset& train, const Dataset& eval, double fraction, Seed seed);

/// Stratified carve of a validation share out of the given rows; returns
/// {remaining training rows, validation rows}.
SplitPair carve_validation(const Dataset& ds, const IndexList& rows, double fraction, Seed seed);

/// Largest-remainder apportionment of total over the given weights.
std::vector<Index> largest_remainder(Index total, const std::vector<Index>& weights);

}  // namespace leaklab
