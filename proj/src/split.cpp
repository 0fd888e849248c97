#include "leaklab/split.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_set>

namespace leaklab {

SplitPair FoldSet::pair(Index f) const {
    if (f < 0 || f >= size()) throw IndexError("fold " + std::to_string(f) + " out of range");
    SplitPair p;
    p.eval_indices = folds[static_cast<std::size_t>(f)];
    for (Index g = 0; g < size(); ++g)
        if (g != f)
            p.train_indices.insert(p.train_indices.end(), folds[static_cast<std::size_t>(g)].begin(),
                                   folds[static_cast<std::size_t>(g)].end());
    p.strategy = "kfold";
    return p;
}

std::vector<Index> largest_remainder(Index total, const std::vector<Index>& weights) {
    const Index sum = std::accumulate(weights.begin(), weights.end(), Index{0});
    std::vector<Index> out(weights.size(), 0);
    if (sum == 0) return out;
    std::vector<std::pair<double, std::size_t>> frac;
    Index given = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double exact = static_cast<double>(total) * static_cast<double>(weights[i]) / static_cast<double>(sum);
        out[i] = static_cast<Index>(std::floor(exact));
        given += out[i];
        frac.emplace_back(exact - std::floor(exact), i);
    }
    std::stable_sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t q = 0; given < total && q < frac.size(); ++q, ++given) ++out[frac[q].second];
    return out;
}

namespace {

IndexList iota_list(Index n) {
    IndexList v(static_cast<std::size_t>(n));
    std::iota(v.begin(), v.end(), Index{0});
    return v;
}

std::array<IndexList, 2> by_class(const Dataset& ds, const IndexList& rows) {
    std::array<IndexList, 2> out;
    for (Index r : rows) out[static_cast<std::size_t>(ds.labels()(r))].push_back(r);
    return out;
}

void check_fraction(double f, const char* who) {
    if (!(f > 0.0 && f < 1.0))
        throw ConfigError(std::string(who) + ": eval fraction must lie in (0, 1), got " + std::to_string(f));
}

// Stratified choice of `take` rows out of `rows`; returns {rest, chosen}.
SplitPair stratified_pick(const Dataset& ds, const IndexList& rows, Index take, Rng& rng) {
    auto classes = by_class(ds, rows);
    const auto quota = largest_remainder(
        take, {static_cast<Index>(classes[0].size()), static_cast<Index>(classes[1].size())});
    SplitPair p;
    for (std::size_t c = 0; c < 2; ++c) {
        std::shuffle(classes[c].begin(), classes[c].end(), rng);
        const auto q = static_cast<std::ptrdiff_t>(quota[c]);
        p.eval_indices.insert(p.eval_indices.end(), classes[c].begin(), classes[c].begin() + q);
        p.train_indices.insert(p.train_indices.end(), classes[c].begin() + q, classes[c].end());
    }
    std::sort(p.train_indices.begin(), p.train_indices.end());
    std::sort(p.eval_indices.begin(), p.eval_indices.end());
    return p;
}

}  // namespace

SplitPair holdout(const Dataset& ds, double eval_fraction, bool stratified, Seed seed) {
    check_fraction(eval_fraction, "holdout");
    const Index n = ds.rows();
    const auto n_eval = static_cast<Index>(std::llround(eval_fraction * static_cast<double>(n)));
    if (n_eval < 1 || n_eval >= n)
        throw InsufficientDataError("holdout: " + std::to_string(n) + " rows cannot give both sides a row at fraction " +
                                    std::to_string(eval_fraction));
    Rng rng = make_rng(seed);
    SplitPair p;
    if (stratified) {
        const auto classes = by_class(ds, iota_list(n));
        if (classes[0].empty() || classes[1].empty())
            throw ClassCoverageError("holdout: stratification needs both classes present");
        p = stratified_pick(ds, iota_list(n), n_eval, rng);
    } else {
        IndexList perm = iota_list(n);
        std::shuffle(perm.begin(), perm.end(), rng);
        p.eval_indices.assign(perm.begin(), perm.begin() + n_eval);
        p.train_indices.assign(perm.begin() + n_eval, perm.end());
        std::sort(p.train_indices.begin(), p.train_indices.end());
        std::sort(p.eval_indices.begin(), p.eval_indices.end());
    }
    p.strategy = stratified ? "holdout_stratified" : "holdout";
    return p;
}

FoldSet kfold_stratified(const Dataset& ds, Index k, Seed seed) {
    const Index n = ds.rows();
    if (k < 2) throw ConfigError("kfold: k must be >= 2");
    if (k > n) throw ConfigError("kfold: k = " + std::to_string(k) + " exceeds row count " + std::to_string(n));
    Rng rng = make_rng(seed);
    auto classes = by_class(ds, iota_list(n));
    FoldSet fs;
    fs.folds.resize(static_cast<std::size_t>(k));
    fs.seed = seed;
    // One running counter across classes keeps fold sizes within one of each other.
    std::size_t slot = 0;
    for (auto& rows : classes) {
        std::shuffle(rows.begin(), rows.end(), rng);
        for (Index r : rows) fs.folds[slot++ % static_cast<std::size_t>(k)].push_back(r);
    }
    for (auto& f : fs.folds) std::sort(f.begin(), f.end());
    return fs;
}

SplitPair sample_with_replacement_split(const Dataset& ds, double eval_fraction, Seed seed) {
    check_fraction(eval_fraction, "sample_with_replacement_split");
    const Index n = ds.rows();
    if (n < 1) throw InsufficientDataError("sample_with_replacement_split: empty dataset");
    const Index n_eval = std::max<Index>(1, std::llround(eval_fraction * static_cast<double>(n)));
    const Index n_train = std::max<Index>(1, n - n_eval);
    Rng rng = make_rng(seed);
    std::uniform_int_distribution<Index> pick(0, n - 1);
    auto draw = [&](Index count) {
        IndexList out;
        std::unordered_set<Index> seen;
        for (Index q = 0; q < count; ++q) {
            const Index r = pick(rng);
            if (seen.insert(r).second) out.push_back(r);
        }
        std::sort(out.begin(), out.end());
        return out;
    };
    SplitPair p;
    p.train_indices = draw(n_train);
    p.eval_indices = draw(n_eval);
    p.strategy = "with_replacement";
    p.leaky_strategy = true;
    return p;
}

SplitPair group_split(const Dataset& ds, GroupAxis axis, std::int64_t held_out) {
    const char* name = axis == GroupAxis::source ? "source_id" : "group_id";
    std::unordered_set<std::int64_t> ids;
    SplitPair p;
    for (Index i = 0; i < ds.rows(); ++i) {
        const auto& m = ds.meta()[static_cast<std::size_t>(i)];
        const auto& id = axis == GroupAxis::source ? m.source_id : m.group_id;
        if (!id) throw MetadataError(std::string("group_split: row ") + std::to_string(i) + " has no " + name);
        ids.insert(*id);
        (*id == held_out ? p.eval_indices : p.train_indices).push_back(i);
    }
    if (ids.size() < 2) throw InsufficientDataError(std::string("group_split: fewer than two distinct ") + name + " values");
    if (p.eval_indices.empty())
        throw ConfigError(std::string("group_split: unknown ") + name + " " + std::to_string(held_out));
    p.strategy = axis == GroupAxis::source ? "group_split_source" : "group_split_group";
    return p;
}

SplitPair temporal_split(const Dataset& ds, Index cut_time) {
    SplitPair p;
    for (Index i = 0; i < ds.rows(); ++i) {
        const auto& t = ds.meta()[static_cast<std::size_t>(i)].time_index;
        if (!t) throw MetadataError("temporal_split: row " + std::to_string(i) + " has no time_index");
        (*t < cut_time ? p.train_indices : p.eval_indices).push_back(i);
    }
    if (p.train_indices.empty()) throw InsufficientDataError("temporal_split: no row precedes the cut; train is empty");
    if (p.eval_indices.empty()) throw InsufficientDataError("temporal_split: no row at or after the cut; eval is empty");
    p.strategy = "temporal";
    return p;
}

IndexList contamination_rows(Index eval_rows, double fraction, Seed seed) {
    if (!(fraction >= 0.0 && fraction <= 1.0))
        throw ConfigError("contaminate: fraction must lie in [0, 1], got " + std::to_string(fraction));
    const auto count = static_cast<Index>(std::floor(fraction * static_cast<double>(eval_rows)));
    IndexList perm = iota_list(eval_rows);
    Rng rng = make_rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    perm.resize(static_cast<std::size_t>(count));
    std::sort(perm.begin(), perm.end());
    return perm;
}

Dataset contaminate(const Dataset& train, const Dataset& eval, double fraction, Seed seed) {
    const IndexList rows = contamination_rows(eval.rows(), fraction, seed);
    if (rows.empty()) return train;
    return concat(train, eval.subset(rows));
}

SplitPair carve_validation(const Dataset& ds, const IndexList& rows, double fraction, Seed seed) {
    check_fraction(fraction, "carve_validation");
    const auto take = static_cast<Index>(std::llround(fraction * static_cast<double>(rows.size())));
    if (take < 1 || take >= static_cast<Index>(rows.size()))
        throw InsufficientDataError("carve_validation: too few rows to carve a validation set");
    Rng rng = make_rng(seed);
    SplitPair p = stratified_pick(ds, rows, take, rng);
    p.strategy = "validation_carve";
    return p;
}

}  // namespace leaklab
