#pragma once
// Hand-rolled generators for the property tests. Each draws from a seeded
// mt19937_64 so a failing case is reproduced by its seed alone.

#include <algorithm>
#include <numeric>
#include <random>

#include "leaklab/core.hpp"
#include "leaklab/rng.hpp"

namespace leaklab::testgen {

struct Shape {
    Index min_rows = 4, max_rows = 60;
    Index min_cols = 1, max_cols = 6;
    double missing = 0.0;      // per-cell probability
    double duplicates = 0.0;   // per-row probability of copying an earlier row
    bool integer_values = false;  // small integers: forces distance ties
    int sources = 0;           // 0: no source_id
    int groups = 0;            // 0: no group_id
    bool times = false;        // time_index = a random permutation of 0..n-1
};

inline Index draw(Rng& rng, Index lo, Index hi) { return std::uniform_int_distribution<Index>(lo, hi)(rng); }

inline IndexList iota(Index n) {
    IndexList v(static_cast<std::size_t>(n));
    std::iota(v.begin(), v.end(), Index{0});
    return v;
}

/// Labels contain both classes; provenance ids are 0..n-1 except for copies.
inline Dataset dataset(Rng& rng, const Shape& s = {}) {
    const Index n = draw(rng, std::max<Index>(s.min_rows, 2), s.max_rows);
    const Index d = draw(rng, s.min_cols, s.max_cols);
    std::normal_distribution<double> normal(0.0, 1.5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Matrix x(n, d);
    Labels y(n);
    std::vector<Metadata> meta(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        y(i) = unit(rng) < 0.5 ? 0 : 1;
        for (Index j = 0; j < d; ++j)
            x(i, j) = s.integer_values ? static_cast<double>(draw(rng, -3, 3)) : normal(rng) + (y(i) ? 0.7 : -0.7);
        auto& m = meta[static_cast<std::size_t>(i)];
        m.provenance_id = i;
        if (i > 0 && unit(rng) < s.duplicates) {
            const Index src = draw(rng, 0, i - 1);
            x.row(i) = x.row(src);
            y(i) = y(src);
            m.provenance_id = meta[static_cast<std::size_t>(src)].provenance_id;
        }
        if (s.sources) m.source_id = draw(rng, 0, s.sources - 1);
        if (s.groups) m.group_id = draw(rng, 0, s.groups - 1);
    }
    y(0) = 0;
    y(n - 1) = 1;
    if (s.times) {
        IndexList t = iota(n);
        std::shuffle(t.begin(), t.end(), rng);
        for (Index i = 0; i < n; ++i) meta[static_cast<std::size_t>(i)].time_index = t[static_cast<std::size_t>(i)];
    }
    std::optional<Mask> mask;
    if (s.missing > 0) {
        Mask m(n, d);
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < d; ++j) m(i, j) = unit(rng) < s.missing;
        mask = m;
    }
    return Dataset(std::move(x), std::move(y), std::move(meta), std::move(mask));
}

/// A random subset of 0..n-1 of at least min_size rows, sorted.
inline IndexList subset(Rng& rng, Index n, Index min_size = 1) {
    IndexList all = iota(n);
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(static_cast<std::size_t>(draw(rng, std::min(min_size, n), n)));
    std::sort(all.begin(), all.end());
    return all;
}

/// ds with every feature of the given rows replaced by arbitrary finite values.
inline Dataset scramble_rows(const Dataset& ds, const IndexList& rows, Rng& rng) {
    std::uniform_real_distribution<double> wild(-1e3, 1e3);
    Matrix x = ds.features();
    for (Index r : rows)
        for (Index j = 0; j < x.cols(); ++j) x(r, j) = wild(rng);
    return ds.with_features(std::move(x));
}

}  // namespace leaklab::testgen
