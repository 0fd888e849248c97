#include "leaklab/preprocess.hpp"

#include <algorithm>
#include <cstring>
#include <limits>
#include <numeric>

#include "json.hpp"

namespace leaklab {

const char* to_string(PreprocKind kind) {
    switch (kind) {
        case PreprocKind::standardize: return "standardize";
        case PreprocKind::minmax: return "minmax";
        case PreprocKind::knn_impute: return "knn_impute";
        case PreprocKind::moving_average: return "moving_average";
        case PreprocKind::ttest_select: return "ttest_select";
    }
    return "unknown";
}

PreprocKind preproc_kind_from_string(const std::string& name) {
    for (auto k : {PreprocKind::standardize, PreprocKind::minmax, PreprocKind::knn_impute,
                   PreprocKind::moving_average, PreprocKind::ttest_select}) {
        if (name == to_string(k)) return k;
    }
    throw ConfigError("unknown preprocessing kind '" + name + "'");
}

namespace {

std::vector<double> to_vec(const Vector& v) { return {v.data(), v.data() + v.size()}; }

void check_rows(const Dataset& ds, const IndexList& rows, const char* who) {
    for (Index r : rows) {
        if (r < 0 || r >= ds.rows())
            throw IndexError(std::string(who) + ": row " + std::to_string(r) + " out of range");
    }
}

Matrix observed_rows(const Dataset& ds, const IndexList& rows, const char* who) {
    check_rows(ds, rows, who);
    if (ds.missing()) {
        for (Index r : rows)
            if (ds.missing()->row(r).any())
                throw PreconditionError(std::string(who) + ": row " + std::to_string(r) +
                                        " has missing values; impute first");
    }
    return ds.features()(rows, Eigen::all);
}

IndexList all_rows(const Dataset& ds) {
    IndexList rows(static_cast<std::size_t>(ds.rows()));
    std::iota(rows.begin(), rows.end(), Index{0});
    return rows;
}

void check_cols(const Dataset& ds, Index expected, const char* who) {
    if (ds.cols() != expected)
        throw DimensionError(std::string(who) + ": dataset has " + std::to_string(ds.cols()) +
                             " columns, parameters expect " + std::to_string(expected));
}

}  // namespace

std::string PreprocParams::to_json() const {
    nlohmann::json j;
    j["kind"] = leaklab::to_string(kind);
    j["fitted_on"] = fitted_on;
    j["supervised"] = supervised;
    switch (kind) {
        case PreprocKind::standardize:
            j["mu"] = to_vec(mu);
            j["sigma"] = to_vec(sigma);
            break;
        case PreprocKind::minmax:
            j["min"] = to_vec(min);
            j["max"] = to_vec(max);
            break;
        case PreprocKind::knn_impute:
            j["k"] = k;
            j["donor_rows"] = donor_rows;
            break;
        case PreprocKind::moving_average:
            j["window"] = window;
            break;
        case PreprocKind::ttest_select:
            j["selected"] = selected;
            break;
    }
    return j.dump();
}

bool operator==(const PreprocParams& a, const PreprocParams& b) {
    auto same = [](const Vector& x, const Vector& y) {
        return x.size() == y.size() &&
               (x.size() == 0 ||
                std::memcmp(x.data(), y.data(), sizeof(double) * static_cast<std::size_t>(x.size())) == 0);
    };
    return a.kind == b.kind && same(a.mu, b.mu) && same(a.sigma, b.sigma) && same(a.min, b.min) &&
           same(a.max, b.max) && a.donor_rows == b.donor_rows && a.k == b.k &&
           a.window == b.window && a.selected == b.selected && a.fitted_on == b.fitted_on &&
           a.supervised == b.supervised;
}

// ---------------------------------------------------------------------------

PreprocParams fit_standardizer(const Dataset& ds, const IndexList& rows) {
    if (rows.size() < 2)
        throw InsufficientDataError("fit_standardizer: need at least 2 rows, got " +
                                    std::to_string(rows.size()));
    const Matrix x = observed_rows(ds, rows, "fit_standardizer");
    PreprocParams p;
    p.kind = PreprocKind::standardize;
    p.mu = column_mean(x).transpose();
    p.sigma = column_population_std(x).transpose();
    p.fitted_on = static_cast<Index>(rows.size());
    return p;
}

PreprocParams fit_standardizer(const Dataset& ds) { return fit_standardizer(ds, all_rows(ds)); }

Dataset apply_standardizer(const PreprocParams& p, const Dataset& ds) {
    if (p.kind != PreprocKind::standardize) throw ConfigError("apply_standardizer: wrong parameter kind");
    check_cols(ds, p.mu.size(), "apply_standardizer");
    const Eigen::RowVectorXd scale = p.sigma.cwiseMax(kScaleEpsilon).transpose();
    Matrix x = (ds.features().rowwise() - p.mu.transpose()).array().rowwise() / scale.array();
    return ds.with_features(std::move(x));
}

PreprocParams fit_minmax(const Dataset& ds, const IndexList& rows) {
    if (rows.empty()) throw InsufficientDataError("fit_minmax: empty fit set");
    const Matrix x = observed_rows(ds, rows, "fit_minmax");
    PreprocParams p;
    p.kind = PreprocKind::minmax;
    p.min = x.colwise().minCoeff().transpose();
    p.max = x.colwise().maxCoeff().transpose();
    p.fitted_on = static_cast<Index>(rows.size());
    return p;
}

PreprocParams fit_minmax(const Dataset& ds) { return fit_minmax(ds, all_rows(ds)); }

Dataset apply_minmax(const PreprocParams& p, const Dataset& ds) {
    if (p.kind != PreprocKind::minmax) throw ConfigError("apply_minmax: wrong parameter kind");
    check_cols(ds, p.min.size(), "apply_minmax");
    const Eigen::RowVectorXd range = (p.max - p.min).cwiseMax(kScaleEpsilon).transpose();
    Matrix x = (ds.features().rowwise() - p.min.transpose()).array().rowwise() / range.array();
    return ds.with_features(std::move(x));
}

// ---------------------------------------------------------------------------

Dataset knn_impute(const Dataset& ds, Index k, const IndexList& fit_rows) {
    if (k < 1) throw ConfigError("knn_impute: k must be >= 1");
    check_rows(ds, fit_rows, "knn_impute");
    if (!ds.has_missing()) return ds.with_missing(std::nullopt);

    const Mask& miss = *ds.missing();
    const Matrix& x = ds.features();
    IndexList donors_sorted = fit_rows;
    std::sort(donors_sorted.begin(), donors_sorted.end());
    donors_sorted.erase(std::unique(donors_sorted.begin(), donors_sorted.end()), donors_sorted.end());

    for (Index j = 0; j < ds.cols(); ++j) {
        if (!miss.col(j).any()) continue;
        const bool has_donor = std::any_of(donors_sorted.begin(), donors_sorted.end(),
                                           [&](Index r) { return !miss(r, j); });
        if (!has_donor)
            throw DonorMissingError("knn_impute: column " + std::to_string(j) +
                                    " has no observed value among the fit rows");
    }

    const double inf = std::numeric_limits<double>::infinity();
    Matrix out = x;
    struct Candidate {
        double dist;
        Index row;
    };
    std::vector<Candidate> cand;
    for (Index i = 0; i < ds.rows(); ++i) {
        if (!miss.row(i).any()) continue;
        // Distances to every donor over mutually observed columns (original values).
        std::vector<double> dist(donors_sorted.size());
        for (std::size_t c = 0; c < donors_sorted.size(); ++c) {
            const Index r = donors_sorted[c];
            const auto both = (!miss.row(i)) && (!miss.row(r));
            if (!both.any() || r == i) {
                dist[c] = inf;
                continue;
            }
            double s = 0.0;
            for (Index q = 0; q < ds.cols(); ++q)
                if (both(q)) s += (x(i, q) - x(r, q)) * (x(i, q) - x(r, q));
            dist[c] = std::sqrt(s);
        }
        for (Index j = 0; j < ds.cols(); ++j) {
            if (!miss(i, j)) continue;
            cand.clear();
            for (std::size_t c = 0; c < donors_sorted.size(); ++c) {
                const Index r = donors_sorted[c];
                if (r != i && !miss(r, j)) cand.push_back({dist[c], r});
            }
            const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), cand.size());
            std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take), cand.end(),
                              [](const Candidate& a, const Candidate& b) {
                                  return a.dist < b.dist || (a.dist == b.dist && a.row < b.row);
                              });
            // Zero distance: exact matches decide alone. All-infinite: plain mean.
            double num = 0.0, den = 0.0;
            bool exact = false;
            for (std::size_t c = 0; c < take; ++c)
                if (cand[c].dist == 0.0) {
                    exact = true;
                    num += x(cand[c].row, j);
                    den += 1.0;
                }
            if (!exact) {
                for (std::size_t c = 0; c < take; ++c) {
                    if (cand[c].dist == inf) continue;
                    num += x(cand[c].row, j) / cand[c].dist;
                    den += 1.0 / cand[c].dist;
                }
            }
            if (den == 0.0) {
                for (std::size_t c = 0; c < take; ++c) num += x(cand[c].row, j);
                den = static_cast<double>(take);
            }
            out(i, j) = num / den;
        }
    }
    return Dataset(std::move(out), ds.labels(), ds.meta(), std::nullopt);
}

// ---------------------------------------------------------------------------

Dataset moving_average_smooth(const Dataset& ds, Index w) {
    if (w < 1 || w % 2 == 0)
        throw ConfigError("moving_average_smooth: window must be odd and >= 1, got " + std::to_string(w));
    for (Index i = 0; i < ds.rows(); ++i) {
        const auto& t = ds.meta()[static_cast<std::size_t>(i)].time_index;
        if (!t) throw MetadataError("moving_average_smooth: row " + std::to_string(i) + " has no time_index");
        if (i > 0 && !(*ds.meta()[static_cast<std::size_t>(i - 1)].time_index < *t))
            throw MetadataError("moving_average_smooth: time_index not strictly increasing at row " +
                                std::to_string(i));
    }
    if (ds.has_missing()) throw PreconditionError("moving_average_smooth: impute missing values first");
    const Index half = w / 2;
    const Index n = ds.rows();
    Matrix out(n, ds.cols());
    for (Index i = 0; i < n; ++i) {
        const Index lo = std::max<Index>(0, i - half);
        const Index hi = std::min<Index>(n - 1, i + half);
        out.row(i) = ds.features().middleRows(lo, hi - lo + 1).colwise().mean();
    }
    return ds.with_features(std::move(out));
}

// ---------------------------------------------------------------------------

PreprocParams fit_ttest_selector(const Dataset& ds, const IndexList& rows, Index top_k) {
    if (top_k < 1 || top_k > ds.cols())
        throw ConfigError("fit_ttest_selector: top_k must lie in [1, " + std::to_string(ds.cols()) + "]");
    const Matrix x = observed_rows(ds, rows, "fit_ttest_selector");
    IndexList c0, c1;
    for (std::size_t i = 0; i < rows.size(); ++i)
        (ds.labels()(rows[i]) == 0 ? c0 : c1).push_back(static_cast<Index>(i));
    if (c0.empty() || c1.empty())
        throw ClassCoverageError("fit_ttest_selector: fit rows contain a single class");

    std::vector<std::pair<double, Index>> score;
    for (Index j = 0; j < ds.cols(); ++j) {
        const Vector a = x(c0, j);
        const Vector b = x(c1, j);
        score.emplace_back(std::abs(welch_t(a, b)), j);
    }
    std::stable_sort(score.begin(), score.end(),
                     [](const auto& l, const auto& r) { return l.first > r.first; });
    PreprocParams p;
    p.kind = PreprocKind::ttest_select;
    for (Index q = 0; q < top_k; ++q) p.selected.push_back(score[static_cast<std::size_t>(q)].second);
    std::sort(p.selected.begin(), p.selected.end());
    p.fitted_on = static_cast<Index>(rows.size());
    p.supervised = true;
    return p;
}

PreprocParams fit_ttest_selector(const Dataset& ds, Index top_k) {
    return fit_ttest_selector(ds, all_rows(ds), top_k);
}

Dataset apply_selector(const PreprocParams& p, const Dataset& ds) {
    if (p.kind != PreprocKind::ttest_select) throw ConfigError("apply_selector: wrong parameter kind");
    for (Index j : p.selected)
        if (j < 0 || j >= ds.cols())
            throw DimensionError("apply_selector: selected column " + std::to_string(j) + " out of range");
    Matrix x = ds.features()(Eigen::all, p.selected);
    std::optional<Mask> mask;
    if (ds.missing()) mask = Mask((*ds.missing())(Eigen::all, p.selected));
    return Dataset(std::move(x), ds.labels(), ds.meta(), std::move(mask));
}

Dataset apply(const PreprocParams& p, const Dataset& ds) {
    switch (p.kind) {
        case PreprocKind::standardize: return apply_standardizer(p, ds);
        case PreprocKind::minmax: return apply_minmax(p, ds);
        case PreprocKind::ttest_select: return apply_selector(p, ds);
        default: break;
    }
    throw ConfigError(std::string("apply: no stateless apply for kind ") + to_string(p.kind));
}

}  // namespace leaklab
