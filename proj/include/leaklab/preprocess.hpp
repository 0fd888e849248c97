#pragma once

#include <cmath>
#include <string>

#include "leaklab/core.hpp"

namespace leaklab {

enum class PreprocKind { standardize, minmax, knn_impute, moving_average, ttest_select };

const char* to_string(PreprocKind kind);
PreprocKind preproc_kind_from_string(const std::string& name);

inline constexpr double kScaleEpsilon = 1e-12;

/// Learned parameters Q of a data-dependent transform. Only the fields of the
/// matching kind are populated.
struct PreprocParams {
    PreprocKind kind = PreprocKind::standardize;
    Vector mu, sigma;         // standardize
    Vector min, max;          // minmax
    IndexList donor_rows;     // knn_impute: rows allowed to donate values
    Index k = 0;              // knn_impute
    Index window = 0;         // moving_average
    IndexList selected;       // ttest_select, ascending
    Index fitted_on = 0;
    bool supervised = false;  // true only for ttest_select

    std::string to_json() const;
    friend bool operator==(const PreprocParams&, const PreprocParams&);
};

// Column statistics on any dense expression; used by the fits below.

template <typename Derived>
auto column_mean(const Eigen::MatrixBase<Derived>& x) {
    return (x.colwise().sum() / static_cast<typename Derived::Scalar>(x.rows())).eval();
}

/// Population (divide-by-n) standard deviation per column.
template <typename Derived>
auto column_population_std(const Eigen::MatrixBase<Derived>& x) {
    using S = typename Derived::Scalar;
    const auto mu = column_mean(x);
    return ((x.rowwise() - mu).array().square().colwise().sum() / static_cast<S>(x.rows()))
        .sqrt()
        .matrix()
        .eval();
}

/// Welch t statistic of a against b (means of a minus b).
template <typename DerivedA, typename DerivedB>
double welch_t(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double ma = a.mean();
    const double mb = b.mean();
    const double va = na > 1 ? (a.array() - ma).square().sum() / (na - 1) : 0.0;
    const double vb = nb > 1 ? (b.array() - mb).square().sum() / (nb - 1) : 0.0;
    const double se = std::sqrt(va / na + vb / nb);
    if (se == 0.0) return ma == mb ? 0.0 : (ma > mb ? HUGE_VAL : -HUGE_VAL);
    return (ma - mb) / se;
}

/// Every fit reads only the listed rows of ds. The overloads without rows fit
/// on every row.
PreprocParams fit_standardizer(const Dataset& ds, const IndexList& rows);
PreprocParams fit_standardizer(const Dataset& ds);
Dataset apply_standardizer(const PreprocParams& p, const Dataset& ds);

PreprocParams fit_minmax(const Dataset& ds, const IndexList& rows);
PreprocParams fit_minmax(const Dataset& ds);
Dataset apply_minmax(const PreprocParams& p, const Dataset& ds);

/// Fills each missing cell from the k nearest donors among fit_rows that observe
/// that column. Distance is Euclidean over mutually observed columns.
Dataset knn_impute(const Dataset& ds, Index k, const IndexList& fit_rows);

/// Centered moving average of odd width w over the given row sequence,
/// truncated at both ends. Rows must carry strictly increasing time_index.
Dataset moving_average_smooth(const Dataset& ds, Index w);

/// Selects the top_k columns by |Welch t| between classes; reads labels.
PreprocParams fit_ttest_selector(const Dataset& ds, const IndexList& rows, Index top_k);
PreprocParams fit_ttest_selector(const Dataset& ds, Index top_k);
Dataset apply_selector(const PreprocParams& p, const Dataset& ds);

/// Dispatches to the apply matching p.kind (standardize, minmax, ttest_select).
Dataset apply(const PreprocParams& p, const Dataset& ds);

}  // namespace leaklab
