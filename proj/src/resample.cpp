#include "leaklab/resample.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

namespace leaklab {

ProvenanceSet ResampleReport::all_donors() const {
    ProvenanceSet ids;
    for (const auto& d : donors) ids.insert(ids.end(), d.begin(), d.end());
    return make_set(std::move(ids));
}

namespace {

IndexList class_rows(const Dataset& ds, const IndexList& allowed, int label, const char* who) {
    IndexList rows;
    for (Index r : allowed) {
        if (r < 0 || r >= ds.rows())
            throw IndexError(std::string(who) + ": row " + std::to_string(r) + " out of range");
        if (ds.labels()(r) == label) rows.push_back(r);
    }
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    if (ds.missing())
        for (Index r : rows)
            if (ds.missing()->row(r).any())
                throw PreconditionError(std::string(who) + ": row " + std::to_string(r) + " has missing values");
    return rows;
}

}  // namespace

ResampleReport smote(const Dataset& ds, int minority_class, Index k, Index n_new,
                     const IndexList& allowed_rows, Seed seed) {
    if (k < 1) throw ConfigError("smote: k must be >= 1");
    if (n_new < 0) throw ConfigError("smote: n_new must be >= 0");
    const IndexList minority = class_rows(ds, allowed_rows, minority_class, "smote");
    const auto m = static_cast<Index>(minority.size());
    if (m < k + 1)
        throw InsufficientDataError("smote: need at least k+1 = " + std::to_string(k + 1) +
                                    " minority rows in the allowed set, found " + std::to_string(m));

    const Matrix xm = ds.features()(minority, Eigen::all);
    const Matrix dist = pairwise_sq_dist(xm, xm);
    // Neighbour lists: k nearest other rows, ties to the lower index.
    std::vector<IndexList> neighbours(static_cast<std::size_t>(m));
    IndexList order(static_cast<std::size_t>(m));
    for (Index a = 0; a < m; ++a) {
        std::iota(order.begin(), order.end(), Index{0});
        order.erase(order.begin() + a);
        std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](Index p, Index q) {
            return dist(a, p) < dist(a, q) || (dist(a, p) == dist(a, q) && p < q);
        });
        neighbours[static_cast<std::size_t>(a)].assign(order.begin(), order.begin() + k);
        order.resize(static_cast<std::size_t>(m));
    }

    Rng rng = make_rng(seed);
    std::uniform_int_distribution<Index> pick_row(0, m - 1);
    std::uniform_int_distribution<Index> pick_nb(0, k - 1);
    std::uniform_real_distribution<double> lambda(0.0, 1.0);

    Matrix x(n_new, ds.cols());
    std::vector<Metadata> meta(static_cast<std::size_t>(n_new));
    ResampleReport report;
    report.donors.reserve(static_cast<std::size_t>(n_new));
    ProvenanceId next = ds.max_provenance() + 1;
    for (Index s = 0; s < n_new; ++s) {
        const Index a = pick_row(rng);
        const Index b = neighbours[static_cast<std::size_t>(a)][static_cast<std::size_t>(pick_nb(rng))];
        const double l = lambda(rng);
        x.row(s) = xm.row(a) + l * (xm.row(b) - xm.row(a));
        meta[static_cast<std::size_t>(s)].provenance_id = next++;
        report.donors.push_back(make_set({ds.meta()[static_cast<std::size_t>(minority[static_cast<std::size_t>(a)])].provenance_id,
                                          ds.meta()[static_cast<std::size_t>(minority[static_cast<std::size_t>(b)])].provenance_id}));
    }
    report.generated = Dataset(std::move(x), Labels::Constant(n_new, minority_class), std::move(meta));
    return report;
}

ResampleReport centroid_undersample(const Dataset& ds, int majority_class, Index n_clusters,
                                    const IndexList& allowed_rows, Seed seed) {
    if (n_clusters < 1) throw ConfigError("centroid_undersample: n_clusters must be >= 1");
    const IndexList majority = class_rows(ds, allowed_rows, majority_class, "centroid_undersample");
    const auto m = static_cast<Index>(majority.size());
    if (m < n_clusters)
        throw InsufficientDataError("centroid_undersample: " + std::to_string(n_clusters) +
                                    " clusters requested but only " + std::to_string(m) +
                                    " majority rows are allowed");

    const Matrix xm = ds.features()(majority, Eigen::all);
    Rng rng = make_rng(seed);
    IndexList perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix centroids = xm(IndexList(perm.begin(), perm.begin() + n_clusters), Eigen::all);

    std::vector<Index> assign(static_cast<std::size_t>(m), -1);
    for (int iter = 0; iter < 100; ++iter) {
        const Matrix dist = pairwise_sq_dist(xm, centroids);
        bool changed = false;
        for (Index i = 0; i < m; ++i) {
            Index best = 0;
            dist.row(i).minCoeff(&best);  // first minimum: lower cluster index wins ties
            if (assign[static_cast<std::size_t>(i)] != best) {
                assign[static_cast<std::size_t>(i)] = best;
                changed = true;
            }
        }
        if (!changed && iter > 0) break;
        Matrix sum = Matrix::Zero(n_clusters, xm.cols());
        std::vector<Index> count(static_cast<std::size_t>(n_clusters), 0);
        for (Index i = 0; i < m; ++i) {
            sum.row(assign[static_cast<std::size_t>(i)]) += xm.row(i);
            ++count[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])];
        }
        for (Index c = 0; c < n_clusters; ++c) {
            if (count[static_cast<std::size_t>(c)] > 0) {
                centroids.row(c) = sum.row(c) / static_cast<double>(count[static_cast<std::size_t>(c)]);
            } else {
                // Empty cluster: reseed on the point farthest from its centroid.
                Index far = 0;
                double best = -1.0;
                for (Index i = 0; i < m; ++i) {
                    const double d = dist(i, assign[static_cast<std::size_t>(i)]);
                    if (d > best) {
                        best = d;
                        far = i;
                    }
                }
                centroids.row(c) = xm.row(far);
            }
        }
    }
    // Final assignment against the final centroids so every centroid is its members' mean.
    {
        const Matrix dist = pairwise_sq_dist(xm, centroids);
        for (Index i = 0; i < m; ++i) {
            Index best = 0;
            dist.row(i).minCoeff(&best);
            assign[static_cast<std::size_t>(i)] = best;
        }
    }

    ResampleReport report;
    std::vector<ProvenanceSet> members(static_cast<std::size_t>(n_clusters));
    Matrix sum = Matrix::Zero(n_clusters, xm.cols());
    std::vector<Index> count(static_cast<std::size_t>(n_clusters), 0);
    for (Index i = 0; i < m; ++i) {
        const auto c = static_cast<std::size_t>(assign[static_cast<std::size_t>(i)]);
        sum.row(static_cast<Index>(c)) += xm.row(i);
        ++count[c];
        members[c].push_back(ds.meta()[static_cast<std::size_t>(majority[static_cast<std::size_t>(i)])].provenance_id);
    }
    IndexList kept;
    for (Index c = 0; c < n_clusters; ++c)
        if (count[static_cast<std::size_t>(c)] > 0) kept.push_back(c);

    Matrix x(static_cast<Index>(kept.size()), xm.cols());
    std::vector<Metadata> meta(kept.size());
    ProvenanceId next = ds.max_provenance() + 1;
    for (std::size_t q = 0; q < kept.size(); ++q) {
        const auto c = static_cast<std::size_t>(kept[q]);
        x.row(static_cast<Index>(q)) = sum.row(kept[q]) / static_cast<double>(count[c]);
        meta[q].provenance_id = next++;
        report.donors.push_back(make_set(std::move(members[c])));
    }
    report.generated = Dataset(std::move(x), Labels::Constant(static_cast<Index>(kept.size()), majority_class),
                               std::move(meta));
    report.removed = majority;
    return report;
}

Dataset apply_report(const Dataset& ds, const ResampleReport& report) {
    std::vector<bool> drop(static_cast<std::size_t>(ds.rows()), false);
    for (Index r : report.removed) drop.at(static_cast<std::size_t>(r)) = true;
    IndexList keep;
    for (Index i = 0; i < ds.rows(); ++i)
        if (!drop[static_cast<std::size_t>(i)]) keep.push_back(i);
    return concat(ds.subset(keep), report.generated);
}

}  // namespace leaklab
