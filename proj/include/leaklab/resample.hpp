#pragma once

#include <vector>

#include "leaklab/core.hpp"
#include "leaklab/rng.hpp"

namespace leaklab {

/// Output of a resampler. generated holds synthetic rows only, each with a fresh
/// provenance id; donors[i] lists the provenance ids that produced generated row i.
struct ResampleReport {
    Dataset generated;
    std::vector<ProvenanceSet> donors;
    IndexList removed;  // undersampling: input rows the synthetic rows replace

    /// Union of every donor list.
    ProvenanceSet all_donors() const;
};

/// SMOTE restricted to allowed_rows: each synthetic row interpolates a random
/// minority row and one of its k nearest minority neighbours.
ResampleReport smote(const Dataset& ds, int minority_class, Index k, Index n_new,
                     const IndexList& allowed_rows, Seed seed);

/// Replaces the majority rows in allowed_rows by n_clusters k-means centroids.
ResampleReport centroid_undersample(const Dataset& ds, int majority_class, Index n_clusters,
                                    const IndexList& allowed_rows, Seed seed);

/// ds without report.removed, followed by report.generated.
Dataset apply_report(const Dataset& ds, const ResampleReport& report);

/// Squared Euclidean distances between every row of a and every row of b.
template <typename DerivedA, typename DerivedB>
auto pairwise_sq_dist(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
    using S = typename DerivedA::Scalar;
    using M = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
    M d(a.rows(), b.rows());
    for (Index j = 0; j < b.rows(); ++j)
        d.col(j) = (a.rowwise() - b.row(j)).rowwise().squaredNorm();
    return d;
}

}  // namespace leaklab
