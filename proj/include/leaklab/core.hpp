#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "leaklab/errors.hpp"

namespace leaklab {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Labels = Eigen::VectorXi;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using IndexList = std::vector<Index>;
using ProvenanceId = std::int64_t;
using ProvenanceSet = std::vector<ProvenanceId>;  // sorted, unique

/// Per-row bookkeeping. provenance_id identifies the original instance and is
/// carried unchanged by every copy of the row.
struct Metadata {
    std::optional<std::int64_t> source_id;
    std::optional<std::int64_t> time_index;
    std::optional<std::int64_t> group_id;
    ProvenanceId provenance_id = 0;

    friend bool operator==(const Metadata&, const Metadata&) = default;
};

/// Feature matrix, binary labels, optional missing-value mask and per-row
/// metadata. Immutable once constructed; transforms return new datasets.
class Dataset {
public:
    Dataset() = default;
    Dataset(Matrix features, Labels labels, std::vector<Metadata> meta,
            std::optional<Mask> missing = std::nullopt);

    Index rows() const noexcept { return features_.rows(); }
    Index cols() const noexcept { return features_.cols(); }
    bool empty() const noexcept { return rows() == 0; }

    const Matrix& features() const noexcept { return features_; }
    const Labels& labels() const noexcept { return labels_; }
    const std::vector<Metadata>& meta() const noexcept { return meta_; }
    const std::optional<Mask>& missing() const noexcept { return missing_; }

    bool is_missing(Index row, Index col) const {
        return missing_ && (*missing_)(row, col);
    }
    bool has_missing() const { return missing_ && missing_->any(); }

    /// Rows in the given order (duplicates allowed); metadata travels along.
    Dataset subset(const IndexList& rows) const;
    /// Same labels, metadata and mask with replaced feature values.
    Dataset with_features(Matrix features) const;
    /// Same rows with a new missing mask (features of missing cells kept as is).
    Dataset with_missing(std::optional<Mask> missing) const;

    ProvenanceSet provenance() const;
    ProvenanceSet provenance(const IndexList& rows) const;
    ProvenanceId max_provenance() const;

    friend bool operator==(const Dataset& a, const Dataset& b);

private:
    Matrix features_;
    Labels labels_;
    std::vector<Metadata> meta_;
    std::optional<Mask> missing_;
};

/// Row-wise concatenation; column counts must agree.
Dataset concat(const Dataset& a, const Dataset& b);

/// Train/eval index sets into one dataset. Disjointness is a property of the
/// strategy that produced the pair, not of the type.
struct SplitPair {
    IndexList train_indices;
    IndexList eval_indices;
    std::string strategy;
    bool leaky_strategy = false;

    void validate(Index n_rows) const;
};

using RowPair = std::pair<Index, Index>;

/// Every (row-in-a, row-in-b) pair with bitwise-equal feature vectors.
/// Labels are not compared.
std::vector<RowPair> exact_duplicate_pairs(const Dataset& a, const Dataset& b);

/// eval without the rows that exactly duplicate any train row; survivor order
/// is preserved.
Dataset dedup_eval(const Dataset& train, const Dataset& eval);

/// Same as dedup_eval but returns the surviving eval row indices.
IndexList dedup_eval_indices(const Dataset& train, const Dataset& eval);

/// Sorted unique values.
ProvenanceSet make_set(std::vector<ProvenanceId> ids);
ProvenanceSet set_intersection(const ProvenanceSet& a, const ProvenanceSet& b);

// CSV: f0..f{d-1},label,source_id,time_index,group_id,provenance_id. Empty cell
// means missing feature or absent metadata; doubles use 17 significant digits.
void write_csv(std::ostream& out, const Dataset& ds);
Dataset read_csv(std::istream& in);
void save_csv(const std::string& path, const Dataset& ds);
Dataset load_csv(const std::string& path);

/// Writes via a temporary file and rename so readers never see partial output.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace leaklab
