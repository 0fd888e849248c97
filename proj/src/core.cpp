#include "leaklab/core.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

namespace leaklab {

Dataset::Dataset(Matrix features, Labels labels, std::vector<Metadata> meta,
                 std::optional<Mask> missing)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      meta_(std::move(meta)),
      missing_(std::move(missing)) {
    if (features_.rows() != labels_.size())
        throw DimensionError("dataset: " + std::to_string(features_.rows()) +
                             " feature rows but " + std::to_string(labels_.size()) + " labels");
    if (static_cast<Index>(meta_.size()) != labels_.size())
        throw DimensionError("dataset: metadata length does not match row count");
    for (Index i = 0; i < labels_.size(); ++i) {
        if (labels_(i) != 0 && labels_(i) != 1)
            throw ConfigError("dataset: label at row " + std::to_string(i) + " is not 0 or 1");
    }
    if (missing_ && (missing_->rows() != features_.rows() || missing_->cols() != features_.cols()))
        throw DimensionError("dataset: missing mask shape differs from features");
}

Dataset Dataset::subset(const IndexList& rows) const {
    const Index n = this->rows();
    for (Index r : rows) {
        if (r < 0 || r >= n)
            throw IndexError("subset: row " + std::to_string(r) + " out of range [0," +
                             std::to_string(n) + ")");
    }
    Matrix x = features_(rows, Eigen::all);
    Labels y = labels_(rows);
    std::vector<Metadata> m;
    m.reserve(rows.size());
    for (Index r : rows) m.push_back(meta_[static_cast<std::size_t>(r)]);
    std::optional<Mask> mask;
    if (missing_) mask = Mask((*missing_)(rows, Eigen::all));
    return Dataset(std::move(x), std::move(y), std::move(m), std::move(mask));
}

Dataset Dataset::with_features(Matrix features) const {
    if (features.rows() != rows())
        throw DimensionError("with_features: row count changed");
    std::optional<Mask> mask;
    if (missing_ && features.cols() == cols()) mask = missing_;
    return Dataset(std::move(features), labels_, meta_, std::move(mask));
}

Dataset Dataset::with_missing(std::optional<Mask> missing) const {
    return Dataset(features_, labels_, meta_, std::move(missing));
}

ProvenanceSet Dataset::provenance() const {
    ProvenanceSet ids;
    ids.reserve(meta_.size());
    for (const auto& m : meta_) ids.push_back(m.provenance_id);
    return make_set(std::move(ids));
}

ProvenanceSet Dataset::provenance(const IndexList& rows) const {
    ProvenanceSet ids;
    ids.reserve(rows.size());
    for (Index r : rows) ids.push_back(meta_.at(static_cast<std::size_t>(r)).provenance_id);
    return make_set(std::move(ids));
}

ProvenanceId Dataset::max_provenance() const {
    ProvenanceId best = -1;
    for (const auto& m : meta_) best = std::max(best, m.provenance_id);
    return best;
}

bool operator==(const Dataset& a, const Dataset& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    if (a.labels_ != b.labels_ || a.meta_ != b.meta_) return false;
    if (a.missing_.has_value() != b.missing_.has_value()) return false;
    if (a.missing_ && !(*a.missing_ == *b.missing_).all()) return false;
    const auto bytes = static_cast<std::size_t>(a.features_.size()) * sizeof(double);
    return bytes == 0 || std::memcmp(a.features_.data(), b.features_.data(), bytes) == 0;
}

Dataset concat(const Dataset& a, const Dataset& b) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    if (a.cols() != b.cols())
        throw DimensionError("concat: column counts differ (" + std::to_string(a.cols()) + " vs " +
                             std::to_string(b.cols()) + ")");
    Matrix x(a.rows() + b.rows(), a.cols());
    x << a.features(), b.features();
    Labels y(a.rows() + b.rows());
    y << a.labels(), b.labels();
    std::vector<Metadata> m = a.meta();
    m.insert(m.end(), b.meta().begin(), b.meta().end());
    std::optional<Mask> mask;
    if (a.missing() || b.missing()) {
        Mask ma = a.missing().value_or(Mask::Constant(a.rows(), a.cols(), false));
        Mask mb = b.missing().value_or(Mask::Constant(b.rows(), b.cols(), false));
        Mask joined(ma.rows() + mb.rows(), ma.cols());
        joined << ma, mb;
        mask = std::move(joined);
    }
    return Dataset(std::move(x), std::move(y), std::move(m), std::move(mask));
}

void SplitPair::validate(Index n_rows) const {
    for (const IndexList* set : {&train_indices, &eval_indices}) {
        std::unordered_set<Index> seen;
        for (Index i : *set) {
            if (i < 0 || i >= n_rows)
                throw IndexError("split: index " + std::to_string(i) + " out of range");
            if (!seen.insert(i).second)
                throw IndexError("split: index " + std::to_string(i) + " repeated within a set");
        }
    }
}

namespace {

// transposed holds one original row per column, contiguous in memory.
std::string_view row_bytes(const Matrix& transposed, Index r) {
    const auto len = static_cast<std::size_t>(transposed.rows());
    const char* base = reinterpret_cast<const char*>(transposed.data()) +
                       static_cast<std::size_t>(r) * len * sizeof(double);
    return {base, len * sizeof(double)};
}

}  // namespace

std::vector<RowPair> exact_duplicate_pairs(const Dataset& a, const Dataset& b) {
    if (a.cols() != b.cols())
        throw DimensionError("exact_duplicate_pairs: column counts differ (" +
                             std::to_string(a.cols()) + " vs " + std::to_string(b.cols()) + ")");
    const Matrix ra = a.features().transpose();
    const Matrix rb = b.features().transpose();

    std::unordered_map<std::string_view, std::vector<Index>> index_of_b;
    index_of_b.reserve(static_cast<std::size_t>(b.rows()));
    for (Index j = 0; j < b.rows(); ++j) index_of_b[row_bytes(rb, j)].push_back(j);

    std::vector<RowPair> pairs;
    for (Index i = 0; i < a.rows(); ++i) {
        auto it = index_of_b.find(row_bytes(ra, i));
        if (it == index_of_b.end()) continue;
        for (Index j : it->second) pairs.emplace_back(i, j);
    }
    return pairs;
}

IndexList dedup_eval_indices(const Dataset& train, const Dataset& eval) {
    const auto pairs = exact_duplicate_pairs(eval, train);
    std::vector<bool> drop(static_cast<std::size_t>(eval.rows()), false);
    for (const auto& [e, t] : pairs) drop[static_cast<std::size_t>(e)] = true;
    IndexList keep;
    for (Index i = 0; i < eval.rows(); ++i)
        if (!drop[static_cast<std::size_t>(i)]) keep.push_back(i);
    return keep;
}

Dataset dedup_eval(const Dataset& train, const Dataset& eval) {
    return eval.subset(dedup_eval_indices(train, eval));
}

ProvenanceSet make_set(std::vector<ProvenanceId> ids) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

ProvenanceSet set_intersection(const ProvenanceSet& a, const ProvenanceSet& b) {
    ProvenanceSet out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void put_optional(std::ostream& out, const std::optional<std::int64_t>& v) {
    if (v) out << *v;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

double parse_double(const std::string& s, std::size_t line_no) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE)
        throw ParseError("csv line " + std::to_string(line_no) + ": bad number '" + s + "'");
    return v;
}

std::int64_t parse_int(const std::string& s, std::size_t line_no) {
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE)
        throw ParseError("csv line " + std::to_string(line_no) + ": bad integer '" + s + "'");
    return v;
}

std::optional<std::int64_t> parse_optional(const std::string& s, std::size_t line_no) {
    if (s.empty()) return std::nullopt;
    return parse_int(s, line_no);
}

}  // namespace

void write_csv(std::ostream& out, const Dataset& ds) {
    for (Index j = 0; j < ds.cols(); ++j) out << 'f' << j << ',';
    out << "label,source_id,time_index,group_id,provenance_id\n";
    for (Index i = 0; i < ds.rows(); ++i) {
        for (Index j = 0; j < ds.cols(); ++j) {
            if (!ds.is_missing(i, j)) out << format_double(ds.features()(i, j));
            out << ',';
        }
        const auto& m = ds.meta()[static_cast<std::size_t>(i)];
        out << ds.labels()(i) << ',';
        put_optional(out, m.source_id);
        out << ',';
        put_optional(out, m.time_index);
        out << ',';
        put_optional(out, m.group_id);
        out << ',' << m.provenance_id << '\n';
    }
}

Dataset read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("csv: empty input");
    const auto header = split_fields(line);
    const std::vector<std::string> tail = {"label", "source_id", "time_index", "group_id",
                                           "provenance_id"};
    if (header.size() < tail.size())
        throw ParseError("csv header: expected trailing columns label,source_id,time_index,group_id,provenance_id");
    const std::size_t d = header.size() - tail.size();
    for (std::size_t j = 0; j < d; ++j) {
        if (header[j] != "f" + std::to_string(j))
            throw ParseError("csv header: column " + std::to_string(j) + " should be f" +
                             std::to_string(j) + ", found '" + header[j] + "'");
    }
    for (std::size_t k = 0; k < tail.size(); ++k) {
        if (header[d + k] != tail[k])
            throw ParseError("csv header: expected '" + tail[k] + "', found '" + header[d + k] + "'");
    }

    std::vector<std::vector<double>> values;
    std::vector<std::vector<bool>> absent;
    std::vector<int> labels;
    std::vector<Metadata> meta;
    bool any_missing = false;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto f = split_fields(line);
        if (f.size() != header.size())
            throw ParseError("csv line " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " fields, found " +
                             std::to_string(f.size()));
        std::vector<double> row(d, 0.0);
        std::vector<bool> miss(d, false);
        for (std::size_t j = 0; j < d; ++j) {
            if (f[j].empty()) {
                miss[j] = true;
                any_missing = true;
                row[j] = std::numeric_limits<double>::quiet_NaN();
            } else {
                row[j] = parse_double(f[j], line_no);
            }
        }
        labels.push_back(static_cast<int>(parse_int(f[d], line_no)));
        Metadata m;
        m.source_id = parse_optional(f[d + 1], line_no);
        m.time_index = parse_optional(f[d + 2], line_no);
        m.group_id = parse_optional(f[d + 3], line_no);
        if (f[d + 4].empty())
            throw ParseError("csv line " + std::to_string(line_no) + ": provenance_id is required");
        m.provenance_id = parse_int(f[d + 4], line_no);
        values.push_back(std::move(row));
        absent.push_back(std::move(miss));
        meta.push_back(m);
    }

    const auto n = static_cast<Index>(values.size());
    const auto cols = static_cast<Index>(d);
    Matrix x(n, cols);
    Labels y(n);
    Mask mask(n, cols);
    for (Index i = 0; i < n; ++i) {
        y(i) = labels[static_cast<std::size_t>(i)];
        for (Index j = 0; j < cols; ++j) {
            x(i, j) = values[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            mask(i, j) = absent[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    }
    std::optional<Mask> missing;
    if (any_missing) missing = std::move(mask);
    return Dataset(std::move(x), std::move(y), std::move(meta), std::move(missing));
}

void save_csv(const std::string& path, const Dataset& ds) {
    std::ostringstream out;
    write_csv(out, ds);
    write_file_atomic(path, out.str());
}

Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    return read_csv(in);
}

void write_file_atomic(const std::string& path, const std::string& contents) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write '" + tmp.string() + "'");
        out << contents;
        if (!out.flush()) throw Error("short write to '" + tmp.string() + "'");
    }
    fs::rename(tmp, target);
}

}  // namespace leaklab
