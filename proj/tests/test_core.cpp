#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "leaklab/core.hpp"
#include "support/gen.hpp"

using namespace leaklab;

namespace {

Dataset rows_of(std::initializer_list<std::initializer_list<double>> rows) {
    const auto n = static_cast<Index>(rows.size());
    const auto d = static_cast<Index>(rows.begin()->size());
    Matrix x(n, d);
    Index i = 0;
    for (const auto& r : rows) {
        Index j = 0;
        for (double v : r) x(i, j++) = v;
        ++i;
    }
    std::vector<Metadata> meta(static_cast<std::size_t>(n));
    for (Index k = 0; k < n; ++k) meta[static_cast<std::size_t>(k)].provenance_id = 100 + k;
    return Dataset(x, Labels::Zero(n), meta);
}

std::set<RowPair> as_set(const std::vector<RowPair>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST(Dataset, RejectsMismatchedShapes) {
    EXPECT_THROW(Dataset(Matrix::Zero(3, 2), Labels::Zero(2), std::vector<Metadata>(3)), DimensionError);
    EXPECT_THROW(Dataset(Matrix::Zero(3, 2), Labels::Zero(3), std::vector<Metadata>(2)), DimensionError);
    EXPECT_THROW(Dataset(Matrix::Zero(2, 2), Labels::Zero(2), std::vector<Metadata>(2), Mask::Constant(2, 3, false)),
                 DimensionError);
}

TEST(Dataset, RejectsNonBinaryLabels) {
    Labels y(2);
    y << 0, 2;
    EXPECT_THROW(Dataset(Matrix::Zero(2, 1), y, std::vector<Metadata>(2)), Error);
}

TEST(Dataset, SubsetCarriesMetadataAndAllowsRepeats) {
    const Dataset ds = rows_of({{1, 2}, {3, 4}, {5, 6}});
    const Dataset s = ds.subset({2, 0, 2});
    ASSERT_EQ(s.rows(), 3);
    EXPECT_EQ(s.features()(0, 0), 5);
    EXPECT_EQ(s.meta()[0].provenance_id, 102);
    EXPECT_EQ(s.meta()[2].provenance_id, 102);
    EXPECT_THROW(ds.subset({3}), IndexError);
    EXPECT_THROW(ds.subset({-1}), IndexError);
}

TEST(Dataset, ConcatKeepsBothMasks) {
    Mask m = Mask::Constant(1, 2, false);
    m(0, 1) = true;
    const Dataset a(Matrix::Ones(1, 2), Labels::Zero(1), std::vector<Metadata>(1), m);
    const Dataset b(Matrix::Zero(2, 2), Labels::Ones(2), std::vector<Metadata>(2));
    const Dataset c = concat(a, b);
    ASSERT_EQ(c.rows(), 3);
    EXPECT_TRUE(c.is_missing(0, 1));
    EXPECT_FALSE(c.is_missing(1, 1));
    EXPECT_THROW(concat(a, Dataset(Matrix::Zero(1, 3), Labels::Zero(1), std::vector<Metadata>(1))), DimensionError);
}

TEST(ExactDuplicates, Examples) {
    EXPECT_TRUE(exact_duplicate_pairs(rows_of({{1, 2}}), rows_of({{3, 4}})).empty());
    EXPECT_EQ(as_set(exact_duplicate_pairs(rows_of({{1, 2}}), rows_of({{1, 2}}))), (std::set<RowPair>{{0, 0}}));
    EXPECT_EQ(as_set(exact_duplicate_pairs(rows_of({{0, 0}, {1, 1}}), rows_of({{1, 1}, {2, 2}}))),
              (std::set<RowPair>{{1, 0}}));
    EXPECT_THROW(exact_duplicate_pairs(rows_of({{1, 2}}), rows_of({{1, 2, 3}})), DimensionError);
}

TEST(ExactDuplicates, LabelsAreIgnored) {
    const Dataset a(Matrix::Ones(1, 2), Labels::Zero(1), std::vector<Metadata>(1));
    const Dataset b(Matrix::Ones(1, 2), Labels::Ones(1), std::vector<Metadata>(1));
    EXPECT_EQ(exact_duplicate_pairs(a, b).size(), 1u);
}

TEST(ExactDuplicates, NearMissIsNotADuplicate) {
    const Dataset a = rows_of({{1.0, 2.0}});
    const Dataset b = rows_of({{1.0, std::nextafter(2.0, 3.0)}});
    EXPECT_TRUE(exact_duplicate_pairs(a, b).empty());
}

TEST(DedupEval, Examples) {
    EXPECT_EQ(dedup_eval(rows_of({{1, 2}}), rows_of({{3, 4}})).rows(), 1);
    EXPECT_EQ(dedup_eval(rows_of({{1, 2}}), rows_of({{1, 2}})).rows(), 0);
    const Dataset kept = dedup_eval(rows_of({{0, 0}}), rows_of({{0, 0}, {5, 5}, {0, 0}}));
    ASSERT_EQ(kept.rows(), 1);
    EXPECT_EQ(kept.features()(0, 0), 5);
    EXPECT_EQ(kept.meta()[0].provenance_id, 101);
}

// Brute-force all-pairs comparison as the oracle.
TEST(ExactDuplicatesProperty, MatchesBruteForceAndIsSymmetric) {
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        Rng rng = make_rng(seed);
        testgen::Shape s;
        s.integer_values = true;
        s.max_cols = 2;
        s.max_rows = 25;
        const Dataset a = testgen::dataset(rng, s);
        Dataset b = testgen::dataset(rng, s);
        if (b.cols() != a.cols()) b = a.subset(testgen::subset(rng, a.rows()));

        std::set<RowPair> oracle;
        for (Index i = 0; i < a.rows(); ++i)
            for (Index j = 0; j < b.rows(); ++j)
                if (a.features().row(i) == b.features().row(j)) oracle.insert({i, j});
        const auto ab = as_set(exact_duplicate_pairs(a, b));
        ASSERT_EQ(ab, oracle) << "seed " << seed;

        std::set<RowPair> flipped;
        for (auto [j, i] : exact_duplicate_pairs(b, a)) flipped.insert({i, j});
        ASSERT_EQ(ab, flipped) << "seed " << seed;

        const Dataset kept = dedup_eval(a, b);
        ASSERT_TRUE(exact_duplicate_pairs(a, kept).empty()) << "seed " << seed;
    }
}

TEST(ProvenanceSets, SortedUnique) {
    EXPECT_EQ(make_set({5, 1, 5, 3}), (ProvenanceSet{1, 3, 5}));
    EXPECT_EQ(set_intersection({1, 3, 5}, {2, 3, 5, 8}), (ProvenanceSet{3, 5}));
}

TEST(Csv, RoundTripIsExact) {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        Rng rng = make_rng(seed);
        testgen::Shape s;
        s.missing = 0.2;
        s.sources = 3;
        s.groups = 2;
        s.times = seed % 2 == 0;
        const Dataset ds = testgen::dataset(rng, s);
        std::stringstream buf;
        write_csv(buf, ds);
        const Dataset back = read_csv(buf);
        ASSERT_EQ(back.rows(), ds.rows());
        for (Index i = 0; i < ds.rows(); ++i) {
            ASSERT_EQ(back.meta()[static_cast<std::size_t>(i)], ds.meta()[static_cast<std::size_t>(i)]);
            for (Index j = 0; j < ds.cols(); ++j) {
                ASSERT_EQ(back.is_missing(i, j), ds.is_missing(i, j));
                if (!ds.is_missing(i, j)) {
                    ASSERT_EQ(back.features()(i, j), ds.features()(i, j));
                }
            }
        }
        ASSERT_EQ(back.labels(), ds.labels());
    }
}

TEST(Csv, HeaderFormat) {
    std::stringstream buf;
    write_csv(buf, rows_of({{1, 2}}));
    std::string header;
    std::getline(buf, header);
    EXPECT_EQ(header, "f0,f1,label,source_id,time_index,group_id,provenance_id");
}

TEST(Csv, MalformedInputIsAParseError) {
    std::stringstream bad("f0,label,source_id,time_index,group_id,provenance_id\nnot_a_number,0,,,,1\n");
    EXPECT_THROW(read_csv(bad), ParseError);
    std::stringstream wrong_header("a,b\n1,2\n");
    EXPECT_THROW(read_csv(wrong_header), ParseError);
}

TEST(AtomicWrite, CreatesDirectoriesAndLeavesNoTemp) {
    const auto dir = std::filesystem::temp_directory_path() / "leaklab_atomic_test" / "nested";
    std::filesystem::remove_all(dir.parent_path());
    const auto path = (dir / "out.txt").string();
    write_file_atomic(path, "hello\n");
    std::ifstream in(path);
    std::string s;
    std::getline(in, s);
    EXPECT_EQ(s, "hello");
    EXPECT_FALSE(std::filesystem::exists(path + ".tmp"));
    std::filesystem::remove_all(dir.parent_path());
}
