#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "leaklab/synth.hpp"

using namespace leaklab;

TEST(Blobs, BalancedDeterministicFreshIds) {
    BlobConfig cfg;
    cfg.n = 101;
    const Dataset a = gen_blobs(cfg);
    const Dataset b = gen_blobs(cfg);
    EXPECT_TRUE(a == b);
    EXPECT_LE(std::abs(a.labels().sum() * 2 - 101), 1);
    const auto ids = a.provenance();
    EXPECT_EQ(ids.size(), 101u);
    EXPECT_EQ(ids.front(), 0);
    EXPECT_EQ(ids.back(), 100);
    cfg.seed = 8;
    EXPECT_FALSE(gen_blobs(cfg) == a);
}

TEST(Blobs, ClassMeansSitAtHalfSeparation) {
    BlobConfig cfg;
    cfg.n = 20000;
    cfg.d = 4;
    cfg.n_informative = 2;
    cfg.separation = 3.0;
    const Dataset ds = gen_blobs(cfg);
    Eigen::RowVectorXd sum0 = Eigen::RowVectorXd::Zero(4), sum1 = sum0;
    double n0 = 0, n1 = 0;
    for (Index i = 0; i < ds.rows(); ++i) {
        if (ds.labels()(i)) {
            sum1 += ds.features().row(i);
            ++n1;
        } else {
            sum0 += ds.features().row(i);
            ++n0;
        }
    }
    const double tol = 4.0 / std::sqrt(n0);
    EXPECT_NEAR(sum1(0) / n1, 1.5, tol);
    EXPECT_NEAR(sum0(1) / n0, -1.5, tol);
    EXPECT_NEAR(sum1(2) / n1, 0.0, tol);
    EXPECT_NEAR(sum0(3) / n0, 0.0, tol);
}

TEST(Blobs, InvalidConfigs) {
    BlobConfig cfg;
    cfg.n = 1;
    EXPECT_THROW(gen_blobs(cfg), ConfigError);
    cfg = {};
    cfg.n_informative = 21;
    EXPECT_THROW(gen_blobs(cfg), ConfigError);
    cfg = {};
    cfg.separation = -1;
    EXPECT_THROW(gen_blobs(cfg), ConfigError);
}

TEST(Spurious, AppendsOneColumnAndLeavesTheRestBitwise) {
    BlobConfig cfg;
    cfg.n = 300;
    const Dataset ds = gen_blobs(cfg);
    const Dataset out = inject_spurious_feature(ds, 7.0, true, 3);
    ASSERT_EQ(out.cols(), ds.cols() + 1);
    EXPECT_TRUE(out.features().leftCols(ds.cols()) == ds.features());
    EXPECT_TRUE(out.labels() == ds.labels());
    EXPECT_THROW(inject_spurious_feature(ds, -0.1, true, 3), ConfigError);
}

TEST(Spurious, ZeroDeltaCollapsesBothBranches) {
    BlobConfig cfg;
    cfg.n = 50;
    const Dataset ds = gen_blobs(cfg);
    EXPECT_TRUE(inject_spurious_feature(ds, 0.0, true, 11) == inject_spurious_feature(ds, 0.0, false, 11));
}

TEST(Spurious, ClassZeroColumnIsStandardNormal) {
    BlobConfig cfg;
    cfg.n = 4000;
    const Dataset out = inject_spurious_feature(gen_blobs(cfg), 20.0, true, 5);
    double s0 = 0, s1 = 0, n0 = 0, n1 = 0;
    for (Index i = 0; i < out.rows(); ++i) {
        const double v = out.features()(i, out.cols() - 1);
        if (out.labels()(i)) {
            s1 += v;
            ++n1;
        } else {
            s0 += v;
            ++n0;
        }
    }
    EXPECT_LT(std::abs(s0 / n0), 3.0 / std::sqrt(n0));
    EXPECT_NEAR(s1 / n1, 20.0, 3.0 / std::sqrt(n1));
}

TEST(Shift, Arithmetic) {
    Matrix x(2, 2);
    x << 1.0, 2.0, 5.0, 6.0;
    const Dataset ds(x, Labels::Zero(2), std::vector<Metadata>(2));
    const Dataset out = apply_shift(ds, 1.5, {0});
    EXPECT_EQ(out.features()(0, 0), 2.5);
    EXPECT_EQ(out.features()(0, 1), 3.5);
    EXPECT_EQ(out.features()(1, 0), 5.0);
    EXPECT_TRUE(apply_shift(ds, 0.0, {0, 1}) == ds);
    EXPECT_TRUE(apply_shift(ds, 3.0, {}) == ds);
    EXPECT_TRUE(apply_shift(ds, 1.5, {0, 0}) == out);
    EXPECT_THROW(apply_shift(ds, 1.0, {2}), IndexError);
}

TEST(Multisource, ShiftAndBalancePerSource) {
    BlobConfig cfg;
    cfg.n = 4000;
    cfg.d = 3;
    cfg.n_informative = 1;
    const Dataset ds = gen_multisource(cfg, 2, 5.0);
    ASSERT_EQ(ds.rows(), 4000);
    std::map<std::int64_t, std::pair<double, int>> by_source;  // feature-2 sum, count
    std::map<std::int64_t, int> ones;
    for (Index i = 0; i < ds.rows(); ++i) {
        const auto s = *ds.meta()[static_cast<std::size_t>(i)].source_id;
        by_source[s].first += ds.features()(i, 2);
        ++by_source[s].second;
        ones[s] += ds.labels()(i);
    }
    ASSERT_EQ(by_source.size(), 2u);
    const double m0 = by_source[0].first / by_source[0].second;
    const double m1 = by_source[1].first / by_source[1].second;
    EXPECT_NEAR(m1 - m0, 5.0, 0.15);
    EXPECT_EQ(ones[0], 1000);
    EXPECT_EQ(ones[1], 1000);
    EXPECT_EQ(ds.provenance().size(), 4000u);
    EXPECT_THROW(gen_multisource(cfg, 1, 1.0), ConfigError);
}

TEST(Multisource, ZeroShiftOnlySourceIdDiffers) {
    BlobConfig cfg;
    cfg.n = 200;
    const Dataset ds = gen_multisource(cfg, 2, 0.0);
    BlobConfig first = cfg;
    first.n = 100;
    first.seed = derive_seed(cfg.seed, {0});
    EXPECT_TRUE(ds.features().topRows(100) == gen_blobs(first).features());
}

TEST(Windows, SharedRowCountFormula) {
    BlobConfig cfg;
    cfg.n = 200;
    for (double overlap : {0.0, 0.25, 0.5, 0.9, 0.999}) {
        const WindowPair w = gen_drifting_windows(cfg, overlap);
        const auto shared = set_intersection(w.train.provenance(), w.eval.provenance());
        const auto expect = static_cast<std::size_t>(std::floor(overlap * 200));
        ASSERT_EQ(shared.size(), expect) << overlap;
        ASSERT_EQ(w.shared, static_cast<Index>(expect));
        ASSERT_EQ(w.train.rows(), 200);
        ASSERT_EQ(w.eval.rows(), 200);
        // Shared rows are the same instances, bitwise.
        for (Index q = 0; q < w.shared; ++q)
            ASSERT_TRUE(w.train.features().row(200 - w.shared + q) == w.eval.features().row(q));
        const auto train_max = *w.train.meta().back().time_index;
        const auto eval_min = *w.eval.meta().front().time_index;
        ASSERT_EQ(train_max >= eval_min, expect > 0) << overlap;
    }
    EXPECT_THROW(gen_drifting_windows(cfg, 1.0), ConfigError);
    EXPECT_THROW(gen_drifting_windows(cfg, -0.1), ConfigError);
}

TEST(Windows, HalfOverlapOfTwoHundred) {
    BlobConfig cfg;
    cfg.n = 200;
    const WindowPair w = gen_drifting_windows(cfg, 0.5);
    EXPECT_EQ(set_intersection(w.train.provenance(), w.eval.provenance()).size(), 100u);
    EXPECT_TRUE(set_intersection(w.train.provenance(), gen_drifting_windows(cfg, 0.0).eval.provenance()).empty());
}

TEST(Frankenstein, DuplicateCountPerStage) {
    FrankensteinPlan plan;
    plan.stages = 2;
    plan.fresh_per_stage = 100;
    plan.dup_fraction = 0.3;
    BlobConfig cfg;
    const auto stages = compose_frankenstein(plan, cfg);
    ASSERT_EQ(stages.size(), 2u);
    ASSERT_EQ(stages[0].rows(), 100);
    ASSERT_EQ(stages[1].rows(), 230);
    const auto first = stages[0].provenance();
    const std::set<ProvenanceId> earlier(first.begin(), first.end());
    int copies = 0;
    for (Index i = 100; i < 230; ++i) {
        const auto id = stages[1].meta()[static_cast<std::size_t>(i)].provenance_id;
        if (!earlier.count(id)) continue;
        ++copies;
        // A copy is a bitwise duplicate of its original.
        ASSERT_TRUE(stages[1].features().row(i) == stages[0].features().row(id));
        ASSERT_EQ(stages[1].labels()(i), stages[0].labels()(id));
    }
    EXPECT_EQ(copies, 30);
}

TEST(Frankenstein, CumulativeAndDuplicateFreeWithoutCopies) {
    FrankensteinPlan plan;
    plan.stages = 4;
    plan.fresh_per_stage = 50;
    plan.dup_fraction = 0.0;
    const auto stages = compose_frankenstein(plan, BlobConfig{});
    for (std::size_t r = 0; r < stages.size(); ++r) {
        EXPECT_EQ(stages[r].rows(), static_cast<Index>(50 * (r + 1)));
        EXPECT_EQ(stages[r].provenance().size(), 50 * (r + 1));
        if (r) {
            EXPECT_TRUE(stages[r].features().topRows(stages[r - 1].rows()) == stages[r - 1].features());
        }
    }
    plan.dup_fraction = 1.5;
    EXPECT_THROW(compose_frankenstein(plan, BlobConfig{}), ConfigError);
}

TEST(Frankenstein, Deterministic) {
    FrankensteinPlan plan;
    plan.fresh_per_stage = 40;
    const auto a = compose_frankenstein(plan, BlobConfig{});
    const auto b = compose_frankenstein(plan, BlobConfig{});
    for (std::size_t r = 0; r < a.size(); ++r) EXPECT_TRUE(a[r] == b[r]);
}
