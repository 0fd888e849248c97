#include <gtest/gtest.h>

#include <algorithm>

#include "leaklab/pipeline.hpp"
#include "leaklab/synth.hpp"
#include "support/plans.hpp"

using namespace leaklab;

namespace {

Dataset blobs(Index n = 200, Seed seed = 7) {
    BlobConfig cfg;
    cfg.n = n;
    cfg.d = 5;
    cfg.n_informative = 3;
    cfg.seed = seed;
    return gen_blobs(cfg);
}

TrainStep small_train() {
    TrainStep t;
    t.config.hidden1 = 8;
    t.config.hidden2 = 4;
    t.config.max_epochs = 30;
    t.config.learning_rate = 0.2;
    return t;
}

PipelinePlan plan_of(std::vector<PlanStep> pre) {
    PipelinePlan p;
    p.steps = std::move(pre);
    p.steps.push_back(small_train());
    p.steps.push_back(EvaluateStep{});
    return p;
}

ScopePolicy leaky() {
    ScopePolicy p;
    p.mode = ScopeMode::leaky;
    return p;
}

}  // namespace

TEST(Execute, NothingToLeakGivesIdenticalAccuracy) {
    const Dataset ds = blobs();
    const PipelinePlan plan = plan_of({SplitStep{}});
    const auto clean = execute(plan, ds, ScopePolicy{}, 5);
    const auto dirty = execute(plan, ds, leaky(), 5);
    EXPECT_EQ(clean.accuracy, dirty.accuracy);
    EXPECT_TRUE(clean.model == dirty.model);
    EXPECT_TRUE(clean.audit.records.size() == 2u);
    EXPECT_TRUE(audit_violations(dirty.audit).empty());
}

TEST(Execute, PlanValidation) {
    const Dataset ds = blobs();
    PipelinePlan none = plan_of({});
    EXPECT_THROW(execute(none, ds, ScopePolicy{}, 1), ConfigError);
    PipelinePlan two = plan_of({SplitStep{}, SplitStep{}});
    EXPECT_THROW(execute(two, ds, ScopePolicy{}, 1), ConfigError);
    PipelinePlan late = plan_of({SplitStep{}});
    late.steps.push_back(PreprocessStep{});
    EXPECT_THROW(execute(late, ds, ScopePolicy{}, 1), ConfigError);
    ScopePolicy bad = leaky();
    bad.leak_fraction = 1.5;
    EXPECT_THROW(execute(plan_of({SplitStep{}}), ds, bad, 1), ConfigError);
}

TEST(Audit, CleanStandardizeHasNoViolation) {
    const auto r = execute(plan_of({PreprocessStep{}, SplitStep{}}), blobs(), ScopePolicy{}, 3);
    EXPECT_TRUE(audit_violations(r.audit).empty());
    const auto& fit = r.audit.records.front();
    EXPECT_EQ(fit.kind, "standardize");
    EXPECT_TRUE(set_intersection(fit.saw_provenance, r.audit.eval_provenance).empty());
    EXPECT_TRUE(audit_check(r.audit, blobs(), r.split).empty());
}

TEST(Audit, LeakyStandardizeNamesTheStep) {
    const auto r = execute(plan_of({PreprocessStep{}, SplitStep{}}), blobs(), leaky(), 3);
    const auto v = audit_violations(r.audit);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].kind, "standardize");
    EXPECT_EQ(v[0].step, 0);
    EXPECT_EQ(v[0].offending, r.audit.eval_provenance);
    EXPECT_TRUE(r.audit.records.front().violation);
}

TEST(Audit, SmoteOverEveryRowListsEvalDonors) {
    Dataset ds = blobs(300);
    // Thin out class 1 so SMOTE has work to do.
    IndexList keep;
    for (Index i = 0; i < ds.rows(); ++i)
        if (ds.labels()(i) == 0 || i % 3 == 0) keep.push_back(i);
    ds = ds.subset(keep);
    SynthesizeStep smote;
    smote.k = 3;
    const auto r = execute(plan_of({SplitStep{}, smote}), ds, leaky(), 4);
    ASSERT_EQ(r.resamples.size(), 1u);
    const ProvenanceSet eval_donors = set_intersection(r.resamples[0].all_donors(), r.audit.eval_provenance);
    ASSERT_FALSE(eval_donors.empty());
    const auto v = audit_violations(r.audit);
    ASSERT_FALSE(v.empty());
    const auto it = std::find_if(v.begin(), v.end(), [](const Violation& x) { return x.kind == "smote"; });
    ASSERT_NE(it, v.end());
    EXPECT_TRUE(std::includes(it->offending.begin(), it->offending.end(), eval_donors.begin(), eval_donors.end()));

    const auto clean = execute(plan_of({SplitStep{}, smote}), ds, ScopePolicy{}, 4);
    EXPECT_TRUE(set_intersection(clean.resamples[0].all_donors(), clean.audit.eval_provenance).empty());
    EXPECT_TRUE(audit_violations(clean.audit).empty());
}

TEST(Audit, PartialLeakSeesOnlyItsShare) {
    ScopePolicy p = leaky();
    p.leak_fraction = 0.5;
    const auto r = execute(plan_of({PreprocessStep{}, SplitStep{}}), blobs(), p, 2);
    const auto v = audit_violations(r.audit);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].offending.size(), r.audit.eval_provenance.size() / 2);
    p.leak_fraction = 0.0;
    EXPECT_TRUE(audit_violations(execute(plan_of({PreprocessStep{}, SplitStep{}}), blobs(), p, 2).audit).empty());
}

TEST(Audit, ValidationAfterWholeTrainFitIsFlagged) {
    TrainStep t = small_train();
    t.uses_validation = true;
    PipelinePlan plan;
    plan.steps = {SplitStep{}, PreprocessStep{}, t, EvaluateStep{}};
    ScopePolicy after;
    after.validation = ValidationHandling::split_after_fit;
    const auto r = execute(plan, blobs(), after, 6);
    ASSERT_FALSE(r.audit.validation_provenance.empty());
    const auto v = audit_violations(r.audit);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].reason, "saw validation rows");
    EXPECT_TRUE(audit_violations(execute(plan, blobs(), ScopePolicy{}, 6).audit).empty());
}

TEST(Audit, SourceDisjointRuleCatchesPooledSplits) {
    BlobConfig cfg;
    cfg.n = 200;
    cfg.d = 4;
    cfg.n_informative = 2;
    const Dataset ds = gen_multisource(cfg, 2, 1.0);
    PipelinePlan pooled = plan_of({SplitStep{}});
    pooled.require_source_disjoint = true;
    EXPECT_FALSE(audit_violations(execute(pooled, ds, ScopePolicy{}, 1).audit).empty());
    SplitStep g;
    g.strategy = SplitStep::Strategy::group;
    g.held_out = 1;
    PipelinePlan held = plan_of({g});
    held.require_source_disjoint = true;
    EXPECT_TRUE(audit_violations(execute(held, ds, ScopePolicy{}, 1).audit).empty());
}

TEST(Audit, JsonlRoundTrip) {
    auto r = execute(plan_of({PreprocessStep{}, SplitStep{}, SynthesizeStep{}}), blobs(), leaky(), 8);
    r.audit.run = "probe/1";
    const auto logs = parse_audit_jsonl(r.audit.to_jsonl() + r.audit.to_jsonl());
    ASSERT_EQ(logs.size(), 2u);
    const AuditLog& back = logs[0];
    EXPECT_EQ(back.run, "probe/1");
    EXPECT_EQ(back.scope, r.audit.scope);
    EXPECT_EQ(back.eval_provenance, r.audit.eval_provenance);
    ASSERT_EQ(back.records.size(), r.audit.records.size());
    for (std::size_t i = 0; i < back.records.size(); ++i) {
        EXPECT_EQ(back.records[i].step, r.audit.records[i].step);
        EXPECT_EQ(back.records[i].kind, r.audit.records[i].kind);
        EXPECT_EQ(back.records[i].role, r.audit.records[i].role);
        EXPECT_EQ(back.records[i].saw_provenance, r.audit.records[i].saw_provenance);
        EXPECT_EQ(back.records[i].violation, r.audit.records[i].violation);
    }
    EXPECT_THROW(parse_audit_jsonl("{\"run\":\"x\",\"role\":\"fit\",\"step\":0}\n"), ParseError);
    EXPECT_THROW(parse_audit_jsonl("not json\n"), ParseError);
}

TEST(Audit, CheckRecomputesStoredFlags) {
    auto r = execute(plan_of({PreprocessStep{}, SplitStep{}}), blobs(), leaky(), 8);
    for (auto& rec : r.audit.records) rec.violation = false;
    EXPECT_EQ(audit_check(r.audit).size(), 1u);
    EXPECT_TRUE(r.audit.records.front().violation);
}

TEST(Execute, LeakyNormalizationHelpsUnderLargeShift) {
    // Single seeded run: shifted eval rows, fitting on them partly undoes the shift.
    const Dataset base = blobs(400, 11);
    const SplitPair sp = holdout(base, 0.25, true, 3);
    const Dataset ds = apply_shift(base, 5.0, sp.eval_indices);
    SplitStep given;
    given.strategy = SplitStep::Strategy::given;
    given.given = sp;
    const PipelinePlan plan = plan_of({given, PreprocessStep{}});
    const double clean = execute(plan, ds, ScopePolicy{}, 1).accuracy;
    const double dirty = execute(plan, ds, leaky(), 1).accuracy;
    EXPECT_GE(dirty, clean);
}

TEST(Execute, DedupDropsDuplicatedEvalRows) {
    Dataset ds = blobs(100);
    const SplitPair sp = holdout(ds, 0.2, true, 2);
    // Copy five eval rows into the data so they land in train.
    IndexList copies(sp.eval_indices.begin(), sp.eval_indices.begin() + 5);
    ds = concat(ds, ds.subset(copies));
    SplitPair given = sp;
    for (Index i = 100; i < 105; ++i) given.train_indices.push_back(i);
    SplitStep s;
    s.strategy = SplitStep::Strategy::given;
    s.given = given;
    PipelinePlan plan = plan_of({s});
    std::get<EvaluateStep>(plan.steps.back()).dedup_against_train = true;
    const auto r = execute(plan, ds, ScopePolicy{}, 1);
    EXPECT_EQ(r.eval_rows, 15);
    EXPECT_TRUE(audit_violations(r.audit).empty());
}

// Clean executions never read eval features: rewriting them changes only the score.
TEST(ScopeMetamorphic, CleanRunsIgnoreEvalFeatures) {
    int leaky_counterexamples = 0;
    testgen::for_each_runnable_case(40, 0, [&](Seed s, const testgen::RandomCase& c, const ExecutionResult& clean) {
        ASSERT_TRUE(audit_violations(clean.audit).empty()) << c.label;
        const Dataset rewritten = testgen::rewrite_eval_rows(c.data, clean.split.eval_indices, s + 1000);
        const auto again = execute(c.plan, rewritten, ScopePolicy{}, s);
        ASSERT_EQ(again.split.eval_indices, clean.split.eval_indices);
        ASSERT_EQ(again.params.size(), clean.params.size());
        for (std::size_t i = 0; i < clean.params.size(); ++i) ASSERT_TRUE(again.params[i] == clean.params[i]) << c.label;
        ASSERT_TRUE(again.model == clean.model) << c.label;

        const auto dirty = execute(c.plan, c.data, leaky(), s);
        if (c.data_dependent) {
            ASSERT_FALSE(audit_violations(dirty.audit).empty()) << c.label;
            const auto dirty_again = execute(c.plan, rewritten, leaky(), s);
            leaky_counterexamples += !(dirty_again.model == dirty.model);
        } else {
            ASSERT_TRUE(audit_violations(dirty.audit).empty()) << c.label;
            ASSERT_EQ(dirty.accuracy, clean.accuracy);
        }
    });
    EXPECT_GT(leaky_counterexamples, 0);
}

TEST(ScopeMetamorphic, LeakyStandardizeCounterexample) {
    const Dataset ds = blobs();
    const PipelinePlan plan = plan_of({PreprocessStep{}, SplitStep{}});
    const auto a = execute(plan, ds, leaky(), 2);
    const auto b = execute(plan, testgen::rewrite_eval_rows(ds, a.split.eval_indices, 9), leaky(), 2);
    EXPECT_FALSE(a.params[0] == b.params[0]);
    EXPECT_FALSE(a.model == b.model);
}

TEST(Execute, DeterministicPerSeed) {
    const PipelinePlan plan = plan_of({SplitStep{}, PreprocessStep{}, SynthesizeStep{}});
    const auto a = execute(plan, blobs(), ScopePolicy{}, 12);
    const auto b = execute(plan, blobs(), ScopePolicy{}, 12);
    EXPECT_EQ(a.accuracy, b.accuracy);
    EXPECT_TRUE(a.model == b.model);
    EXPECT_EQ(a.audit.to_jsonl(), b.audit.to_jsonl());
}
