#include "leaklab/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace leaklab {

void BlobConfig::validate() const {
    if (n < 2) throw ConfigError("blobs: n must be at least 2, got " + std::to_string(n));
    if (d < 1) throw ConfigError("blobs: d must be at least 1");
    if (n_informative < 1 || n_informative > d)
        throw ConfigError("blobs: n_informative must lie in [1, d], got " +
                          std::to_string(n_informative));
    if (!(separation >= 0.0) || !std::isfinite(separation))
        throw ConfigError("blobs: separation must be finite and >= 0");
}

Dataset gen_blobs(const BlobConfig& cfg, ProvenanceId first_provenance) {
    cfg.validate();
    Rng rng = make_rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<int> y(static_cast<std::size_t>(cfg.n));
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<int>(i % 2);
    std::shuffle(y.begin(), y.end(), rng);

    Matrix x(cfg.n, cfg.d);
    Labels labels(cfg.n);
    std::vector<Metadata> meta(static_cast<std::size_t>(cfg.n));
    const double half = cfg.separation / 2.0;
    for (Index i = 0; i < cfg.n; ++i) {
        const int label = y[static_cast<std::size_t>(i)];
        labels(i) = label;
        const double sign = label == 1 ? 1.0 : -1.0;
        for (Index j = 0; j < cfg.d; ++j) {
            x(i, j) = normal(rng) + (j < cfg.n_informative ? sign * half : 0.0);
        }
        meta[static_cast<std::size_t>(i)].provenance_id = first_provenance + i;
    }
    return Dataset(std::move(x), std::move(labels), std::move(meta));
}

Dataset inject_spurious_feature(const Dataset& ds, double delta, bool leaky, Seed seed) {
    if (ds.empty()) throw InsufficientDataError("inject_spurious_feature: empty dataset");
    if (!(delta >= 0.0) || !std::isfinite(delta))
        throw ConfigError("inject_spurious_feature: delta must be finite and >= 0");
    Rng rng = make_rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix x(ds.rows(), ds.cols() + 1);
    x.leftCols(ds.cols()) = ds.features();
    for (Index i = 0; i < ds.rows(); ++i) {
        const double mean = leaky ? ds.labels()(i) * delta : 0.0;
        x(i, ds.cols()) = mean + normal(rng);
    }
    std::optional<Mask> mask;
    if (ds.missing()) {
        Mask m = Mask::Constant(ds.rows(), ds.cols() + 1, false);
        m.leftCols(ds.cols()) = *ds.missing();
        mask = std::move(m);
    }
    return Dataset(std::move(x), ds.labels(), ds.meta(), std::move(mask));
}

Dataset apply_shift(const Dataset& ds, double magnitude, const IndexList& rows) {
    Matrix x = ds.features();
    for (Index r : rows) {
        if (r < 0 || r >= ds.rows())
            throw IndexError("apply_shift: row " + std::to_string(r) + " out of range");
    }
    if (magnitude == 0.0) return ds;
    // A row listed twice is still shifted once.
    std::vector<bool> hit(static_cast<std::size_t>(ds.rows()), false);
    for (Index r : rows) {
        if (hit[static_cast<std::size_t>(r)]) continue;
        hit[static_cast<std::size_t>(r)] = true;
        x.row(r).array() += magnitude;
    }
    return ds.with_features(std::move(x));
}

Dataset gen_multisource(const BlobConfig& cfg, int n_sources, double source_shift) {
    cfg.validate();
    if (n_sources < 2) throw ConfigError("multisource: need at least 2 sources");
    if (!(source_shift >= 0.0) || !std::isfinite(source_shift))
        throw ConfigError("multisource: source_shift must be finite and >= 0");
    const Index per = cfg.n / n_sources;
    if (per < 2) throw ConfigError("multisource: fewer than 2 rows per source");

    Dataset out;
    for (int k = 0; k < n_sources; ++k) {
        BlobConfig sub = cfg;
        sub.n = per;
        sub.seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(k)});
        Dataset block = gen_blobs(sub, static_cast<ProvenanceId>(k) * per);
        Matrix x = block.features().array() + k * source_shift;
        std::vector<Metadata> meta = block.meta();
        for (auto& m : meta) m.source_id = k;
        out = concat(out, Dataset(std::move(x), block.labels(), std::move(meta)));
    }
    return out;
}

WindowPair gen_drifting_windows(const BlobConfig& cfg, double overlap, double phase_per_window) {
    cfg.validate();
    if (!(overlap >= 0.0 && overlap < 1.0))
        throw ConfigError("drifting windows: overlap must lie in [0, 1), got " +
                          std::to_string(overlap));
    const Index window = cfg.n;
    const auto shared = static_cast<Index>(std::floor(overlap * static_cast<double>(window)));
    const Index total = 2 * window - shared;

    Rng rng = make_rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    const double amplitude = cfg.separation / 2.0 * std::numbers::sqrt2;
    const auto k = static_cast<double>(cfg.n_informative);

    Matrix x(total, cfg.d);
    Labels labels(total);
    std::vector<Metadata> meta(static_cast<std::size_t>(total));
    for (Index t = 0; t < total; ++t) {
        const int label = coin(rng) ? 1 : 0;
        labels(t) = label;
        const double sign = label == 1 ? 1.0 : -1.0;
        const double theta = phase_per_window * static_cast<double>(t) / static_cast<double>(window);
        for (Index j = 0; j < cfg.d; ++j) {
            double mean = 0.0;
            if (j < cfg.n_informative)
                mean = sign * amplitude * std::cos(theta - std::numbers::pi * static_cast<double>(j) / k);
            x(t, j) = mean + normal(rng);
        }
        auto& m = meta[static_cast<std::size_t>(t)];
        m.time_index = t;
        m.provenance_id = t;
    }
    Dataset all(std::move(x), std::move(labels), std::move(meta));

    IndexList first(static_cast<std::size_t>(window));
    std::iota(first.begin(), first.end(), Index{0});
    IndexList second(static_cast<std::size_t>(window));
    std::iota(second.begin(), second.end(), window - shared);
    return {all.subset(first), all.subset(second), shared};
}

void FrankensteinPlan::validate() const {
    if (stages < 1) throw ConfigError("frankenstein: stages must be >= 1");
    if (fresh_per_stage < 2) throw ConfigError("frankenstein: fresh_per_stage must be >= 2");
    if (!(dup_fraction >= 0.0 && dup_fraction <= 1.0))
        throw ConfigError("frankenstein: dup_fraction must lie in [0, 1]");
    if (!(separation_decay > 0.0) || !std::isfinite(separation_decay))
        throw ConfigError("frankenstein: separation_decay must be finite and > 0");
}

std::vector<Dataset> compose_frankenstein(const FrankensteinPlan& plan, const BlobConfig& cfg) {
    plan.validate();
    cfg.validate();
    Rng rng = make_rng(plan.seed);
    const auto n_dup = static_cast<Index>(std::floor(plan.dup_fraction *
                                                     static_cast<double>(plan.fresh_per_stage)));
    std::vector<Dataset> cumulative;
    Dataset so_far;
    ProvenanceId next_id = 0;
    for (int r = 1; r <= plan.stages; ++r) {
        BlobConfig sub = cfg;
        sub.n = plan.fresh_per_stage;
        sub.separation = cfg.separation * std::pow(plan.separation_decay, r - 1);
        sub.seed = derive_seed(plan.seed, {static_cast<std::uint64_t>(r)});
        Dataset fresh = gen_blobs(sub, next_id);
        next_id += plan.fresh_per_stage;
        std::vector<Metadata> meta = fresh.meta();
        for (auto& m : meta) m.source_id = r - 1;
        Dataset stage(fresh.features(), fresh.labels(), std::move(meta));
        if (r > 1 && n_dup > 0) {
            std::uniform_int_distribution<Index> pick(0, so_far.rows() - 1);
            IndexList copies(static_cast<std::size_t>(n_dup));
            for (auto& c : copies) c = pick(rng);
            stage = concat(stage, so_far.subset(copies));
        }
        so_far = concat(so_far, stage);
        cumulative.push_back(so_far);
    }
    return cumulative;
}

}  // namespace leaklab
