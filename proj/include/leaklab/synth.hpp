#pragma once

#include <numbers>
#include <vector>

#include "leaklab/core.hpp"
#include "leaklab/rng.hpp"

namespace leaklab {

/// Balanced two-class Gaussian blobs. Informative columns are N(±separation/2, 1),
/// the rest N(0, 1).
struct BlobConfig {
    Index n = 1000;
    Index d = 20;
    Index n_informative = 5;
    double separation = 1.0;
    Seed seed = 7;

    void validate() const;
};

/// provenance ids are first_provenance, first_provenance + 1, ...
Dataset gen_blobs(const BlobConfig& cfg, ProvenanceId first_provenance = 0);

/// Appends one column: N(label * delta, 1) when leaky, N(0, 1) otherwise.
Dataset inject_spurious_feature(const Dataset& ds, double delta, bool leaky, Seed seed);

/// Adds magnitude to every feature of the selected rows.
Dataset apply_shift(const Dataset& ds, double magnitude, const IndexList& rows);

/// n_sources blocks of n / n_sources rows; block k is shifted by k * source_shift
/// in every coordinate and tagged source_id = k.
Dataset gen_multisource(const BlobConfig& cfg, int n_sources, double source_shift);

struct WindowPair {
    Dataset train;
    Dataset eval;
    Index shared = 0;  // rows present in both windows
};

/// A drifting sequence of 2L - s rows (L = cfg.n, s = floor(overlap * L)).
/// Window 1 is rows [0, L), window 2 is rows [L - s, 2L - s). Class means of the
/// informative columns rotate with time by phase_per_window radians per window
/// length, so nearby rows share a decision boundary and distant ones do not.
WindowPair gen_drifting_windows(const BlobConfig& cfg, double overlap,
                                double phase_per_window = std::numbers::pi / 2);

struct FrankensteinPlan {
    int stages = 5;
    Index fresh_per_stage = 250;
    double dup_fraction = 0.3;
    Seed seed = 7;
    // Stage r draws its fresh rows with separation * separation_decay^(r-1):
    // later acquisitions are noisier.
    double separation_decay = 1.0;

    void validate() const;
};

/// Cumulative unions D_1, D_1 u D_2, ... . Stage r >= 2 holds fresh_per_stage new
/// rows (source_id = r - 1) plus floor(dup_fraction * fresh_per_stage) exact copies
/// of rows drawn uniformly from earlier stages.
std::vector<Dataset> compose_frankenstein(const FrankensteinPlan& plan, const BlobConfig& cfg);

}  // namespace leaklab
