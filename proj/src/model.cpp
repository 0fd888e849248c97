#include "leaklab/model.hpp"

namespace leaklab {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw ConfigError("train: learning_rate must be finite and > 0");
    if (max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
    if (patience && *patience < 1) throw ConfigError("train: patience must be >= 1");
    if (hidden1 < 1 || hidden2 < 1) throw ConfigError("train: hidden widths must be >= 1");
}

namespace detail {

void require_trainable(const Dataset& ds, Index input_dim, const char* who) {
    if (ds.cols() != input_dim)
        throw DimensionError(std::string(who) + ": dataset has " + std::to_string(ds.cols()) +
                             " features, model expects " + std::to_string(input_dim));
    if (ds.has_missing())
        throw PreconditionError(std::string(who) + ": dataset has missing values; impute first");
}

}  // namespace detail

}  // namespace leaklab
