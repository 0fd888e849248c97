#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "leaklab/core.hpp"
#include "leaklab/rng.hpp"

namespace leaklab {

struct TrainConfig {
    double learning_rate = 0.05;
    int max_epochs = 200;
    std::optional<int> patience;  // early stopping; only used by train_early_stop
    Seed seed = 0;                // initialization seed
    Index hidden1 = 100;
    Index hidden2 = 50;

    void validate() const;
};

/// d -> hidden1 -> hidden2 -> 1 perceptron: ReLU hidden layers, logistic output.
template <typename Scalar>
class Mlp {
public:
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using Row = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

    Mat w1, w2, w3;  // d x h1, h1 x h2, h2 x 1
    Row b1, b2;
    Scalar b3 = 0;

    std::vector<double> loss_trace;      // training loss before each update
    std::vector<double> val_loss_trace;  // validation loss after each update (early stopping)
    int epochs_trained = 0;
    int best_epoch = 0;  // snapshot epoch returned by early stopping

    Index input_dim() const noexcept { return w1.rows(); }
    Index parameter_count() const noexcept {
        return w1.size() + b1.size() + w2.size() + b2.size() + w3.size() + 1;
    }

    template <typename Derived>
    Vec logits(const Eigen::MatrixBase<Derived>& x) const {
        const Mat h1 = ((x * w1).rowwise() + b1).cwiseMax(Scalar(0));
        const Mat h2 = ((h1 * w2).rowwise() + b2).cwiseMax(Scalar(0));
        return (h2 * w3).col(0).array() + b3;
    }

    /// Mean binary cross-entropy, evaluated stably from logits.
    template <typename Derived>
    Scalar loss(const Eigen::MatrixBase<Derived>& x, const Vec& y) const {
        return mean_bce(logits(x), y);
    }

    static Scalar mean_bce(const Vec& z, const Vec& y) {
        const auto za = z.array();
        const auto terms = za.cwiseMax(Scalar(0)) - y.array() * za + (-za.abs()).exp().log1p();
        return terms.sum() / static_cast<Scalar>(z.size());
    }

    /// Loss and gradient in flat() order.
    template <typename Derived>
    Scalar loss_and_gradient(const Eigen::MatrixBase<Derived>& x, const Vec& y, Vec& grad) const {
        Workspace ws;
        const Scalar l = forward_backward(x, y, ws);
        grad.resize(parameter_count());
        Index o = 0;
        auto put = [&](const auto& m) {
            for (Index j = 0; j < m.cols(); ++j)
                for (Index i = 0; i < m.rows(); ++i) grad(o++) = m(i, j);
        };
        put(ws.gw1);
        put(ws.gb1);
        put(ws.gw2);
        put(ws.gb2);
        put(ws.gw3);
        grad(o++) = ws.gb3;
        return l;
    }

    /// Every parameter as one vector: w1, b1, w2, b2, w3, b3 (column-major each).
    Vec flat() const {
        Vec v(parameter_count());
        Index o = 0;
        auto put = [&](const auto& m) {
            for (Index j = 0; j < m.cols(); ++j)
                for (Index i = 0; i < m.rows(); ++i) v(o++) = m(i, j);
        };
        put(w1);
        put(b1);
        put(w2);
        put(b2);
        put(w3);
        v(o++) = b3;
        return v;
    }

    void set_flat(const Vec& v) {
        if (v.size() != parameter_count()) throw DimensionError("set_flat: wrong parameter count");
        Index o = 0;
        auto get = [&](auto& m) {
            for (Index j = 0; j < m.cols(); ++j)
                for (Index i = 0; i < m.rows(); ++i) m(i, j) = v(o++);
        };
        get(w1);
        get(b1);
        get(w2);
        get(b2);
        get(w3);
        b3 = v(o++);
    }

    struct Workspace {
        Mat a1, h1, a2, h2, d1, d2;
        Vec z, dz;
        Mat gw1, gw2, gw3;
        Row gb1, gb2;
        Scalar gb3 = 0;
    };

    template <typename Derived>
    Scalar forward_backward(const Eigen::MatrixBase<Derived>& x, const Vec& y, Workspace& ws) const {
        const auto n = static_cast<Scalar>(x.rows());
        ws.a1.noalias() = x * w1;
        ws.a1.rowwise() += b1;
        ws.h1 = ws.a1.cwiseMax(Scalar(0));
        ws.a2.noalias() = ws.h1 * w2;
        ws.a2.rowwise() += b2;
        ws.h2 = ws.a2.cwiseMax(Scalar(0));
        ws.z.noalias() = ws.h2 * w3.col(0);
        ws.z.array() += b3;
        const Scalar l = mean_bce(ws.z, y);

        ws.dz = ((Scalar(1) / ((-ws.z.array()).exp() + Scalar(1))) - y.array()) / n;
        ws.gw3.noalias() = ws.h2.transpose() * ws.dz;
        ws.gb3 = ws.dz.sum();
        ws.d2.noalias() = ws.dz * w3.transpose();
        ws.d2.array() *= (ws.a2.array() > Scalar(0)).template cast<Scalar>();
        ws.gw2.noalias() = ws.h1.transpose() * ws.d2;
        ws.gb2 = ws.d2.colwise().sum();
        ws.d1.noalias() = ws.d2 * w2.transpose();
        ws.d1.array() *= (ws.a1.array() > Scalar(0)).template cast<Scalar>();
        ws.gw1.noalias() = x.transpose() * ws.d1;
        ws.gb1 = ws.d1.colwise().sum();
        return l;
    }

    void apply_gradient(const Workspace& ws, Scalar lr) {
        w1.noalias() -= lr * ws.gw1;
        b1.noalias() -= lr * ws.gb1;
        w2.noalias() -= lr * ws.gw2;
        b2.noalias() -= lr * ws.gb2;
        w3.noalias() -= lr * ws.gw3;
        b3 -= lr * ws.gb3;
    }

    bool finite() const {
        return w1.allFinite() && w2.allFinite() && w3.allFinite() && b1.allFinite() && b2.allFinite() &&
               std::isfinite(static_cast<double>(b3));
    }

    friend bool operator==(const Mlp& a, const Mlp& b) {
        return a.input_dim() == b.input_dim() && a.w1.cols() == b.w1.cols() && a.w2.cols() == b.w2.cols() &&
               a.flat() == b.flat();
    }
};

template <typename Scalar>
using ScalarMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Glorot-uniform weights, zero biases.
template <typename Scalar>
Mlp<Scalar> init_mlp(Index d, Seed seed, Index hidden1 = 100, Index hidden2 = 50) {
    if (d < 1) throw ConfigError("init_mlp: input dimension must be >= 1");
    if (hidden1 < 1 || hidden2 < 1) throw ConfigError("init_mlp: hidden widths must be >= 1");
    Rng rng = make_rng(seed);
    auto glorot = [&](Index fan_in, Index fan_out) {
        const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::uniform_real_distribution<double> u(-a, a);
        ScalarMatrix<Scalar> w(fan_in, fan_out);
        for (Index j = 0; j < fan_out; ++j)
            for (Index i = 0; i < fan_in; ++i) w(i, j) = static_cast<Scalar>(u(rng));
        return w;
    };
    Mlp<Scalar> m;
    m.w1 = glorot(d, hidden1);
    m.w2 = glorot(hidden1, hidden2);
    m.w3 = glorot(hidden2, 1);
    m.b1 = Mlp<Scalar>::Row::Zero(hidden1);
    m.b2 = Mlp<Scalar>::Row::Zero(hidden2);
    m.b3 = Scalar(0);
    return m;
}

template <typename Scalar>
Mlp<Scalar> init_mlp(Index d, const TrainConfig& cfg) {
    return init_mlp<Scalar>(d, cfg.seed, cfg.hidden1, cfg.hidden2);
}

namespace detail {

void require_trainable(const Dataset& ds, Index input_dim, const char* who);

template <typename Scalar>
ScalarMatrix<Scalar> features_as(const Dataset& ds) {
    return ds.features().template cast<Scalar>();
}

template <typename Scalar>
typename Mlp<Scalar>::Vec labels_as(const Dataset& ds) {
    return ds.labels().template cast<Scalar>();
}

}  // namespace detail

/// Full-batch gradient descent on mean binary cross-entropy for cfg.max_epochs.
template <typename Scalar>
Mlp<Scalar> train(Mlp<Scalar> m, const Dataset& data, const TrainConfig& cfg) {
    cfg.validate();
    detail::require_trainable(data, m.input_dim(), "train");
    const auto x = detail::features_as<Scalar>(data);
    const auto y = detail::labels_as<Scalar>(data);
    typename Mlp<Scalar>::Workspace ws;
    const auto lr = static_cast<Scalar>(cfg.learning_rate);
    m.loss_trace.clear();
    m.loss_trace.reserve(static_cast<std::size_t>(cfg.max_epochs));
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const Scalar l = m.forward_backward(x, y, ws);
        if (!std::isfinite(static_cast<double>(l)))
            throw DivergenceError(epoch, "training loss became non-finite at epoch " + std::to_string(epoch));
        m.loss_trace.push_back(static_cast<double>(l));
        m.apply_gradient(ws, lr);
        m.epochs_trained = epoch;
    }
    if (!m.finite())
        throw DivergenceError(cfg.max_epochs, "parameters became non-finite after the last epoch");
    m.best_epoch = m.epochs_trained;
    return m;
}

/// Gradient descent that evaluates val loss after every step and returns the
/// snapshot with the lowest val loss, stopping after cfg.patience epochs
/// without improvement (never, when patience is unset).
template <typename Scalar>
Mlp<Scalar> train_early_stop(Mlp<Scalar> m, const Dataset& data, const Dataset& val, const TrainConfig& cfg) {
    cfg.validate();
    detail::require_trainable(data, m.input_dim(), "train_early_stop");
    if (val.empty()) throw InsufficientDataError("train_early_stop: validation set is empty");
    detail::require_trainable(val, m.input_dim(), "train_early_stop (validation)");
    const auto x = detail::features_as<Scalar>(data);
    const auto y = detail::labels_as<Scalar>(data);
    const auto xv = detail::features_as<Scalar>(val);
    const auto yv = detail::labels_as<Scalar>(val);
    typename Mlp<Scalar>::Workspace ws;
    const auto lr = static_cast<Scalar>(cfg.learning_rate);
    const int patience = cfg.patience.value_or(std::numeric_limits<int>::max());

    m.loss_trace.clear();
    m.val_loss_trace.clear();
    Mlp<Scalar> best = m;
    double best_loss = std::numeric_limits<double>::infinity();
    int since_best = 0;
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const Scalar l = m.forward_backward(x, y, ws);
        if (!std::isfinite(static_cast<double>(l)))
            throw DivergenceError(epoch, "training loss became non-finite at epoch " + std::to_string(epoch));
        m.loss_trace.push_back(static_cast<double>(l));
        m.apply_gradient(ws, lr);
        m.epochs_trained = epoch;
        const double vl = static_cast<double>(m.loss(xv, yv));
        if (!std::isfinite(vl))
            throw DivergenceError(epoch, "validation loss became non-finite at epoch " + std::to_string(epoch));
        m.val_loss_trace.push_back(vl);
        if (vl < best_loss) {
            best_loss = vl;
            best = m;
            best.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= patience) {
            break;
        }
    }
    best.loss_trace = m.loss_trace;
    best.val_loss_trace = m.val_loss_trace;
    best.epochs_trained = m.epochs_trained;
    return best;
}

template <typename Scalar>
Labels predict(const Mlp<Scalar>& m, const Dataset& ds) {
    detail::require_trainable(ds, m.input_dim(), "predict");
    const auto z = m.logits(detail::features_as<Scalar>(ds));
    return (z.array() > Scalar(0)).template cast<int>();  // logistic(z) > 0.5
}

template <typename Scalar>
double accuracy(const Mlp<Scalar>& m, const Dataset& ds) {
    if (ds.empty()) throw InsufficientDataError("accuracy: empty dataset");
    const Labels p = predict(m, ds);
    return static_cast<double>((p.array() == ds.labels().array()).count()) / static_cast<double>(ds.rows());
}

}  // namespace leaklab
