#pragma once
// Brute-force reference arithmetic, written independently of the library.

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "leaklab/core.hpp"

namespace leaklab::testgen {

/// Exhaustive nearest-donor search for every missing cell.
inline Matrix knn_oracle(const Dataset& ds, Index k, const IndexList& fit_rows) {
    const Mask& miss = *ds.missing();
    const Matrix& x = ds.features();
    Matrix out = x;
    for (Index i = 0; i < ds.rows(); ++i)
        for (Index j = 0; j < ds.cols(); ++j) {
            if (!miss(i, j)) continue;
            std::vector<std::pair<double, Index>> c;
            for (Index r : fit_rows) {
                if (r == i || miss(r, j)) continue;
                if (std::find_if(c.begin(), c.end(), [&](auto& p) { return p.second == r; }) != c.end()) continue;
                double s = 0.0;
                int shared = 0;
                for (Index q = 0; q < ds.cols(); ++q)
                    if (!miss(i, q) && !miss(r, q)) {
                        s += (x(i, q) - x(r, q)) * (x(i, q) - x(r, q));
                        ++shared;
                    }
                c.push_back({shared ? std::sqrt(s) : std::numeric_limits<double>::infinity(), r});
            }
            std::sort(c.begin(), c.end());
            c.resize(std::min<std::size_t>(c.size(), static_cast<std::size_t>(k)));
            double num = 0, den = 0;
            for (auto [d, r] : c)
                if (d == 0) num += x(r, j), den += 1;
            if (den == 0)
                for (auto [d, r] : c)
                    if (std::isfinite(d)) num += x(r, j) / d, den += 1 / d;
            if (den == 0) {
                for (auto [d, r] : c) num += x(r, j);
                den = static_cast<double>(c.size());
            }
            out(i, j) = num / den;
        }
    return out;
}

/// Distance from s to the closest point of segment [a, b], max-norm.
inline double segment_residual(const Eigen::RowVectorXd& s, const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
    const Eigen::RowVectorXd d = b - a;
    const double dd = d.squaredNorm();
    if (dd == 0) return (s - a).cwiseAbs().maxCoeff();
    const double lambda = std::clamp((s - a).dot(d) / dd, 0.0, 1.0);
    return (s - (a + lambda * d)).cwiseAbs().maxCoeff();
}

/// Loop mean and n - 1 standard deviation.
inline std::pair<double, double> mean_std_oracle(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    const double m = s / static_cast<double>(v.size());
    if (v.size() < 2) return {m, 0.0};
    double ss = 0;
    for (double x : v) ss += (x - m) * (x - m);
    return {m, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

}  // namespace leaklab::testgen
