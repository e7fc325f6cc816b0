#include <cmath>
#include <numeric>

#include "traceguard/classifiers.hpp"
#include "traceguard/errors.hpp"

namespace traceguard {

// Full-batch subgradient descent on
//   0.5*lambda*||w||^2 + mean_i c_i * max(0, 1 - y_i (w.x_i + b))
// with lambda = 1/(C*n) and balanced class weights c_i = n/(2*n_class).
// Fixed schedule eta_t = eta0 / (1 + t/tau); stops early when the update
// falls below kTolerance. Everything is deterministic; the seed is recorded
// as provenance only.
SvmModel train_svm(const std::vector<FeatureVector>& X, const std::vector<bool>& y,
                   std::uint64_t seed) {
    if (X.empty() || X.size() != y.size()) throw InsufficientData("empty or mismatched training set");
    const std::size_t dim = X.front().dimension();
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < X.size(); ++i) {
        if (X[i].dimension() != dim) throw DimensionMismatch("inconsistent feature dimensions");
        for (double v : X[i].values)
            if (!std::isfinite(v)) throw NonFiniteInput("non-finite feature value");
        n_pos += y[i] ? 1 : 0;
    }
    const std::size_t n = X.size();
    const std::size_t n_neg = n - n_pos;
    if (n_pos < 2 || n_neg < 2) throw DegenerateLabels("need at least 2 samples per class");

    const double nd = static_cast<double>(n);
    const double w_pos = nd / (2.0 * static_cast<double>(n_pos));
    const double w_neg = nd / (2.0 * static_cast<double>(n_neg));
    const double lambda = 1.0 / (SvmModel::kC * nd);
    const double eta0 = 0.5;
    const double tau = 200.0;

    std::vector<double> w(dim, 0.0);
    double b = 0.0;
    std::vector<double> grad(dim, 0.0);
    for (int t = 0; t < SvmModel::kMaxIterations; ++t) {
        for (std::size_t j = 0; j < dim; ++j) grad[j] = lambda * w[j];
        double grad_b = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double yi = y[i] ? 1.0 : -1.0;
            double margin = yi * (std::inner_product(X[i].values.begin(), X[i].values.end(),
                                                     w.begin(), 0.0) + b);
            if (margin < 1.0) {
                double c = (y[i] ? w_pos : w_neg) / nd;
                for (std::size_t j = 0; j < dim; ++j) grad[j] -= c * yi * X[i].values[j];
                grad_b -= c * yi;
            }
        }
        double eta = eta0 / (1.0 + static_cast<double>(t) / tau);
        double max_step = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            double step = eta * grad[j];
            w[j] -= step;
            max_step = std::max(max_step, std::abs(step));
        }
        b -= eta * grad_b;
        max_step = std::max(max_step, std::abs(eta * grad_b));
        if (max_step < SvmModel::kTolerance) break;
    }
    return SvmModel(std::move(w), b, seed);
}

Prediction SvmModel::predict(const FeatureVector& v) const {
    if (v.dimension() != weights_.size()) throw DimensionMismatch("svm feature dimension mismatch");
    Prediction p;
    p.score = std::inner_product(v.values.begin(), v.values.end(), weights_.begin(), 0.0) + bias_;
    p.backdoor = p.score > threshold();
    return p;
}

}  // namespace traceguard
