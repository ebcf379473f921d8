// Small dense building blocks shared by the deterministic stand-in networks.

#pragma once

#include <cmath>

#include "roistereo/errors.hpp"
#include "roistereo/types.hpp"

namespace roistereo {

inline VecX relu(const VecX& x) { return x.cwiseMax(0.0); }

inline Scalar sigmoid(Scalar x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Scalar stable_softplus(Scalar x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

// Layer normalization over a single vector: zero mean, unit variance
// (population variance, epsilon only guards the all-constant case).
inline VecX layer_norm(const VecX& x) {
    constexpr Scalar kEps = 1e-12;
    const Scalar mean = x.mean();
    const VecX centered = x.array() - mean;
    const Scalar var = centered.squaredNorm() / static_cast<Scalar>(x.size());
    return centered / std::sqrt(var + kEps);
}

inline VecX linear(const MatX& w, const VecX& b, const VecX& x) {
    if (w.cols() != x.size() || w.rows() != b.size()) {
        throw ShapeMismatch("linear: weight " + std::to_string(w.rows()) + "x" +
                            std::to_string(w.cols()) + " vs input " + std::to_string(x.size()) +
                            ", bias " + std::to_string(b.size()));
    }
    return w * x + b;
}

}  // namespace roistereo
