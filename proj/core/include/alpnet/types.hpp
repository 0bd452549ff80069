#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace alpnet {

/// Per-user transmit powers in linear units.
using PowerVector = Eigen::VectorXd;

/// Per-user SIR targets gamma_k > 0 plus the protection margin delta > 1.
struct SirTargets {
    Eigen::VectorXd gamma;
    double delta = 1.0;

    SirTargets() = default;
    SirTargets(Eigen::VectorXd g, double d);

    static SirTargets common(std::size_t users, double gamma, double delta);

    std::size_t size() const { return static_cast<std::size_t>(gamma.size()); }

    /// Same gamma scaled by s (delta unchanged).
    SirTargets scaled(double s) const;
    /// Targets delta*gamma with the same delta.
    SirTargets with_margin() const;
};

/// Box constraints 0 <= p <= p_hat.
struct PowerConstraints {
    Eigen::VectorXd p_hat;

    PowerConstraints() = default;
    explicit PowerConstraints(Eigen::VectorXd caps);

    std::size_t size() const { return static_cast<std::size_t>(p_hat.size()); }
};

/// Active set as a boolean mask, user k active iff mask[k].
using UserMask = std::vector<bool>;

}  // namespace alpnet
