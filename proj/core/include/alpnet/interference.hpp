#pragma once

// Interference functions p -> I(p) and tools for checking the standard
// axioms (positivity, strict scalability, monotonicity).

#include "alpnet/types.hpp"

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace alpnet {

class InterferenceModel {
public:
    virtual ~InterferenceModel() = default;

    virtual std::size_t users() const = 0;

    /// I(p). Throws InputError on a length mismatch or a non-finite or
    /// negative entry.
    Eigen::VectorXd evaluate(const PowerVector& p) const;

protected:
    virtual Eigen::VectorXd do_evaluate(const Eigen::VectorXd& p) const = 0;
};

using ModelPtr = std::shared_ptr<const InterferenceModel>;

/// I(p) = V p + z with a nonnegative zero-diagonal gain matrix and positive
/// noise.
class AffineModel final : public InterferenceModel {
public:
    AffineModel(Eigen::MatrixXd gain, Eigen::VectorXd noise);

    std::size_t users() const override { return static_cast<std::size_t>(noise_.size()); }
    const Eigen::MatrixXd& gain() const { return gain_; }
    const Eigen::VectorXd& noise() const { return noise_; }

protected:
    Eigen::VectorXd do_evaluate(const Eigen::VectorXd& p) const override;

private:
    Eigen::MatrixXd gain_;
    Eigen::VectorXd noise_;
};

/// Interference under a per-user adaptive receive strategy u on the unit
/// sphere:
///
///   rho_k(p, u) = sum_{l != k} |u^H g_kl|^2 / |u^H g_kk|^2 p_l
///               + sigma_k^2 ||u||^2 / |u^H g_kk|^2
///
/// and I_k(p) = min_u rho_k(p, u). With the full sphere the minimum has the
/// closed form 1 / (g_kk^H R_k(p)^{-1} g_kk), R_k(p) = sum_{l != k} p_l g_kl
/// g_kl^H + sigma_k^2 Id. A finite strategy grid can be supplied instead;
/// then the minimum is taken over the grid only.
class MinStrategyModel final : public InterferenceModel {
public:
    /// channels[k][l] is the effective channel g_kl of transmitter l at
    /// receiver k; all of the same length.
    MinStrategyModel(std::vector<std::vector<Eigen::VectorXcd>> channels,
                     Eigen::VectorXd noise);

    /// Restrict the strategy set to `grid` (unit-norm vectors, shared by all
    /// users).
    MinStrategyModel with_grid(std::vector<Eigen::VectorXcd> grid) const;

    std::size_t users() const override { return channels_.size(); }
    Eigen::Index receive_dim() const { return channels_.front().front().size(); }
    const std::vector<std::vector<Eigen::VectorXcd>>& channels() const { return channels_; }
    const Eigen::VectorXd& noise() const { return noise_; }
    bool uses_grid() const { return !grid_.empty(); }

    /// rho_k(p, u). Returns +inf when u carries no signal for user k.
    double strategy_cost(std::size_t k, const PowerVector& p, const Eigen::VectorXcd& u) const;

    /// Unit-norm minimizer of rho_k(p, .) over the full sphere.
    Eigen::VectorXcd optimal_receiver(std::size_t k, const PowerVector& p) const;

    /// Interference-plus-noise covariance R_k(p).
    Eigen::MatrixXcd covariance(std::size_t k, const PowerVector& p) const;

protected:
    Eigen::VectorXd do_evaluate(const Eigen::VectorXd& p) const override;

private:
    double closed_form(std::size_t k, const Eigen::VectorXd& p) const;

    std::vector<std::vector<Eigen::VectorXcd>> channels_;
    Eigen::VectorXd noise_;
    std::vector<Eigen::VectorXcd> grid_;
};

/// Pointwise maximum over a finite uncertainty set of standard members.
class WorstCaseModel final : public InterferenceModel {
public:
    explicit WorstCaseModel(std::vector<ModelPtr> members);

    std::size_t users() const override { return members_.front()->users(); }
    const std::vector<ModelPtr>& members() const { return members_; }

protected:
    Eigen::VectorXd do_evaluate(const Eigen::VectorXd& p) const override;

private:
    std::vector<ModelPtr> members_;
};

/// Arbitrary map, used for maps that deliberately break the axioms and for
/// composite maps built from other models.
class FunctionModel final : public InterferenceModel {
public:
    using Fn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

    FunctionModel(std::size_t users, Fn fn) : users_(users), fn_(std::move(fn)) {}

    std::size_t users() const override { return users_; }

protected:
    Eigen::VectorXd do_evaluate(const Eigen::VectorXd& p) const override { return fn_(p); }

private:
    std::size_t users_;
    Fn fn_;
};

/// Gamma * I(p).
Eigen::VectorXd evaluate_weighted(const InterferenceModel& model, const SirTargets& targets,
                                  const PowerVector& p);

/// SIR_k(p) = p_k / I_k(p).
Eigen::VectorXd sirs(const InterferenceModel& model, const PowerVector& p);

// --- axiom checker -------------------------------------------------------

enum class Axiom { positivity, scalability, monotonicity };

std::string to_string(Axiom a);

struct AxiomCounterexample {
    Axiom axiom;
    std::size_t user = 0;
    Eigen::VectorXd p;
    Eigen::VectorXd p_lower;  ///< second point for monotonicity
    double mu = 1.0;          ///< scale factor for scalability
    double slack = 0.0;       ///< the offending margin
};

struct AxiomReport {
    bool positivity = true;
    bool scalability = true;
    bool monotonicity = true;
    std::optional<AxiomCounterexample> counterexample;

    bool all_pass() const { return positivity && scalability && monotonicity; }
};

struct AxiomCheckOptions {
    int trials = 200;
    std::vector<double> scale_grid{1.0 + 1e-6, 1.5, 10.0};
    double power_lo = 1e-3;
    double power_hi = 1e3;
    double slack = 1e-12;
    std::uint64_t seed = 0x5eed;
};

/// Randomized falsification of positivity, strict scalability and
/// monotonicity. The zero vector is always probed first. The first failure
/// per axiom is kept; the report's counterexample is the earliest one found.
AxiomReport check_axioms(const InterferenceModel& model, const AxiomCheckOptions& opts = {});

// --- asymptotic interference ---------------------------------------------

/// Limit J(p) = lim_{c -> inf} Gamma I(c p) / c of a weighted standard map.
class AsymptoticModel final : public InterferenceModel {
public:
    AsymptoticModel(ModelPtr base, Eigen::VectorXd gamma,
                    std::vector<double> probes = default_probes(), double tol = 1e-8);

    static std::vector<double> default_probes();

    std::size_t users() const override { return base_->users(); }
    const InterferenceModel& base() const { return *base_; }
    const Eigen::VectorXd& gamma() const { return gamma_; }
    const std::vector<double>& probes() const { return probes_; }
    double tol() const { return tol_; }

protected:
    Eigen::VectorXd do_evaluate(const Eigen::VectorXd& p) const override;

private:
    ModelPtr base_;
    Eigen::VectorXd gamma_;
    std::vector<double> probes_;
    double tol_;
};

/// Estimate J(p) by walking the probe schedule until successive estimates of
/// Gamma I(c p)/c agree to `tol` (relative, with an absolute floor tied to
/// the c = 1 level). Throws BudgetError if the schedule is exhausted and
/// PreconditionError if the estimates increase in c, which no standard map
/// allows.
Eigen::VectorXd asymptotic_limit(const AsymptoticModel& model, const PowerVector& p, double tol);

/// Map p_a -> J_A((p_a, lambda)) over the active coordinates, with the
/// inactive coordinates pinned to lambda > 0. `active` has one flag per user
/// of `limit`; lambda has one entry per inactive user, in index order.
std::shared_ptr<InterferenceModel> restrict_active(ModelPtr limit, const UserMask& active,
                                                   const Eigen::VectorXd& lambda);

/// Scatter an active-subvector and inactive-subvector back into length K.
Eigen::VectorXd merge_partition(const UserMask& active, const Eigen::VectorXd& active_part,
                                const Eigen::VectorXd& inactive_part);

/// Gather the coordinates whose mask flag equals `want`.
Eigen::VectorXd select(const Eigen::VectorXd& v, const UserMask& mask, bool want = true);

}  // namespace alpnet
