#pragma once

// Feasibility indices C(Gamma), C(Gamma; P), fixed points of the weighted
// interference map, and classification into the admissibility regimes.

#include "alpnet/interference.hpp"
#include "alpnet/types.hpp"

#include <optional>
#include <string>

namespace alpnet {

struct SolverOptions {
    double tol = 1e-10;  ///< relative
    int max_iter = 100000;
};

/// Spectral radius of diag(gamma) V by power iteration; falls back to a
/// dense eigenvalue solve when the iteration does not settle.
double c_gamma_affine(const AffineModel& model, const SirTargets& targets);

enum class Verdict { feasible, infeasible, undecided };

std::string to_string(Verdict v);

struct GeneralFeasibilityOptions {
    int max_iter = 100000;      ///< per probe
    double guard = 1e12;        ///< times the noise-level scale ||Gamma I(0)||_inf
    int window = 50;            ///< consecutive steps above guard with growth
    double growth = 1.0 + 1e-6; ///< per-step growth ratio bound
    double tol = 1e-10;         ///< convergence of a probe
    int bisection_iters = 40;
    double bisection_rel_tol = 1e-7;  ///< stop once the bracket is this tight
    double scale_cap = 1e12;          ///< bracket search range for the scalar s
};

/// Decision on a single target vector: run p <- Gamma I(p) from zero and
/// watch for convergence, a strict feasibility certificate Gamma I(q) < q, or
/// sustained geometric growth beyond the guard.
Verdict decide_feasible(const InterferenceModel& model, const Eigen::VectorXd& gamma,
                        const GeneralFeasibilityOptions& opts = {});

struct GeneralFeasibility {
    double value = 0.0;  ///< C(Gamma) estimate, the reciprocal boundary scalar
    Verdict verdict = Verdict::undecided;
};

/// Verdict at Gamma plus an estimate of C(Gamma) from bisection on s such
/// that s Gamma sits on the feasibility boundary (C(s Gamma) = s C(Gamma)).
/// Undecided probes count as infeasible during bisection.
GeneralFeasibility c_gamma_general(const InterferenceModel& model, const SirTargets& targets,
                                   const GeneralFeasibilityOptions& opts = {});

/// Fixed point of p <- Gamma I(p). Throws BudgetError with the last iterate.
PowerVector yates_fixed_point(const InterferenceModel& model, const Eigen::VectorXd& gamma,
                              const PowerVector& p0, const SolverOptions& opts = {});

/// Convenience: fixed point of Gamma I (targets.gamma; delta unused).
PowerVector yates_fixed_point(const InterferenceModel& model, const SirTargets& targets,
                              const PowerVector& p0, const SolverOptions& opts = {});

/// Unique fixed point of p -> min{delta Gamma I(p), p_hat}.
PowerVector constrained_fixed_point(const InterferenceModel& model, const SirTargets& targets,
                                    const PowerConstraints& caps, const SolverOptions& opts = {});

struct ConstrainedFeasibility {
    double value = 0.0;     ///< C(Gamma; P)
    PowerVector minimizer;  ///< p' attaining the min-max
};

/// C(Gamma; P) by bisection on s: s Gamma is feasible under the caps iff the
/// fixed point q of p -> min{s Gamma I(p), p_hat} satisfies q >= s Gamma I(q).
ConstrainedFeasibility c_gamma_constrained(const InterferenceModel& model, const SirTargets& targets,
                                           const PowerConstraints& caps, double tol = 1e-10);

enum class Regime { fully_admissible, delta_incompatible, totally_inadmissible, undecided };

/// "C1"/"C2"/"C3" (or the primed names when `constrained`), "undecided".
std::string regime_name(Regime r, bool constrained);

struct FeasibilityReport {
    // Unconstrained.
    double c_gamma = 0.0;
    double c_delta_gamma = 0.0;
    Verdict verdict_gamma = Verdict::undecided;
    Verdict verdict_delta_gamma = Verdict::undecided;
    std::string value_source;  ///< "spectral-radius" or "bisection-estimate"
    Regime regime = Regime::undecided;
    std::optional<PowerVector> fixed_point;        ///< p* = Gamma I(p*)
    std::optional<PowerVector> margin_fixed_point; ///< p-bar = delta Gamma I(p-bar)

    // Constrained (present when caps were given).
    bool has_constraints = false;
    double c_gamma_caps = 0.0;
    double c_delta_gamma_caps = 0.0;
    Regime regime_caps = Regime::undecided;
    std::optional<PowerVector> p_circle;  ///< fixed point of min{delta Gamma I, p_hat}, valid under C1'
    std::optional<PowerVector> p_prime;   ///< min-max minimizer at Gamma
};

/// Values within this distance of 1 fall on the infeasible side.
inline constexpr double kBoundaryTie = 1e-9;

FeasibilityReport classify(const InterferenceModel& model, const SirTargets& targets,
                           const std::optional<PowerConstraints>& caps = std::nullopt,
                           const GeneralFeasibilityOptions& general = {});

/// Render a report as a JSON object (17 significant digits).
std::string to_json(const FeasibilityReport& r);

}  // namespace alpnet
