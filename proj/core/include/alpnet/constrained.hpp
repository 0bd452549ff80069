#pragma once

// Power-constrained admission control, sufficient conditions for protection
// under caps, and the distress-signal variant.

#include "alpnet/alp.hpp"
#include "alpnet/interference.hpp"
#include "alpnet/types.hpp"

#include <optional>
#include <utility>

namespace alpnet {

/// p' = min{delta min{p, Gamma I(p)}, p_hat}. Throws InputError if p exceeds
/// the caps.
NetworkState constrained_alp_step(const InterferenceModel& model, const AlpConfig& config,
                                  const PowerConstraints& caps, const NetworkState& state);

/// Runs until the powers settle (relative change below tol for
/// config.settle_steps steps). Drop events are recorded in the trajectory.
/// Throws BudgetError at max_iter.
Trajectory run_constrained(const InterferenceModel& model, const AlpConfig& config,
                           const PowerConstraints& caps);

/// p_hat >= Gamma I(p_hat): the caps themselves form a valid allocation.
bool check_prop8(const InterferenceModel& model, const SirTargets& targets, const PowerConstraints& caps);

/// delta Gamma I(p) <= p <= p_hat, with relative slack `slack` on both sides.
bool is_delta_valid(const InterferenceModel& model, const SirTargets& targets, const PowerConstraints& caps,
                    const PowerVector& p, double slack = 1e-9);

inline constexpr double kLambdaCap = 1e6;

/// Largest lambda with Gamma I(lambda delta p) <= p_hat for a delta-valid p,
/// capped at kLambdaCap. Throws PreconditionError naming the offending users
/// when p is not delta-valid.
double compute_lambda(const InterferenceModel& model, const SirTargets& targets, const PowerConstraints& caps,
                      const PowerVector& p);

struct OnlineConditions {
    bool eq19 = false;  ///< p <= lambda delta p_valid
    bool eq20 = false;  ///< q <= delta Gamma I(q), q = p / (lambda delta)
    bool eq21 = false;  ///< p <= delta^2 Gamma I(p / delta)
    bool eq22 = false;  ///< p <= beta delta Gamma I(p)
};

/// Evaluate the four gating conditions at p. `p_valid` is the delta-valid
/// reference vector used by the first one.
OnlineConditions check_online_conditions(const InterferenceModel& model, const SirTargets& targets,
                                         const PowerVector& p, double lambda, double beta,
                                         const PowerVector& p_valid);

/// min_k delta lambda Gamma_k I_k(p / (delta lambda)) / (Gamma_k I_k(p)).
double beta_max(const InterferenceModel& model, const SirTargets& targets, const PowerVector& p, double lambda);

enum class GateRule { eq20, eq21, eq22 };

std::string to_string(GateRule r);

struct DistressState {
    UserMask broadcasting;  ///< active users whose local condition fails
    double beta = 1.0;
    double lambda = 1.0;
    bool in_p_prime = true;  ///< broadcasting is empty
};

struct DistressConfig {
    GateRule rule = GateRule::eq22;
    std::optional<double> lambda;        ///< default: compute_lambda at the capped fixed point
    std::optional<double> beta;          ///< default: beta_max at gate-check time, frozen once open
    int decision_window = 500;           ///< distress this long in a row means rejection
    int delta_reduction_window = 0;      ///< halve (delta - 1) after this much distress; 0 = off
};

/// Distress set of state `s` under rule `rule`, given lambda and beta.
UserMask distress_set(const InterferenceModel& model, const SirTargets& targets, const NetworkState& s,
                      GateRule rule, double lambda, double beta);

/// Frozen step min{p, delta Gamma I(p)} when anyone broadcasts distress,
/// the constrained step otherwise. The returned DistressState belongs to the
/// new state (beta and lambda carried over).
std::pair<NetworkState, DistressState> distress_step(const InterferenceModel& model, const AlpConfig& config,
                                                     const PowerConstraints& caps, const NetworkState& state,
                                                     const DistressState& distress, GateRule rule);

/// Full distress-signalling run. Ends with admitted_all (everyone active and
/// settled) or rejected (a drop, distress lasting decision_window steps, or
/// settling with inactive users). Throws BudgetError at max_iter.
Trajectory run_distress(const InterferenceModel& model, const AlpConfig& config, const PowerConstraints& caps,
                        const DistressConfig& dconfig = {});

/// Drop events strictly after the first gate opening.
long post_gate_drops(const Trajectory& traj);

}  // namespace alpnet
