#pragma once

// Admission control with active link protection: p(n+1) = delta min{p, Gamma I(p)}.

#include "alpnet/interference.hpp"
#include "alpnet/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace alpnet {

struct NetworkState {
    int n = 0;
    PowerVector powers;
    UserMask active;               ///< k active iff p_k >= gamma_k I_k(p)
    Eigen::VectorXd sirs;
    Eigen::VectorXd interference;  ///< unweighted I(p)
    UserMask distress;             ///< empty outside distress runs
    bool gate = true;              ///< p in P' (always true outside distress runs)

    std::size_t active_count() const;
    bool all_active() const { return active_count() == active.size(); }
};

/// Evaluate the model at p and fill in SIRs and the active mask.
NetworkState make_state(const InterferenceModel& model, const SirTargets& targets,
                        const PowerVector& p, int n = 0);

enum class Termination {
    converged,     ///< all users active, powers settled
    diverged,      ///< all users active, powers past the guard
    budget,        ///< iteration budget (or floating-point range) exhausted
    admitted_all,  ///< all users active and settled in a distress run
    steady,        ///< inactive users remain, normalized powers settled
    rejected,      ///< distress run reached a rejection decision
};

std::string to_string(Termination t);

/// User active at step - 1 and inactive at step.
struct DropEvent {
    int step = 0;
    std::size_t user = 0;
};

struct Trajectory {
    std::vector<NetworkState> states;
    Termination termination = Termination::budget;
    std::vector<int> admission_step;  ///< first step each user is active, -1 if never
    std::optional<int> all_admitted_at;
    std::vector<DropEvent> drops;
    std::optional<int> gate_opened_at;
    std::vector<std::string> events;

    const NetworkState& final_state() const { return states.back(); }
};

struct AlpConfig {
    SirTargets targets;
    PowerVector p0;
    std::optional<UserMask> initial_active;  ///< checked against p0 when given
    double tol = 1e-10;
    double guard = 1e12;
    int max_iter = 100000;
    int settle_steps = 3;
};

/// One synchronous step: active users go to delta Gamma_k I_k(p), inactive
/// users ramp to delta p_k.
NetworkState alp_step(const InterferenceModel& model, const AlpConfig& config, const NetworkState& state);

/// Validated initial state of a run (A_0 must be nonempty).
NetworkState initial_state(const InterferenceModel& model, const AlpConfig& config);

Trajectory run_alp(const InterferenceModel& model, const AlpConfig& config);

struct NormalizedTrajectory {
    int first_step = 0;               ///< state index of pi.front()
    UserMask active;                  ///< the stable partition
    std::vector<Eigen::VectorXd> pi;  ///< active powers over delta^n
    Eigen::VectorXd lambda;           ///< inactive powers at step 0
};

/// Normalized active powers over the final stable partition. Throws
/// PreconditionError if the partition is not stable over at least three
/// states or nobody is inactive.
NormalizedTrajectory normalized_trajectory(const Trajectory& traj, const AlpConfig& config);

/// True iff every active user's interference strictly grows when some
/// inactive user's power is raised.
bool check_c4(const InterferenceModel& model, const NetworkState& state);

/// Step-wise audit of the protection properties of an unconstrained run.
struct AlpAudit {
    long steps = 0;
    long lemma1 = 0;  ///< I_k(n+1) >= delta I_k(n)
    long prop2 = 0;   ///< A_n not contained in A_{n+1}
    long eq11 = 0;    ///< active power ratio >= delta
    long prop3 = 0;   ///< inactive SIR did not increase
    std::string first_failure;

    bool clean() const { return lemma1 + prop2 + eq11 + prop3 == 0; }
};

/// Strict inequalities are tested with relative slack `slack`.
AlpAudit audit_alp(const Trajectory& traj, double delta, double slack = 1e-12);

/// (user, step) pairs where a user that was active at some earlier step is
/// below its target (inactive).
long count_alp_violations(const Trajectory& traj);

}  // namespace alpnet
