#include "alpnet/alp.hpp"

#include "alpnet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace alpnet {

namespace {

constexpr double kOverflowGuard = 1e250;

double rel_change(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double scale = b.cwiseAbs().maxCoeff();
    return scale > 0.0 ? (a - b).cwiseAbs().maxCoeff() / scale : 0.0;
}

}  // namespace

std::size_t NetworkState::active_count() const {
    return static_cast<std::size_t>(std::count(active.begin(), active.end(), true));
}

NetworkState make_state(const InterferenceModel& model, const SirTargets& targets, const PowerVector& p,
                        int n) {
    if (targets.size() != model.users()) throw InputError("targets length does not match the model");
    NetworkState s;
    s.n = n;
    s.powers = p;
    s.interference = model.evaluate(p);
    s.sirs = p.cwiseQuotient(s.interference);
    s.active.resize(model.users());
    for (Eigen::Index k = 0; k < p.size(); ++k)
        s.active[k] = p[k] >= targets.gamma[k] * s.interference[k];
    return s;
}

std::string to_string(Termination t) {
    switch (t) {
        case Termination::converged: return "converged";
        case Termination::diverged: return "diverged";
        case Termination::budget: return "budget";
        case Termination::admitted_all: return "admitted_all";
        case Termination::steady: return "steady";
        case Termination::rejected: return "rejected";
    }
    return "?";
}

NetworkState alp_step(const InterferenceModel& model, const AlpConfig& config, const NetworkState& state) {
    const auto& g = config.targets.gamma;
    const double d = config.targets.delta;
    const PowerVector& p = state.powers;
    if (p.size() != g.size() || state.interference.size() != g.size() ||
        state.active.size() != static_cast<std::size_t>(g.size()))
        throw InputError("alp_step: state dimensions do not match the targets");

    PowerVector next(p.size());
    for (Eigen::Index k = 0; k < p.size(); ++k) {
        const double w = g[k] * state.interference[k];
        if (state.active[k] != (p[k] >= w))
            throw PreconditionError("alp_step: active flag of user " + std::to_string(k) +
                                    " disagrees with its SIR");
        next[k] = d * (state.active[k] ? w : p[k]);
    }
    return make_state(model, config.targets, next, state.n + 1);
}

NetworkState initial_state(const InterferenceModel& model, const AlpConfig& config) {
    const auto k = config.targets.gamma.size();
    if (config.p0.size() != k) throw InputError("p0 length does not match the targets");
    if (!config.p0.allFinite() || (config.p0.array() < 0.0).any())
        throw InputError("p0 must be finite and nonnegative");
    NetworkState s = make_state(model, config.targets, config.p0, 0);
    if (config.initial_active) {
        if (config.initial_active->size() != static_cast<std::size_t>(k))
            throw InputError("initial_active length does not match the targets");
        for (Eigen::Index i = 0; i < k; ++i)
            if ((*config.initial_active)[i] != s.active[i])
                throw InputError("initial_active disagrees with the SIRs of p0 at user " + std::to_string(i));
    }
    if (s.active_count() == 0) throw InputError("initial active set is empty");
    for (Eigen::Index i = 0; i < k; ++i)
        if (!s.active[i] && !(config.p0[i] > 0.0))
            throw InputError("inactive users need positive initial power (user " + std::to_string(i) + ")");
    return s;
}

namespace {

void note_admissions(Trajectory& t, const NetworkState& s) {
    for (std::size_t k = 0; k < s.active.size(); ++k)
        if (s.active[k] && t.admission_step[k] < 0) t.admission_step[k] = s.n;
    if (!t.all_admitted_at && s.all_active()) t.all_admitted_at = s.n;
}

void note_drops(Trajectory& t, const NetworkState& prev, const NetworkState& cur) {
    for (std::size_t k = 0; k < cur.active.size(); ++k)
        if (prev.active[k] && !cur.active[k]) t.drops.push_back({cur.n, k});
}

// log of active powers over delta^n; inactive entries unused.
Eigen::VectorXd log_normalized(const NetworkState& s, double delta) {
    return (s.powers.array().log() - s.n * std::log(delta)).matrix();
}

}  // namespace

Trajectory run_alp(const InterferenceModel& model, const AlpConfig& config) {
    Trajectory t;
    t.states.push_back(initial_state(model, config));
    t.admission_step.assign(model.users(), -1);
    note_admissions(t, t.states.back());

    const double delta = config.targets.delta;
    int settled = 0;
    int normalized_settled = 0;
    for (int it = 0; it < config.max_iter; ++it) {
        const NetworkState& prev = t.states.back();
        NetworkState cur = alp_step(model, config, prev);
        note_drops(t, prev, cur);
        note_admissions(t, cur);
        const bool same_partition = cur.active == prev.active;

        if (cur.all_active()) {
            settled = rel_change(cur.powers, prev.powers) < config.tol ? settled + 1 : 0;
            const double top = cur.powers.maxCoeff();
            t.states.push_back(std::move(cur));
            if (settled >= config.settle_steps) {
                t.termination = Termination::converged;
                return t;
            }
            if (top > config.guard) {
                t.termination = Termination::diverged;
                return t;
            }
            continue;
        }
        settled = 0;

        if (same_partition) {
            const Eigen::VectorXd a = log_normalized(prev, delta);
            const Eigen::VectorXd b = log_normalized(cur, delta);
            double worst = 0.0;
            for (std::size_t k = 0; k < cur.active.size(); ++k)
                if (cur.active[k]) worst = std::max(worst, std::abs(std::expm1(b[k] - a[k])));
            normalized_settled = worst < config.tol ? normalized_settled + 1 : 0;
        } else {
            normalized_settled = 0;
        }
        const double top = cur.powers.maxCoeff();
        t.states.push_back(std::move(cur));
        if (normalized_settled >= config.settle_steps) {
            t.termination = Termination::steady;
            return t;
        }
        if (top > kOverflowGuard) {
            t.events.push_back("powers left the floating-point range at step " + std::to_string(t.states.back().n));
            t.termination = Termination::budget;
            return t;
        }
    }
    t.termination = Termination::budget;
    return t;
}

NormalizedTrajectory normalized_trajectory(const Trajectory& traj, const AlpConfig& config) {
    if (traj.states.empty()) throw PreconditionError("normalized_trajectory: empty trajectory");
    const UserMask& final_active = traj.states.back().active;
    if (std::find(final_active.begin(), final_active.end(), false) == final_active.end())
        throw PreconditionError("normalized_trajectory: no inactive users in the final partition");

    std::size_t start = traj.states.size() - 1;
    while (start > 0 && traj.states[start - 1].active == final_active) --start;
    if (traj.states.size() - start < 3)
        throw PreconditionError("normalized_trajectory: partition not stable from step " +
                                std::to_string(traj.states[start].n));

    NormalizedTrajectory out;
    out.first_step = traj.states[start].n;
    out.active = final_active;
    out.lambda = select(traj.states.front().powers, final_active, false);
    const double ld = std::log(config.targets.delta);
    for (std::size_t i = start; i < traj.states.size(); ++i) {
        const auto& s = traj.states[i];
        const Eigen::VectorXd a = select(s.powers, final_active, true);
        out.pi.push_back((a.array().log() - s.n * ld).exp().matrix());
    }
    return out;
}

bool check_c4(const InterferenceModel& model, const NetworkState& state) {
    const auto k = state.powers.size();
    std::vector<Eigen::Index> inactive;
    for (Eigen::Index i = 0; i < k; ++i)
        if (!state.active[i]) inactive.push_back(i);
    if (inactive.empty()) throw PreconditionError("check_c4: no inactive users");

    const Eigen::VectorXd base = model.evaluate(state.powers);
    const double bump = std::max(state.powers.maxCoeff(), 1.0);
    std::vector<bool> responds(k, false);
    for (Eigen::Index l : inactive) {
        Eigen::VectorXd q = state.powers;
        q[l] += std::max(q[l], bump);
        const Eigen::VectorXd iq = model.evaluate(q);
        for (Eigen::Index i = 0; i < k; ++i)
            if (iq[i] > base[i] * (1.0 + 1e-12)) responds[i] = true;
    }
    for (Eigen::Index i = 0; i < k; ++i)
        if (state.active[i] && !responds[i]) return false;
    return true;
}

AlpAudit audit_alp(const Trajectory& traj, double delta, double slack) {
    AlpAudit a;
    auto fail = [&](long& counter, const std::string& what, int n, std::size_t k) {
        if (counter++ == 0 && a.first_failure.empty()) {
            std::ostringstream os;
            os << what << " at step " << n << ", user " << k;
            a.first_failure = os.str();
        }
    };
    for (std::size_t i = 1; i < traj.states.size(); ++i) {
        const auto& p = traj.states[i - 1];
        const auto& c = traj.states[i];
        ++a.steps;
        for (std::size_t k = 0; k < c.active.size(); ++k) {
            if (!(c.interference[k] < delta * p.interference[k] * (1.0 + slack)))
                fail(a.lemma1, "interference grew by delta or more", c.n, k);
            if (p.active[k] && !c.active[k]) fail(a.prop2, "active user dropped", c.n, k);
            if (p.active[k] && !(c.powers[k] < delta * p.powers[k] * (1.0 + slack)))
                fail(a.eq11, "active power ratio reached delta", c.n, k);
            if (!p.active[k] && !(c.sirs[k] > p.sirs[k] * (1.0 - slack)))
                fail(a.prop3, "inactive SIR did not increase", c.n, k);
        }
    }
    return a;
}

long count_alp_violations(const Trajectory& traj) {
    long count = 0;
    if (traj.states.empty()) return 0;
    std::vector<bool> seen(traj.states.front().active.size(), false);
    for (const auto& s : traj.states) {
        for (std::size_t k = 0; k < seen.size(); ++k)
            if (seen[k] && !s.active[k]) ++count;
        for (std::size_t k = 0; k < seen.size(); ++k)
            if (s.active[k]) seen[k] = true;
    }
    return count;
}

}  // namespace alpnet
