#include "alpnet/constrained.hpp"

#include "alpnet/errors.hpp"
#include "alpnet/feasibility.hpp"

#include <algorithm>
#include <cmath>

namespace alpnet {

namespace {

double rel_change(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double scale = b.cwiseAbs().maxCoeff();
    return scale > 0.0 ? (a - b).cwiseAbs().maxCoeff() / scale : 0.0;
}

void check_caps(const PowerConstraints& caps, const PowerVector& p) {
    if (caps.p_hat.size() != p.size()) throw InputError("power caps length does not match the powers");
    for (Eigen::Index k = 0; k < p.size(); ++k)
        if (p[k] > caps.p_hat[k])
            throw InputError("power of user " + std::to_string(k) + " exceeds its cap");
}

bool any_of(const UserMask& m) { return std::find(m.begin(), m.end(), true) != m.end(); }

void note_admissions(Trajectory& t, const NetworkState& s) {
    for (std::size_t k = 0; k < s.active.size(); ++k)
        if (s.active[k] && t.admission_step[k] < 0) t.admission_step[k] = s.n;
    if (!t.all_admitted_at && s.all_active()) t.all_admitted_at = s.n;
}

// Returns the first dropped user, if any.
std::optional<std::size_t> note_drops(Trajectory& t, const NetworkState& prev, const NetworkState& cur) {
    std::optional<std::size_t> first;
    for (std::size_t k = 0; k < cur.active.size(); ++k)
        if (prev.active[k] && !cur.active[k]) {
            t.drops.push_back({cur.n, k});
            if (!first) first = k;
        }
    return first;
}

}  // namespace

NetworkState constrained_alp_step(const InterferenceModel& model, const AlpConfig& config,
                                  const PowerConstraints& caps, const NetworkState& state) {
    check_caps(caps, state.powers);
    const auto& g = config.targets.gamma;
    const double d = config.targets.delta;
    const PowerVector& p = state.powers;
    PowerVector next(p.size());
    for (Eigen::Index k = 0; k < p.size(); ++k) {
        const double w = g[k] * state.interference[k];
        if (state.active[k] != (p[k] >= w))
            throw PreconditionError("constrained_alp_step: active flag of user " + std::to_string(k) +
                                    " disagrees with its SIR");
        // The cap is applied last so rounding can never push past it.
        next[k] = std::min(d * (state.active[k] ? w : p[k]), caps.p_hat[k]);
    }
    return make_state(model, config.targets, next, state.n + 1);
}

Trajectory run_constrained(const InterferenceModel& model, const AlpConfig& config, const PowerConstraints& caps) {
    check_caps(caps, config.p0);
    Trajectory t;
    t.states.push_back(initial_state(model, config));
    t.admission_step.assign(model.users(), -1);
    note_admissions(t, t.states.back());

    int settled = 0;
    for (int it = 0; it < config.max_iter; ++it) {
        const NetworkState& prev = t.states.back();
        NetworkState cur = constrained_alp_step(model, config, caps, prev);
        note_drops(t, prev, cur);
        note_admissions(t, cur);
        settled = rel_change(cur.powers, prev.powers) < config.tol ? settled + 1 : 0;
        t.states.push_back(std::move(cur));
        if (settled >= config.settle_steps) {
            t.termination = Termination::converged;
            return t;
        }
    }
    throw BudgetError("run_constrained: iteration budget exhausted", t.states.back().powers);
}

bool check_prop8(const InterferenceModel& model, const SirTargets& targets, const PowerConstraints& caps) {
    const Eigen::VectorXd w = evaluate_weighted(model, targets, caps.p_hat);
    return (caps.p_hat.array() >= w.array()).all();
}

bool is_delta_valid(const InterferenceModel& model, const SirTargets& targets, const PowerConstraints& caps,
                    const PowerVector& p, double slack) {
    const Eigen::VectorXd w = targets.delta * evaluate_weighted(model, targets, p);
    return (w.array() <= p.array() * (1.0 + slack)).all() &&
           (p.array() <= caps.p_hat.array() * (1.0 + slack)).all();
}

double compute_lambda(const InterferenceModel& model, const SirTargets& targets, const PowerConstraints& caps,
                      const PowerVector& p) {
    const Eigen::VectorXd w = targets.delta * evaluate_weighted(model, targets, p);
    std::string bad;
    for (Eigen::Index k = 0; k < p.size(); ++k)
        if (w[k] > p[k] * (1.0 + 1e-9) || p[k] > caps.p_hat[k] * (1.0 + 1e-9))
            bad += (bad.empty() ? "" : ", ") + std::to_string(k);
    if (!bad.empty()) throw PreconditionError("compute_lambda: p is not delta-valid at users " + bad);

    const double d = targets.delta;
    auto ok = [&](double lam) {
        const PowerVector q = (lam * d) * p;
        return (evaluate_weighted(model, targets, q).array() <= caps.p_hat.array()).all();
    };
    if (!ok(1.0)) return 1.0;
    double lo = 1.0;
    double hi = 2.0;
    while (ok(hi)) {
        lo = hi;
        if (hi >= kLambdaCap) return kLambdaCap;
        hi = std::min(2.0 * hi, kLambdaCap);
    }
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (ok(mid) ? lo : hi) = mid;
    }
    return lo;
}

OnlineConditions check_online_conditions(const InterferenceModel& model, const SirTargets& targets,
                                         const PowerVector& p, double lambda, double beta,
                                         const PowerVector& p_valid) {
    if (!(lambda >= 1.0) || !(beta >= 1.0)) throw PreconditionError("check_online_conditions: need lambda, beta >= 1");
    const double d = targets.delta;
    const double s = 1.0 + 1e-12;
    auto below = [&](const Eigen::VectorXd& lhs, const Eigen::VectorXd& rhs) {
        return (lhs.array() <= rhs.array() * s).all();
    };
    OnlineConditions c;
    c.eq19 = below(p, lambda * d * p_valid);
    const PowerVector q = p / (lambda * d);
    c.eq20 = below(q, d * evaluate_weighted(model, targets, q));
    c.eq21 = below(p, d * d * evaluate_weighted(model, targets, p / d));
    c.eq22 = below(p, beta * d * evaluate_weighted(model, targets, p));
    return c;
}

double beta_max(const InterferenceModel& model, const SirTargets& targets, const PowerVector& p, double lambda) {
    if (!(lambda >= 1.0)) throw PreconditionError("beta_max: lambda must be >= 1");
    const double x = targets.delta * lambda;
    const Eigen::VectorXd num = x * evaluate_weighted(model, targets, p / x);
    const Eigen::VectorXd den = evaluate_weighted(model, targets, p);
    return num.cwiseQuotient(den).minCoeff();
}

std::string to_string(GateRule r) {
    switch (r) {
        case GateRule::eq20: return "eq20";
        case GateRule::eq21: return "eq21";
        case GateRule::eq22: return "eq22";
    }
    return "?";
}

UserMask distress_set(const InterferenceModel& model, const SirTargets& targets, const NetworkState& s,
                      GateRule rule, double lambda, double beta) {
    const double d = targets.delta;
    const PowerVector& p = s.powers;
    Eigen::VectorXd lhs = p;
    Eigen::VectorXd rhs;
    switch (rule) {
        case GateRule::eq22:
            rhs = beta * d * targets.gamma.cwiseProduct(s.interference);
            break;
        case GateRule::eq21:
            rhs = d * d * evaluate_weighted(model, targets, p / d);
            break;
        case GateRule::eq20:
            lhs = p / (lambda * d);
            rhs = d * evaluate_weighted(model, targets, lhs);
            break;
    }
    UserMask out(s.active.size(), false);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = s.active[k] && lhs[k] > rhs[k];
    return out;
}

std::pair<NetworkState, DistressState> distress_step(const InterferenceModel& model, const AlpConfig& config,
                                                     const PowerConstraints& caps, const NetworkState& state,
                                                     const DistressState& distress, GateRule rule) {
    check_caps(caps, state.powers);
    NetworkState next;
    if (any_of(distress.broadcasting)) {
        const Eigen::VectorXd w = config.targets.delta * config.targets.gamma.cwiseProduct(state.interference);
        next = make_state(model, config.targets, state.powers.cwiseMin(w), state.n + 1);
    } else {
        next = constrained_alp_step(model, config, caps, state);
    }
    DistressState nd = distress;
    nd.broadcasting = distress_set(model, config.targets, next, rule, nd.lambda, nd.beta);
    nd.in_p_prime = !any_of(nd.broadcasting);
    next.distress = nd.broadcasting;
    next.gate = nd.in_p_prime;
    return {std::move(next), std::move(nd)};
}

Trajectory run_distress(const InterferenceModel& model, const AlpConfig& config_in, const PowerConstraints& caps,
                        const DistressConfig& dconfig) {
    AlpConfig config = config_in;
    check_caps(caps, config.p0);
    Trajectory t;
    t.admission_step.assign(model.users(), -1);

    DistressState ds;
    if (dconfig.lambda) {
        ds.lambda = *dconfig.lambda;
    } else {
        const PowerVector pc = constrained_fixed_point(model, config.targets, caps);
        if (is_delta_valid(model, config.targets, caps, pc)) {
            ds.lambda = compute_lambda(model, config.targets, caps, pc);
        } else {
            ds.lambda = 1.0;
            t.events.push_back("capped fixed point is not delta-valid; lambda = 1");
        }
    }
    bool beta_frozen = dconfig.beta.has_value();
    NetworkState s = initial_state(model, config);
    ds.beta = beta_frozen ? *dconfig.beta : beta_max(model, config.targets, s.powers, ds.lambda);

    auto refresh = [&](NetworkState& st) {
        if (!beta_frozen) ds.beta = beta_max(model, config.targets, st.powers, ds.lambda);
        ds.broadcasting = distress_set(model, config.targets, st, dconfig.rule, ds.lambda, ds.beta);
        ds.in_p_prime = !any_of(ds.broadcasting);
        st.distress = ds.broadcasting;
        st.gate = ds.in_p_prime;
        if (st.gate && !t.gate_opened_at) {
            t.gate_opened_at = st.n;
            beta_frozen = true;
        }
    };
    refresh(s);
    t.states.push_back(std::move(s));
    note_admissions(t, t.states.back());

    int settled = 0;
    int streak = t.states.back().gate ? 0 : 1;
    bool reduced = false;
    for (int it = 0; it < config.max_iter; ++it) {
        const NetworkState& prev = t.states.back();
        auto [cur, nd] = distress_step(model, config, caps, prev, ds, dconfig.rule);
        ds = nd;
        refresh(cur);
        const auto dropped = note_drops(t, prev, cur);
        note_admissions(t, cur);
        settled = rel_change(cur.powers, prev.powers) < config.tol ? settled + 1 : 0;
        streak = cur.gate ? 0 : streak + 1;
        const int n = cur.n;
        const bool everyone = cur.all_active();
        t.states.push_back(std::move(cur));

        if (dropped) {
            t.events.push_back("target violation at step " + std::to_string(n) + ", user " +
                               std::to_string(*dropped));
            t.termination = Termination::rejected;
            return t;
        }
        if (dconfig.delta_reduction_window > 0 && !reduced && streak >= dconfig.delta_reduction_window) {
            reduced = true;
            config.targets = SirTargets(config.targets.gamma, 1.0 + 0.5 * (config.targets.delta - 1.0));
            t.events.push_back("delta reduced to " + std::to_string(config.targets.delta) + " at step " +
                               std::to_string(n));
            streak = 0;
        }
        if (streak >= dconfig.decision_window) {
            t.events.push_back("persistent distress since step " + std::to_string(n - streak + 1));
            t.termination = Termination::rejected;
            return t;
        }
        if (settled >= config.settle_steps) {
            if (everyone) {
                t.termination = Termination::admitted_all;
            } else {
                t.events.push_back("settled with inactive users at step " + std::to_string(n));
                t.termination = Termination::rejected;
            }
            return t;
        }
    }
    throw BudgetError("run_distress: iteration budget exhausted", t.states.back().powers);
}

long post_gate_drops(const Trajectory& traj) {
    if (!traj.gate_opened_at) return 0;
    return std::count_if(traj.drops.begin(), traj.drops.end(),
                         [&](const DropEvent& e) { return e.step > *traj.gate_opened_at; });
}

}  // namespace alpnet
