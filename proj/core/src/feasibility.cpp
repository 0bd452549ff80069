#include "alpnet/feasibility.hpp"

#include "alpnet/errors.hpp"

#include <json.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace alpnet {

namespace {

double inf_norm(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

void check_gamma(const InterferenceModel& model, const Eigen::VectorXd& gamma) {
    if (static_cast<std::size_t>(gamma.size()) != model.users())
        throw InputError("target vector length does not match the model");
}

}  // namespace

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::feasible: return "feasible";
        case Verdict::infeasible: return "infeasible";
        case Verdict::undecided: return "undecided";
    }
    return "?";
}

// --- spectral radius -------------------------------------------------------

double c_gamma_affine(const AffineModel& model, const SirTargets& targets) {
    if (targets.size() != model.users()) throw InputError("c_gamma_affine: targets length != K");
    const Eigen::MatrixXd a = targets.gamma.asDiagonal() * model.gain();
    const auto k = a.rows();

    // Shifted power iteration on A + Id keeps the iterate positive and breaks
    // the +/- symmetry of periodic matrices; Collatz-Wielandt bounds on A
    // certify convergence.
    Eigen::VectorXd x = Eigen::VectorXd::Ones(k);
    for (int it = 0; it < 20000; ++it) {
        const Eigen::VectorXd ax = a * x;
        double lo = std::numeric_limits<double>::infinity();
        double hi = 0.0;
        for (Eigen::Index i = 0; i < k; ++i) {
            const double r = ax[i] / x[i];
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        if (hi - lo <= 1e-14 * std::max(hi, 1e-300) || hi == 0.0) return 0.5 * (lo + hi);
        x = ax + x;
        x /= x.maxCoeff();
        if (x.minCoeff() < 1e-280) break;  // reducible: some coordinate dies out
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

// --- general standard maps ------------------------------------------------

Verdict decide_feasible(const InterferenceModel& model, const Eigen::VectorXd& gamma,
                        const GeneralFeasibilityOptions& opts) {
    check_gamma(model, gamma);
    const auto k = gamma.size();
    Eigen::VectorXd p = Eigen::VectorXd::Zero(k);
    const double scale = inf_norm(gamma.cwiseProduct(model.evaluate(p)));
    const double guard = opts.guard * scale;
    int above = 0;

    for (int n = 0; n < opts.max_iter; ++n) {
        Eigen::VectorXd next = gamma.cwiseProduct(model.evaluate(p));
        if (!next.allFinite()) return Verdict::infeasible;
        const double nn = inf_norm(next);
        if (inf_norm(next - p) <= opts.tol * nn) return Verdict::feasible;

        // Certificate: a point q with Gamma I(q) < q strictly gives C < 1.
        if (n % 8 == 7) {
            const Eigen::VectorXd q = next * (guard / nn);
            const Eigen::VectorXd iq = gamma.cwiseProduct(model.evaluate(q));
            if (((q - iq).array() > 1e-12 * q.array()).all()) return Verdict::feasible;
        }

        const double pn = inf_norm(p);
        if (nn > guard && pn > 0.0 && nn / pn > opts.growth) {
            if (++above >= opts.window) return Verdict::infeasible;
        } else {
            above = 0;
        }
        p = std::move(next);
    }
    return Verdict::undecided;
}

GeneralFeasibility c_gamma_general(const InterferenceModel& model, const SirTargets& targets,
                                   const GeneralFeasibilityOptions& opts) {
    check_gamma(model, targets.gamma);
    const Eigen::VectorXd& g = targets.gamma;
    auto ok = [&](double s) { return decide_feasible(model, s * g, opts) == Verdict::feasible; };

    GeneralFeasibility out;
    out.verdict = decide_feasible(model, g, opts);

    double lo = 0.0;
    double hi = 0.0;
    if (out.verdict == Verdict::feasible) {
        lo = 1.0;
        hi = 2.0;
        while (ok(hi)) {
            lo = hi;
            hi *= 2.0;
            if (hi > opts.scale_cap) {
                out.value = 0.0;  // no interference-limited boundary in range
                return out;
            }
        }
    } else {
        hi = 1.0;
        lo = 0.5;
        while (!ok(lo)) {
            hi = lo;
            lo *= 0.5;
            if (lo < 1.0 / opts.scale_cap) {
                out.value = std::numeric_limits<double>::infinity();
                return out;
            }
        }
    }
    for (int i = 0; i < opts.bisection_iters && hi / lo - 1.0 > opts.bisection_rel_tol; ++i) {
        const double mid = std::sqrt(lo * hi);
        (ok(mid) ? lo : hi) = mid;
    }
    out.value = 1.0 / std::sqrt(lo * hi);
    return out;
}

// --- fixed points ------------------------------------------------------------

PowerVector yates_fixed_point(const InterferenceModel& model, const Eigen::VectorXd& gamma,
                              const PowerVector& p0, const SolverOptions& opts) {
    check_gamma(model, gamma);
    if (p0.size() != gamma.size()) throw InputError("yates_fixed_point: p0 length != K");
    if (!(opts.tol > 0.0)) throw InputError("yates_fixed_point: tol must be > 0");
    PowerVector p = p0;
    for (int n = 0; n < opts.max_iter; ++n) {
        PowerVector next = gamma.cwiseProduct(model.evaluate(p));
        if (!next.allFinite()) throw BudgetError("yates_fixed_point: iterate overflowed (targets infeasible?)", p);
        if (inf_norm(p - next) <= opts.tol * inf_norm(p)) return p;
        p = std::move(next);
    }
    throw BudgetError("yates_fixed_point: iteration budget exhausted", p);
}

PowerVector yates_fixed_point(const InterferenceModel& model, const SirTargets& targets,
                              const PowerVector& p0, const SolverOptions& opts) {
    return yates_fixed_point(model, targets.gamma, p0, opts);
}

namespace {

PowerVector capped_fixed_point(const InterferenceModel& model, const Eigen::VectorXd& weights,
                               const Eigen::VectorXd& caps, const SolverOptions& opts) {
    if (caps.size() != weights.size()) throw InputError("power caps length != K");
    PowerVector p = Eigen::VectorXd::Zero(weights.size());
    for (int n = 0; n < opts.max_iter; ++n) {
        PowerVector next = weights.cwiseProduct(model.evaluate(p)).cwiseMin(caps);
        if (inf_norm(p - next) <= opts.tol * inf_norm(p)) return p;
        p = std::move(next);
    }
    throw BudgetError("constrained fixed point: iteration budget exhausted", p);
}

}  // namespace

PowerVector constrained_fixed_point(const InterferenceModel& model, const SirTargets& targets,
                                    const PowerConstraints& caps, const SolverOptions& opts) {
    check_gamma(model, targets.gamma);
    return capped_fixed_point(model, targets.delta * targets.gamma, caps.p_hat, opts);
}

ConstrainedFeasibility c_gamma_constrained(const InterferenceModel& model, const SirTargets& targets,
                                           const PowerConstraints& caps, double tol) {
    check_gamma(model, targets.gamma);
    if (caps.size() != model.users()) throw InputError("c_gamma_constrained: caps length != K");
    const SolverOptions so{tol, 100000};
    const double slack = std::max(1e-9, 10.0 * tol);

    auto probe = [&](double s, PowerVector* out) {
        const Eigen::VectorXd w = s * targets.gamma;
        PowerVector q = capped_fixed_point(model, w, caps.p_hat, so);
        const Eigen::VectorXd iq = w.cwiseProduct(model.evaluate(q));
        const bool feasible = (q.array() >= iq.array() * (1.0 - slack)).all();
        if (out) *out = std::move(q);
        return feasible;
    };

    double lo = 0.0;
    double hi = 0.0;
    if (probe(1.0, nullptr)) {
        lo = 1.0;
        hi = 2.0;
        while (probe(hi, nullptr)) {
            lo = hi;
            hi *= 2.0;
            if (hi > 1e12) throw InputError("c_gamma_constrained: no infeasible scale found (degenerate caps)");
        }
    } else {
        hi = 1.0;
        lo = 0.5;
        while (!probe(lo, nullptr)) {
            hi = lo;
            lo *= 0.5;
            if (lo < 1e-12) throw InputError("c_gamma_constrained: no feasible scale found (degenerate caps)");
        }
    }
    for (int i = 0; i < 200 && hi / lo - 1.0 > tol; ++i) {
        const double mid = 0.5 * (lo + hi);
        (probe(mid, nullptr) ? lo : hi) = mid;
    }
    ConstrainedFeasibility out;
    probe(lo, &out.minimizer);
    out.value = 1.0 / lo;
    return out;
}

// --- classification ----------------------------------------------------------

std::string regime_name(Regime r, bool constrained) {
    const std::string prime = constrained ? "'" : "";
    switch (r) {
        case Regime::fully_admissible: return "C1" + prime;
        case Regime::delta_incompatible: return "C2" + prime;
        case Regime::totally_inadmissible: return "C3" + prime;
        case Regime::undecided: return "undecided";
    }
    return "?";
}

FeasibilityReport classify(const InterferenceModel& model, const SirTargets& targets,
                           const std::optional<PowerConstraints>& caps,
                           const GeneralFeasibilityOptions& general) {
    check_gamma(model, targets.gamma);
    FeasibilityReport r;
    const auto below_one = [](double c) { return c < 1.0 - kBoundaryTie; };
    const SirTargets margin = targets.with_margin();

    if (const auto* affine = dynamic_cast<const AffineModel*>(&model)) {
        r.value_source = "spectral-radius";
        r.c_gamma = c_gamma_affine(*affine, targets);
        r.c_delta_gamma = targets.delta * r.c_gamma;
        r.verdict_gamma = below_one(r.c_gamma) ? Verdict::feasible : Verdict::infeasible;
        r.verdict_delta_gamma = below_one(r.c_delta_gamma) ? Verdict::feasible : Verdict::infeasible;
    } else {
        r.value_source = "bisection-estimate";
        const auto g = c_gamma_general(model, targets, general);
        r.c_gamma = g.value;
        r.c_delta_gamma = targets.delta * g.value;
        r.verdict_gamma = g.verdict;
        r.verdict_delta_gamma = decide_feasible(model, margin.gamma, general);
    }

    if (r.verdict_gamma == Verdict::undecided) {
        r.regime = Regime::undecided;
    } else if (r.verdict_gamma == Verdict::infeasible) {
        r.regime = Regime::totally_inadmissible;
    } else if (r.verdict_delta_gamma == Verdict::feasible) {
        r.regime = Regime::fully_admissible;
    } else if (r.verdict_delta_gamma == Verdict::infeasible) {
        r.regime = Regime::delta_incompatible;
    } else {
        r.regime = Regime::undecided;
    }

    const PowerVector zero = Eigen::VectorXd::Zero(targets.gamma.size());
    if (r.verdict_gamma == Verdict::feasible) {
        try {
            r.fixed_point = yates_fixed_point(model, targets.gamma, zero);
        } catch (const BudgetError&) {
        }
    }
    if (r.regime == Regime::fully_admissible) {
        try {
            r.margin_fixed_point = yates_fixed_point(model, margin.gamma, zero);
        } catch (const BudgetError&) {
        }
    }

    if (caps) {
        r.has_constraints = true;
        const auto cg = c_gamma_constrained(model, targets, *caps);
        r.c_gamma_caps = cg.value;
        r.c_delta_gamma_caps = targets.delta * cg.value;
        r.p_prime = cg.minimizer;
        if (!below_one(r.c_gamma_caps)) {
            r.regime_caps = Regime::totally_inadmissible;
        } else if (!below_one(r.c_delta_gamma_caps)) {
            r.regime_caps = Regime::delta_incompatible;
        } else {
            r.regime_caps = Regime::fully_admissible;
            r.p_circle = constrained_fixed_point(model, targets, *caps);
        }
    }
    return r;
}

namespace {

nlohmann::json vec_json(const Eigen::VectorXd& v) {
    auto a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

nlohmann::json num(double v) {
    if (std::isfinite(v)) return v;
    return v > 0 ? "inf" : "nan";
}

}  // namespace

std::string to_json(const FeasibilityReport& r) {
    nlohmann::json j;
    j["c_gamma"] = num(r.c_gamma);
    j["c_delta_gamma"] = num(r.c_delta_gamma);
    j["verdict_gamma"] = to_string(r.verdict_gamma);
    j["verdict_delta_gamma"] = to_string(r.verdict_delta_gamma);
    j["value_source"] = r.value_source;
    j["regime"] = regime_name(r.regime, false);
    j["fixed_point"] = r.fixed_point ? vec_json(*r.fixed_point) : nlohmann::json(nullptr);
    j["margin_fixed_point"] = r.margin_fixed_point ? vec_json(*r.margin_fixed_point) : nlohmann::json(nullptr);
    if (r.has_constraints) {
        nlohmann::json c;
        c["c_gamma"] = num(r.c_gamma_caps);
        c["c_delta_gamma"] = num(r.c_delta_gamma_caps);
        c["regime"] = regime_name(r.regime_caps, true);
        c["p_circle"] = r.p_circle ? vec_json(*r.p_circle) : nlohmann::json(nullptr);
        c["p_prime"] = r.p_prime ? vec_json(*r.p_prime) : nlohmann::json(nullptr);
        j["constrained"] = c;
    }
    return j.dump(2);
}

}  // namespace alpnet
