#include "alpnet/interference.hpp"

#include "alpnet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace alpnet {

// --- targets / constraints ----------------------------------------------

SirTargets::SirTargets(Eigen::VectorXd g, double d) : gamma(std::move(g)), delta(d) {
    if (gamma.size() == 0) throw InputError("SIR targets: empty gamma");
    for (Eigen::Index k = 0; k < gamma.size(); ++k) {
        if (!std::isfinite(gamma[k]) || gamma[k] <= 0.0)
            throw InputError("SIR targets: gamma[" + std::to_string(k) + "] must be finite and > 0");
    }
    if (!std::isfinite(delta) || delta <= 1.0) throw InputError("SIR targets: delta must be > 1");
}

SirTargets SirTargets::common(std::size_t users, double g, double d) {
    return SirTargets(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(users), g), d);
}

SirTargets SirTargets::scaled(double s) const { return SirTargets(gamma * s, delta); }

SirTargets SirTargets::with_margin() const { return SirTargets(gamma * delta, delta); }

PowerConstraints::PowerConstraints(Eigen::VectorXd caps) : p_hat(std::move(caps)) {
    for (Eigen::Index k = 0; k < p_hat.size(); ++k) {
        if (!(p_hat[k] > 0.0) || std::isnan(p_hat[k]))
            throw InputError("power caps: p_hat[" + std::to_string(k) + "] must be > 0");
    }
}

// --- base ----------------------------------------------------------------

Eigen::VectorXd InterferenceModel::evaluate(const PowerVector& p) const {
    if (static_cast<std::size_t>(p.size()) != users()) {
        std::ostringstream os;
        os << "power vector has length " << p.size() << ", model expects " << users();
        throw InputError(os.str());
    }
    for (Eigen::Index k = 0; k < p.size(); ++k) {
        if (!std::isfinite(p[k])) throw InputError("power vector has a non-finite entry at " + std::to_string(k));
        if (p[k] < 0.0) throw InputError("power vector has a negative entry at " + std::to_string(k));
    }
    return do_evaluate(p);
}

Eigen::VectorXd evaluate_weighted(const InterferenceModel& model, const SirTargets& targets,
                                  const PowerVector& p) {
    if (targets.size() != model.users()) throw InputError("targets and model disagree on user count");
    return targets.gamma.cwiseProduct(model.evaluate(p));
}

Eigen::VectorXd sirs(const InterferenceModel& model, const PowerVector& p) {
    return p.cwiseQuotient(model.evaluate(p));
}

// --- affine --------------------------------------------------------------

AffineModel::AffineModel(Eigen::MatrixXd gain, Eigen::VectorXd noise)
    : gain_(std::move(gain)), noise_(std::move(noise)) {
    const auto k = noise_.size();
    if (k == 0) throw InputError("affine model: no users");
    if (gain_.rows() != k || gain_.cols() != k) throw InputError("affine model: gain matrix must be K x K");
    for (Eigen::Index i = 0; i < k; ++i) {
        if (!std::isfinite(noise_[i]) || noise_[i] <= 0.0)
            throw InputError("affine model: noise[" + std::to_string(i) + "] must be > 0");
        if (gain_(i, i) != 0.0) throw InputError("affine model: gain matrix diagonal must be zero");
        for (Eigen::Index j = 0; j < k; ++j) {
            if (!std::isfinite(gain_(i, j)) || gain_(i, j) < 0.0)
                throw InputError("affine model: gain matrix entries must be finite and >= 0");
        }
    }
}

Eigen::VectorXd AffineModel::do_evaluate(const Eigen::VectorXd& p) const { return gain_ * p + noise_; }

// --- min over receive strategies ----------------------------------------

MinStrategyModel::MinStrategyModel(std::vector<std::vector<Eigen::VectorXcd>> channels,
                                   Eigen::VectorXd noise)
    : channels_(std::move(channels)), noise_(std::move(noise)) {
    const auto k = channels_.size();
    if (k == 0) throw InputError("min-strategy model: no users");
    if (static_cast<std::size_t>(noise_.size()) != k) throw InputError("min-strategy model: noise length != K");
    const auto dim = channels_.front().empty() ? 0 : channels_.front().front().size();
    if (dim == 0) throw InputError("min-strategy model: empty channel vectors");
    for (std::size_t i = 0; i < k; ++i) {
        if (channels_[i].size() != k) throw InputError("min-strategy model: channels must be K x K");
        for (const auto& g : channels_[i]) {
            if (g.size() != dim) throw InputError("min-strategy model: channel dimensions differ");
            if (!g.allFinite()) throw InputError("min-strategy model: non-finite channel entry");
        }
        if (channels_[i][i].squaredNorm() == 0.0)
            throw InputError("min-strategy model: user " + std::to_string(i) + " has no signal path");
        if (!std::isfinite(noise_[i]) || noise_[i] <= 0.0)
            throw InputError("min-strategy model: noise must be > 0");
    }
}

MinStrategyModel MinStrategyModel::with_grid(std::vector<Eigen::VectorXcd> grid) const {
    if (grid.empty()) throw InputError("min-strategy model: empty strategy grid");
    for (auto& u : grid) {
        if (u.size() != receive_dim()) throw InputError("min-strategy model: grid vector has wrong dimension");
        const double n = u.norm();
        if (!(n > 0.0)) throw InputError("min-strategy model: zero grid vector");
        u /= n;
    }
    MinStrategyModel out = *this;
    out.grid_ = std::move(grid);
    return out;
}

Eigen::MatrixXcd MinStrategyModel::covariance(std::size_t k, const PowerVector& p) const {
    const auto dim = receive_dim();
    Eigen::MatrixXcd r = Eigen::MatrixXcd::Identity(dim, dim) * noise_[static_cast<Eigen::Index>(k)];
    for (std::size_t l = 0; l < channels_.size(); ++l) {
        if (l == k) continue;
        const double pl = p[static_cast<Eigen::Index>(l)];
        if (pl == 0.0) continue;
        const auto& g = channels_[k][l];
        r.noalias() += pl * (g * g.adjoint());
    }
    return r;
}

double MinStrategyModel::strategy_cost(std::size_t k, const PowerVector& p,
                                       const Eigen::VectorXcd& u) const {
    const double signal = std::norm(u.dot(channels_[k][k]));
    if (!(signal > 0.0)) return std::numeric_limits<double>::infinity();
    double acc = noise_[static_cast<Eigen::Index>(k)] * u.squaredNorm();
    for (std::size_t l = 0; l < channels_.size(); ++l) {
        if (l == k) continue;
        acc += std::norm(u.dot(channels_[k][l])) * p[static_cast<Eigen::Index>(l)];
    }
    return acc / signal;
}

Eigen::VectorXcd MinStrategyModel::optimal_receiver(std::size_t k, const PowerVector& p) const {
    Eigen::VectorXcd u = covariance(k, p).ldlt().solve(channels_[k][k]);
    return u / u.norm();
}

double MinStrategyModel::closed_form(std::size_t k, const Eigen::VectorXd& p) const {
    const auto& g = channels_[k][k];
    const Eigen::VectorXcd x = covariance(k, p).ldlt().solve(g);
    // g^H R^{-1} g is real and positive for Hermitian positive definite R.
    return 1.0 / g.dot(x).real();
}

Eigen::VectorXd MinStrategyModel::do_evaluate(const Eigen::VectorXd& p) const {
    const auto k = channels_.size();
    Eigen::VectorXd out(static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i) {
        if (grid_.empty()) {
            out[static_cast<Eigen::Index>(i)] = closed_form(i, p);
        } else {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& u : grid_) best = std::min(best, strategy_cost(i, p, u));
            out[static_cast<Eigen::Index>(i)] = best;
        }
    }
    return out;
}

// --- worst case ------------------------------------------------------------

WorstCaseModel::WorstCaseModel(std::vector<ModelPtr> members) : members_(std::move(members)) {
    if (members_.empty()) throw InputError("worst-case model: empty uncertainty set");
    const auto k = members_.front()->users();
    for (const auto& m : members_) {
        if (!m) throw InputError("worst-case model: null member");
        if (m->users() != k) throw InputError("worst-case model: members disagree on user count");
    }
}

Eigen::VectorXd WorstCaseModel::do_evaluate(const Eigen::VectorXd& p) const {
    Eigen::VectorXd out = members_.front()->evaluate(p);
    for (std::size_t i = 1; i < members_.size(); ++i) out = out.cwiseMax(members_[i]->evaluate(p));
    return out;
}

// --- axiom checker -------------------------------------------------------

std::string to_string(Axiom a) {
    switch (a) {
        case Axiom::positivity: return "A1";
        case Axiom::scalability: return "A2";
        case Axiom::monotonicity: return "A3";
    }
    return "?";
}

AxiomReport check_axioms(const InterferenceModel& model, const AxiomCheckOptions& opts) {
    AxiomReport rep;
    const auto k = static_cast<Eigen::Index>(model.users());
    if (k == 0) return rep;  // vacuous
    if (opts.trials < 1) throw InputError("check_axioms: trials must be >= 1");

    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> logu(std::log(opts.power_lo), std::log(opts.power_hi));
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    auto note = [&](bool& flag, AxiomCounterexample cx) {
        if (!flag) return;
        flag = false;
        if (!rep.counterexample) rep.counterexample = std::move(cx);
    };

    auto draw = [&] {
        Eigen::VectorXd p(k);
        for (Eigen::Index i = 0; i < k; ++i) p[i] = std::exp(logu(rng));
        return p;
    };

    for (int t = 0; t < opts.trials; ++t) {
        const Eigen::VectorXd p = t == 0 ? Eigen::VectorXd::Zero(k) : draw();
        const Eigen::VectorXd ip = model.evaluate(p);

        for (Eigen::Index i = 0; i < k; ++i) {
            if (!(ip[i] > opts.slack))
                note(rep.positivity, {Axiom::positivity, static_cast<std::size_t>(i), p, {}, 1.0, ip[i]});
        }

        for (double mu : opts.scale_grid) {
            const Eigen::VectorXd imu = model.evaluate(mu * p);
            for (Eigen::Index i = 0; i < k; ++i) {
                const double slack = mu * ip[i] - imu[i];
                if (!(slack > opts.slack))
                    note(rep.scalability,
                         {Axiom::scalability, static_cast<std::size_t>(i), p, {}, mu, slack});
            }
        }

        // p_lower <= p: shrink a random subset of coordinates.
        Eigen::VectorXd lower = p;
        for (Eigen::Index i = 0; i < k; ++i) {
            if (unit(rng) < 0.5) lower[i] *= unit(rng);
        }
        const Eigen::VectorXd ilow = model.evaluate(lower);
        for (Eigen::Index i = 0; i < k; ++i) {
            const double slack = ip[i] - ilow[i];
            if (slack < -opts.slack)
                note(rep.monotonicity,
                     {Axiom::monotonicity, static_cast<std::size_t>(i), p, lower, 1.0, slack});
        }
    }
    return rep;
}

// --- asymptotic ------------------------------------------------------------

std::vector<double> AsymptoticModel::default_probes() {
    std::vector<double> c;
    for (int e = 0; e <= 14; ++e) c.push_back(std::pow(10.0, e));
    return c;
}

AsymptoticModel::AsymptoticModel(ModelPtr base, Eigen::VectorXd gamma, std::vector<double> probes,
                                 double tol)
    : base_(std::move(base)), gamma_(std::move(gamma)), probes_(std::move(probes)), tol_(tol) {
    if (!base_) throw InputError("asymptotic model: null base");
    if (static_cast<std::size_t>(gamma_.size()) != base_->users())
        throw InputError("asymptotic model: gamma length != K");
    if (probes_.size() < 2) throw InputError("asymptotic model: need at least two probes");
    for (std::size_t i = 1; i < probes_.size(); ++i) {
        if (!(probes_[i] > probes_[i - 1])) throw InputError("asymptotic model: probes must increase");
    }
    if (!(tol_ > 0.0)) throw InputError("asymptotic model: tol must be > 0");
}

namespace {

Eigen::VectorXd walk_probes(const AsymptoticModel& m, const Eigen::VectorXd& p, double tol) {
    const auto& probes = m.probes();
    auto estimate = [&](double c) -> Eigen::VectorXd {
        return m.gamma().cwiseProduct(m.base().evaluate(c * p)) / c;
    };
    Eigen::VectorXd prev = estimate(probes.front());
    const double floor = tol * 1e-4 * std::max(prev.cwiseAbs().maxCoeff(), 0.0);
    for (std::size_t i = 1; i < probes.size(); ++i) {
        Eigen::VectorXd cur = estimate(probes[i]);
        bool done = true;
        for (Eigen::Index k = 0; k < cur.size(); ++k) {
            const double d = prev[k] - cur[k];
            // Rounding may lift a converged estimate by a few ulps.
            if (d < -(1e-12 * std::abs(prev[k]) + 1e-300)) {
                throw PreconditionError("asymptotic estimates increase with the scale factor; "
                                        "the base map is not scalable");
            }
            if (std::abs(d) > tol * std::abs(cur[k]) + floor) done = false;
        }
        if (done) return cur.cwiseMax(0.0);
        prev = std::move(cur);
    }
    throw BudgetError("asymptotic limit did not settle within the probe schedule", prev);
}

class RestrictedModel final : public InterferenceModel {
public:
    RestrictedModel(ModelPtr limit, UserMask active, Eigen::VectorXd lambda)
        : limit_(std::move(limit)), active_(std::move(active)), lambda_(std::move(lambda)) {
        for (bool a : active_) n_active_ += a ? 1 : 0;
    }

    std::size_t users() const override { return n_active_; }

protected:
    Eigen::VectorXd do_evaluate(const Eigen::VectorXd& pa) const override {
        if (n_active_ == 0) return {};
        return select(limit_->evaluate(merge_partition(active_, pa, lambda_)), active_, true);
    }

private:
    ModelPtr limit_;
    UserMask active_;
    Eigen::VectorXd lambda_;
    std::size_t n_active_ = 0;
};

}  // namespace

Eigen::VectorXd AsymptoticModel::do_evaluate(const Eigen::VectorXd& p) const {
    return walk_probes(*this, p, tol_);
}

Eigen::VectorXd asymptotic_limit(const AsymptoticModel& model, const PowerVector& p, double tol) {
    if (static_cast<std::size_t>(p.size()) != model.users()) throw InputError("asymptotic_limit: length mismatch");
    if (!(tol > 0.0)) throw InputError("asymptotic_limit: tol must be > 0");
    for (Eigen::Index k = 0; k < p.size(); ++k) {
        if (!std::isfinite(p[k]) || !(p[k] > 0.0))
            throw InputError("asymptotic_limit: p must be strictly positive and finite");
    }
    return walk_probes(model, p, tol);
}

Eigen::VectorXd select(const Eigen::VectorXd& v, const UserMask& mask, bool want) {
    std::vector<double> out;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i] == want) out.push_back(v[static_cast<Eigen::Index>(i)]);
    }
    return Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
}

Eigen::VectorXd merge_partition(const UserMask& active, const Eigen::VectorXd& active_part,
                                const Eigen::VectorXd& inactive_part) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(active.size()));
    Eigen::Index a = 0;
    Eigen::Index b = 0;
    for (std::size_t i = 0; i < active.size(); ++i) {
        const auto idx = static_cast<Eigen::Index>(i);
        if (active[i]) {
            if (a >= active_part.size()) throw InputError("merge_partition: active part too short");
            out[idx] = active_part[a++];
        } else {
            if (b >= inactive_part.size()) throw InputError("merge_partition: inactive part too short");
            out[idx] = inactive_part[b++];
        }
    }
    if (a != active_part.size() || b != inactive_part.size()) throw InputError("merge_partition: length mismatch");
    return out;
}

std::shared_ptr<InterferenceModel> restrict_active(ModelPtr limit, const UserMask& active,
                                                   const Eigen::VectorXd& lambda) {
    if (!limit) throw InputError("restrict_active: null model");
    if (active.size() != limit->users()) throw InputError("restrict_active: mask length != K");
    Eigen::Index inactive = 0;
    for (bool a : active) inactive += a ? 0 : 1;
    if (lambda.size() != inactive) throw InputError("restrict_active: lambda length != number of inactive users");
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        if (!(lambda[i] > 0.0) || !std::isfinite(lambda[i]))
            throw InputError("restrict_active: inactive powers must be strictly positive");
    }
    return std::make_shared<RestrictedModel>(std::move(limit), active, lambda);
}

}  // namespace alpnet
