#include "alpnet/beamforming.hpp"

#include "alpnet/errors.hpp"
#include "alpnet/feasibility.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <random>

namespace alpnet {

void MimoScenario::validate() const {
    if (h.empty()) throw InputError("mimo: no users");
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw InputError("mimo: sigma2 must be > 0");
    if (n_r < 1 || n_t < 1) throw InputError("mimo: antenna counts must be >= 1");
    for (std::size_t k = 0; k < h.size(); ++k) {
        if (h[k].size() != h.size()) throw InputError("mimo: channel row " + std::to_string(k) + " has wrong length");
        for (std::size_t l = 0; l < h.size(); ++l) {
            if (h[k][l].rows() != n_r || h[k][l].cols() != n_t)
                throw InputError("mimo: channel (" + std::to_string(k) + "," + std::to_string(l) + ") has wrong shape");
            if (!h[k][l].allFinite())
                throw InputError("mimo: channel (" + std::to_string(k) + "," + std::to_string(l) + ") is not finite");
        }
    }
}

MimoScenario MimoScenario::random(std::size_t users, Eigen::Index n_r, Eigen::Index n_t, double sigma2,
                                  std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> half(0.0, std::sqrt(0.5));
    MimoScenario s;
    s.n_r = n_r;
    s.n_t = n_t;
    s.sigma2 = sigma2;
    s.h.assign(users, std::vector<Eigen::MatrixXcd>(users));
    for (auto& row : s.h)
        for (auto& m : row) {
            m.resize(n_r, n_t);
            for (Eigen::Index i = 0; i < n_r; ++i)
                for (Eigen::Index j = 0; j < n_t; ++j) {
                    const double re = half(rng);
                    const double im = half(rng);
                    m(i, j) = {re, im};
                }
        }
    s.validate();
    return s;
}

MimoScenario MimoScenario::subset(const std::vector<std::size_t>& users) const {
    MimoScenario s;
    s.n_r = n_r;
    s.n_t = n_t;
    s.sigma2 = sigma2;
    for (std::size_t k : users) {
        if (k >= h.size()) throw InputError("mimo subset: user out of range");
        std::vector<Eigen::MatrixXcd> row;
        for (std::size_t l : users) row.push_back(h[k][l]);
        s.h.push_back(std::move(row));
    }
    return s;
}

BeamformerSet BeamformerSet::subset(const std::vector<std::size_t>& users) const {
    BeamformerSet b;
    for (std::size_t k : users) {
        b.t.push_back(t.at(k));
        b.u.push_back(u.at(k));
    }
    return b;
}

namespace {

void check_beams(const MimoScenario& scn, const BeamformerSet& beams) {
    if (beams.t.size() != scn.users() || beams.u.size() != scn.users())
        throw InputError("beamformer count does not match the scenario");
    for (std::size_t k = 0; k < scn.users(); ++k)
        if (beams.t[k].size() != scn.n_t || beams.u[k].size() != scn.n_r)
            throw InputError("beamformer " + std::to_string(k) + " has the wrong dimension");
}

// Squared coupling |u_k^H H_kl t_l|^2 for all pairs.
Eigen::MatrixXd couplings(const MimoScenario& scn, const BeamformerSet& beams) {
    const auto k = static_cast<Eigen::Index>(scn.users());
    Eigen::MatrixXd g(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index l = 0; l < k; ++l)
            g(i, l) = std::norm(beams.u[i].dot(scn.h[i][l] * beams.t[l]));
    return g;
}

}  // namespace

AffineModel effective_gains(const MimoScenario& scn, const BeamformerSet& beams) {
    check_beams(scn, beams);
    const Eigen::MatrixXd g = couplings(scn, beams);
    const auto k = g.rows();
    Eigen::MatrixXd v(k, k);
    Eigen::VectorXd z(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        const double s = g(i, i);
        if (!(std::sqrt(s) >= kMinSignalGain))
            throw DegenerateBeamError("effective signal gain of user " + std::to_string(i) + " vanished",
                                      static_cast<int>(i));
        v.row(i) = g.row(i) / s;
        v(i, i) = 0.0;
        z[i] = scn.sigma2 / s;
    }
    return AffineModel(std::move(v), std::move(z));
}

Eigen::VectorXd beam_sirs(const MimoScenario& scn, const BeamformerSet& beams, const PowerVector& p) {
    return sirs(effective_gains(scn, beams), p);
}

BeamformerSet mmse_receivers(const MimoScenario& scn, const BeamformerSet& beams, const PowerVector& p) {
    check_beams(scn, beams);
    if (static_cast<std::size_t>(p.size()) != scn.users()) throw InputError("mmse_receivers: power length != K");
    if (!p.allFinite() || (p.array() < 0.0).any()) throw InputError("mmse_receivers: powers must be finite and >= 0");
    BeamformerSet out = beams;
    for (std::size_t k = 0; k < scn.users(); ++k) {
        Eigen::MatrixXcd r = scn.sigma2 * Eigen::MatrixXcd::Identity(scn.n_r, scn.n_r);
        for (std::size_t l = 0; l < scn.users(); ++l) {
            if (l == k) continue;
            const Eigen::VectorXcd g = scn.h[k][l] * beams.t[l];
            r.noalias() += p[static_cast<Eigen::Index>(l)] * g * g.adjoint();
        }
        const Eigen::VectorXcd x = r.ldlt().solve(scn.h[k][k] * beams.t[k]);
        const double nrm = x.norm();
        if (nrm > 0.0) out.u[k] = x / nrm;
    }
    return out;
}

MinStrategyModel receive_model(const MimoScenario& scn, const BeamformerSet& beams) {
    check_beams(scn, beams);
    std::vector<std::vector<Eigen::VectorXcd>> ch(scn.users());
    for (std::size_t k = 0; k < scn.users(); ++k)
        for (std::size_t l = 0; l < scn.users(); ++l) ch[k].push_back(scn.h[k][l] * beams.t[l]);
    return MinStrategyModel(std::move(ch), Eigen::VectorXd::Constant(static_cast<Eigen::Index>(scn.users()), scn.sigma2));
}

ReversedScenario reverse(const MimoScenario& scn, const BeamformerSet& beams) {
    check_beams(scn, beams);
    ReversedScenario r;
    r.scenario.n_r = scn.n_t;
    r.scenario.n_t = scn.n_r;
    r.scenario.sigma2 = scn.sigma2;
    r.scenario.h.assign(scn.users(), std::vector<Eigen::MatrixXcd>(scn.users()));
    for (std::size_t k = 0; k < scn.users(); ++k)
        for (std::size_t l = 0; l < scn.users(); ++l) r.scenario.h[k][l] = scn.h[l][k].adjoint();
    r.beams.t = beams.u;
    r.beams.u = beams.t;
    return r;
}

BeamformerSet svd_init(const MimoScenario& scn) {
    scn.validate();
    BeamformerSet b;
    for (std::size_t k = 0; k < scn.users(); ++k) {
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(scn.h[k][k], Eigen::ComputeThinU | Eigen::ComputeThinV);
        b.u.push_back(svd.matrixU().col(0));
        b.t.push_back(svd.matrixV().col(0));
    }
    return b;
}

PowerVector solve_powers(const MimoScenario& scn, const BeamformerSet& beams, const Eigen::VectorXd& targets) {
    const AffineModel m = effective_gains(scn, beams);
    const auto k = targets.size();
    if (static_cast<std::size_t>(k) != scn.users()) throw InputError("solve_powers: targets length != K");
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(k, k) - targets.asDiagonal() * m.gain();
    const Eigen::VectorXd b = targets.cwiseProduct(m.noise());
    PowerVector p = a.partialPivLu().solve(b);
    if (!p.allFinite() || (p.array() <= 0.0).any())
        throw BudgetError("solve_powers: targets not attainable with these beams", p);
    return p;
}

namespace {

void rescale(PowerVector& p, double level) {
    if (level > 0.0) p *= std::max(1.0, level / p.maxCoeff());
}

Eigen::VectorXd capped(Eigen::VectorXd s, const std::optional<double>& cap) {
    if (cap) s = s.cwiseMin(*cap);
    return s;
}

}  // namespace

RoundResult transceiver_round(const MimoScenario& scn, const BeamformerSet& beams_in, const PowerVector& p_primal,
                              const TransceiverOptions& opts) {
    check_beams(scn, beams_in);
    RoundResult out;
    BeamformerSet beams = beams_in;
    const BeamformerSet fresh = svd_init(scn);
    for (std::size_t k = 0; k < scn.users(); ++k) {
        if ((scn.h[k][k] * beams.t[k]).norm() < kMinSignalGain) {
            beams.t[k] = fresh.t[k];
            beams.u[k] = fresh.u[k];
            out.events.push_back("user " + std::to_string(k) + " re-initialized from SVD");
        }
    }

    PowerVector p = p_primal;
    rescale(p, opts.power_level);
    beams = mmse_receivers(scn, beams, p);
    const Eigen::VectorXd s = capped(beam_sirs(scn, beams, p), opts.sir_cap);

    ReversedScenario rev = reverse(scn, beams);
    PowerVector q = solve_powers(rev.scenario, rev.beams, s);
    rescale(q, opts.power_level);
    rev.beams = mmse_receivers(rev.scenario, rev.beams, q);
    out.sir_reversed = capped(beam_sirs(rev.scenario, rev.beams, q), opts.sir_cap);

    beams.t = rev.beams.u;
    out.p_primal = solve_powers(scn, beams, out.sir_reversed);
    out.p_reversed = std::move(q);
    out.sir_primal = beam_sirs(scn, beams, out.p_primal);
    out.beams = std::move(beams);
    return out;
}

std::string to_string(BeamPolicy p) {
    switch (p) {
        case BeamPolicy::fixed_svd: return "fixed-svd";
        case BeamPolicy::receive_only: return "receive-only";
        case BeamPolicy::full: return "full";
    }
    return "?";
}

BeamPolicy parse_policy(const std::string& name) {
    if (name == "fixed-svd") return BeamPolicy::fixed_svd;
    if (name == "receive-only") return BeamPolicy::receive_only;
    if (name == "full" || name == "full-alternating") return BeamPolicy::full;
    throw InputError("unknown beam policy '" + name + "'");
}

namespace {

double spectral_radius(const AffineModel& m) {
    return c_gamma_affine(m, SirTargets::common(m.users(), 1.0, 2.0));
}

bool full_probe(const MimoScenario& scn, double gamma, const MaxSirOptions& opts) {
    TransceiverOptions to;
    to.sir_cap = gamma;
    to.power_level = opts.power_level;
    BeamformerSet beams = svd_init(scn);
    PowerVector p = PowerVector::Ones(static_cast<Eigen::Index>(scn.users()));
    try {
        for (int r = 0; r < opts.rounds; ++r) {
            RoundResult rr = transceiver_round(scn, beams, p, to);
            beams = std::move(rr.beams);
            p = std::move(rr.p_primal);
        }
        beams = mmse_receivers(scn, beams, p);
        return gamma * spectral_radius(effective_gains(scn, beams)) < 1.0;
    } catch (const BudgetError&) {
        return false;
    } catch (const DegenerateBeamError&) {
        return false;
    }
}

}  // namespace

double max_common_sir(const MimoScenario& scn, BeamPolicy policy, const MaxSirOptions& opts) {
    scn.validate();
    const BeamformerSet init = svd_init(scn);
    const auto k = scn.users();
    switch (policy) {
        case BeamPolicy::fixed_svd: {
            const double rho = spectral_radius(effective_gains(scn, init));
            return rho > 1.0 / opts.cap ? 1.0 / rho : opts.cap;
        }
        case BeamPolicy::receive_only: {
            GeneralFeasibilityOptions go;
            go.bisection_rel_tol = opts.rel_tol;
            const auto c = c_gamma_general(receive_model(scn, init), SirTargets::common(k, 1.0, 2.0), go);
            return c.value > 1.0 / opts.cap ? 1.0 / c.value : opts.cap;
        }
        case BeamPolicy::full: {
            double lo = 0.0;
            double hi = 0.0;
            if (full_probe(scn, 1.0, opts)) {
                lo = 1.0;
                hi = 2.0;
                while (full_probe(scn, hi, opts)) {
                    lo = hi;
                    hi *= 2.0;
                    if (hi > opts.cap) return opts.cap;
                }
            } else {
                hi = 1.0;
                lo = 0.5;
                while (!full_probe(scn, lo, opts)) {
                    hi = lo;
                    lo *= 0.5;
                    if (lo < 1e-9) return 0.0;
                }
            }
            while (hi / lo - 1.0 > opts.rel_tol) {
                const double mid = std::sqrt(lo * hi);
                (full_probe(scn, mid, opts) ? lo : hi) = mid;
            }
            return std::sqrt(lo * hi);
        }
    }
    return 0.0;
}

}  // namespace alpnet
