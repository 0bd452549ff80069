#pragma once

// MIMO links with single-stream beamforming: effective gains, MMSE
// receivers, the reversed network and alternating transceiver optimization.

#include "alpnet/interference.hpp"
#include "alpnet/types.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace alpnet {

struct MimoScenario {
    Eigen::Index n_r = 0;
    Eigen::Index n_t = 0;
    double sigma2 = 1.0;
    /// h[k][l] is the n_r x n_t channel from transmitter l to receiver k.
    std::vector<std::vector<Eigen::MatrixXcd>> h;

    std::size_t users() const { return h.size(); }

    /// Throws InputError on inconsistent shapes or sigma2 <= 0.
    void validate() const;

    /// I.i.d. circular symmetric unit-variance entries from a seeded
    /// mt19937_64, drawn in the order k, l, row, column, (re, im).
    static MimoScenario random(std::size_t users, Eigen::Index n_r, Eigen::Index n_t, double sigma2,
                               std::uint64_t seed);

    /// Sub-network of the listed users, in the given order.
    MimoScenario subset(const std::vector<std::size_t>& users) const;
};

struct BeamformerSet {
    std::vector<Eigen::VectorXcd> t;  ///< transmit, unit norm
    std::vector<Eigen::VectorXcd> u;  ///< receive, unit norm

    BeamformerSet subset(const std::vector<std::size_t>& users) const;
};

inline constexpr double kMinSignalGain = 1e-14;

/// v_kl = |u_k^H H_kl t_l|^2 / |u_k^H H_kk t_k|^2, z_k = sigma2 / |u_k^H H_kk t_k|^2.
/// Throws DegenerateBeamError when some |u_k^H H_kk t_k| < kMinSignalGain.
AffineModel effective_gains(const MimoScenario& scn, const BeamformerSet& beams);

/// Per-user SIR at powers p with the given beams.
Eigen::VectorXd beam_sirs(const MimoScenario& scn, const BeamformerSet& beams, const PowerVector& p);

/// u_k <- R_k^{-1} H_kk t_k, normalized.
BeamformerSet mmse_receivers(const MimoScenario& scn, const BeamformerSet& beams, const PowerVector& p);

/// Interference with adaptive receivers and fixed transmit beams:
/// g_kl = H_kl t_l.
MinStrategyModel receive_model(const MimoScenario& scn, const BeamformerSet& beams);

struct ReversedScenario {
    MimoScenario scenario;  ///< h'[k][l] = h[l][k]^H, same sigma2
    BeamformerSet beams;    ///< t' = u, u' = t
};

ReversedScenario reverse(const MimoScenario& scn, const BeamformerSet& beams);

/// Leading left/right singular vectors of each direct channel H_kk.
BeamformerSet svd_init(const MimoScenario& scn);

/// Powers meeting `targets` exactly with the given beams, from
/// (Id - diag(targets) V) p = diag(targets) z. Throws BudgetError when the
/// targets are not attainable (non-positive or non-finite solution).
PowerVector solve_powers(const MimoScenario& scn, const BeamformerSet& beams, const Eigen::VectorXd& targets);

struct TransceiverOptions {
    std::optional<double> sir_cap;  ///< clamp exchanged targets
    double power_level = 0.0;       ///< scale powers up to this level before each MMSE update; 0 = off
};

struct RoundResult {
    BeamformerSet beams;
    PowerVector p_primal;
    PowerVector p_reversed;
    Eigen::VectorXd sir_primal;
    Eigen::VectorXd sir_reversed;
    std::vector<std::string> events;
};

/// One alternating round: primal MMSE receivers, reversed powers for the
/// primal SIRs, reversed MMSE (rewrites t), primal powers for the reversed
/// SIRs. Degenerate direct links are re-initialized from the SVD first.
RoundResult transceiver_round(const MimoScenario& scn, const BeamformerSet& beams, const PowerVector& p_primal,
                              const TransceiverOptions& opts = {});

enum class BeamPolicy { fixed_svd, receive_only, full };

std::string to_string(BeamPolicy p);
BeamPolicy parse_policy(const std::string& name);

struct MaxSirOptions {
    int rounds = 30;           ///< alternating rounds per probe (full)
    double power_level = 1e6;  ///< see TransceiverOptions (full)
    double cap = 1e6;          ///< reported when nothing limits the SIR
    double rel_tol = 1e-4;
};

/// Largest common SIR target reachable under the policy.
double max_common_sir(const MimoScenario& scn, BeamPolicy policy, const MaxSirOptions& opts = {});

}  // namespace alpnet
