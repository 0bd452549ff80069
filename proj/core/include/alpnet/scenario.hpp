#pragma once

// Scenario files: JSON text describing the network, targets, caps, the phase
// schedule and the seed. Anything not given explicitly is generated from the
// seed.

#include "alpnet/beamforming.hpp"
#include "alpnet/interference.hpp"
#include "alpnet/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace alpnet {

enum class ScenarioKind { affine, mimo, worst_case };

std::string to_string(ScenarioKind k);

enum class PhaseKind { admission, transceiver, distress };

std::string to_string(PhaseKind k);

struct PhaseSpec {
    PhaseKind kind = PhaseKind::admission;
    int budget = 100000;  ///< admission / distress steps
    int rounds = 10;      ///< transceiver rounds
    std::string rule = "eq22";
};

struct AffineParams {
    Eigen::MatrixXd gain;
    Eigen::VectorXd noise;
};

struct WarmStart {
    std::vector<std::size_t> preadmitted;
    int rounds = 10;
    std::optional<double> inactive_power;  ///< default: seeded log-uniform draw
};

struct Scenario {
    std::string name = "scenario";
    ScenarioKind kind = ScenarioKind::affine;
    std::size_t users = 0;

    AffineParams affine;
    std::vector<AffineParams> members;  ///< worst-case uncertainty set
    std::optional<MimoScenario> mimo;

    SirTargets targets;
    PowerVector initial_powers;
    std::optional<UserMask> initial_active;
    std::optional<PowerConstraints> caps;
    std::optional<BeamformerSet> initial_beams;  ///< mimo only

    std::vector<PhaseSpec> schedule;
    std::uint64_t seed = 0;
    std::optional<WarmStart> warm_start;

    double admission_sir_tol = 1e-6;
    double power_threshold_factor = 1e6;  ///< times the initial max power

    std::string config_json;  ///< the input, re-serialized
    std::string hash;         ///< FNV-1a over config and generated data, hex
};

/// Parse and generate. Errors are InputError with the offending field path.
/// `seed_override` wins over the file's seed.
Scenario parse_scenario(const std::string& json_text, std::optional<std::uint64_t> seed_override = std::nullopt);

/// Read a file; the seed comes from `seed_override`, else ALPNET_SEED, else
/// the file. Throws IoError if the file cannot be read.
Scenario load_scenario(const std::string& path, std::optional<std::uint64_t> seed_override = std::nullopt);

/// Interference model of the scenario. MIMO scenarios need beams (defaults
/// to the scenario's initial beams).
ModelPtr build_model(const Scenario& scn, const BeamformerSet* beams = nullptr);

}  // namespace alpnet
