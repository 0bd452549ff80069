#pragma once

// Phase orchestration: admission (A.i), transceiver (T.j) and distress (D.k)
// phases run in order, threading powers and beams through.

#include "alpnet/scenario.hpp"
#include "alpnet/trace.hpp"

#include <optional>
#include <string>
#include <vector>

namespace alpnet {

struct PhaseReport {
    std::string label;
    PhaseKind kind = PhaseKind::admission;
    long first_step = 0;
    long last_step = 0;
    std::string end;     ///< why the phase stopped
    std::string regime;  ///< classification of the phase's model at its start
    double c_gamma = 0.0;
};

struct ScheduleResult {
    std::vector<TraceRecord> records;
    std::vector<PhaseReport> phases;
    std::vector<long> admission_step;  ///< -1 if never admitted
    std::optional<long> all_admitted_at;
    long violations = 0;
    PowerVector final_powers;
    Eigen::VectorXd final_sirs;
    UserMask final_active;
    std::vector<std::string> events;
    std::string summary_json;
};

ScheduleResult run_schedule(const Scenario& scn);

/// ALP violation count from trace rows alone: (user, step) pairs with the
/// user inactive after having been active at an earlier step.
long count_trace_violations(const std::vector<TraceRecord>& records);

/// Writes trace.csv and summary.json into `dir` (created if missing).
void write_outputs(const ScheduleResult& result, const std::string& dir);

/// Classification of the scenario's initial model as JSON.
std::string classify_json(const Scenario& scn, bool* undecided = nullptr);

/// Axiom, condition and protection audits as JSON; `ok` is false if any
/// audit fails.
std::string check_json(const Scenario& scn, bool* ok = nullptr);

}  // namespace alpnet
