#pragma once

// Trace CSV: one row per user per step,
//   step,phase,user,power,sir,active,distress,gate
// with floating values at 17 significant digits.

#include "alpnet/alp.hpp"

#include <string>
#include <vector>

namespace alpnet {

struct TraceRecord {
    long step = 0;
    std::string phase;
    std::size_t user = 0;
    double power = 0.0;
    double sir = 0.0;
    bool active = false;
    bool distress = false;
    bool gate = true;
};

inline constexpr const char* kTraceHeader = "step,phase,user,power,sir,active,distress,gate";

/// Rows for every state of `traj`, all tagged with `phase`. `step_offset`
/// is added to each state's n.
std::vector<TraceRecord> trace_records(const Trajectory& traj, const std::string& phase, long step_offset = 0);

std::string trace_csv(const std::vector<TraceRecord>& records);

/// Inverse of trace_csv. Throws InputError on a malformed row.
std::vector<TraceRecord> parse_trace_csv(const std::string& text);

/// Write text to a file, throwing IoError on failure.
void write_file(const std::string& path, const std::string& text);

/// trace_csv to a file.
void emit_trace(const std::vector<TraceRecord>& records, const std::string& path);

}  // namespace alpnet
