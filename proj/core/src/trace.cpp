#include "alpnet/trace.hpp"

#include "alpnet/errors.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace alpnet {

std::vector<TraceRecord> trace_records(const Trajectory& traj, const std::string& phase, long step_offset) {
    std::vector<TraceRecord> out;
    for (const auto& s : traj.states)
        for (std::size_t k = 0; k < s.active.size(); ++k) {
            const auto i = static_cast<Eigen::Index>(k);
            out.push_back({s.n + step_offset, phase, k, s.powers[i], s.sirs[i], static_cast<bool>(s.active[k]),
                           !s.distress.empty() && s.distress[k], s.gate});
        }
    return out;
}

std::string trace_csv(const std::vector<TraceRecord>& records) {
    std::string out = kTraceHeader;
    out += '\n';
    char buf[160];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof buf, "%ld,", r.step);
        out += buf;
        out += r.phase;
        std::snprintf(buf, sizeof buf, ",%zu,%.17g,%.17g,%d,%d,%d\n", r.user, r.power, r.sir, r.active ? 1 : 0,
                      r.distress ? 1 : 0, r.gate ? 1 : 0);
        out += buf;
    }
    return out;
}

std::vector<TraceRecord> parse_trace_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kTraceHeader) throw InputError("trace: missing or wrong header");
    std::vector<TraceRecord> out;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (f.size() != 8) throw InputError("trace: line " + std::to_string(lineno) + " has " + std::to_string(f.size()) + " fields");
        try {
            TraceRecord r;
            r.step = std::stol(f[0]);
            r.phase = f[1];
            r.user = std::stoul(f[2]);
            r.power = std::stod(f[3]);
            r.sir = std::stod(f[4]);
            r.active = f[5] == "1";
            r.distress = f[6] == "1";
            r.gate = f[7] == "1";
            out.push_back(std::move(r));
        } catch (const std::logic_error&) {
            throw InputError("trace: line " + std::to_string(lineno) + " is malformed");
        }
    }
    return out;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("write to '" + path + "' failed");
}

void emit_trace(const std::vector<TraceRecord>& records, const std::string& path) {
    write_file(path, trace_csv(records));
}

}  // namespace alpnet
