#include "afl/sim/trace.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "afl/errors.hpp"

namespace afl::sim {

void write_trace_csv(const std::filesystem::path& path, std::span<const TraceEvent> events) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "event_seq,sim_time,client_id,origin_version,staleness\n";
    char buf[160];
    for (const auto& e : events) {
        std::snprintf(buf, sizeof buf, "%llu,%.6f,%zu,%llu,%llu\n",
                      static_cast<unsigned long long>(e.seq), e.sim_time, e.client,
                      static_cast<unsigned long long>(e.origin_version),
                      static_cast<unsigned long long>(e.staleness));
        out << buf;
    }
}

std::vector<TraceEvent> read_trace_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line.rfind("event_seq,sim_time,client_id,origin_version,staleness", 0) != 0)
        throw IoError(path.string() + ": not an event trace");
    std::vector<TraceEvent> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        TraceEvent e;
        char comma;
        if (!(ss >> e.seq >> comma >> e.sim_time >> comma >> e.client >> comma >> e.origin_version >>
              comma >> e.staleness))
            throw IoError(path.string() + ": malformed row: " + line);
        out.push_back(e);
    }
    return out;
}

}  // namespace afl::sim
