#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace afl::sim {

struct TraceEvent {
    std::uint64_t seq = 0;
    double sim_time = 0.0;
    std::size_t client = 0;
    std::uint64_t origin_version = 0;
    std::uint64_t staleness = 0;
};

// CSV columns: event_seq,sim_time,client_id,origin_version,staleness
void write_trace_csv(const std::filesystem::path& path, std::span<const TraceEvent> events);
std::vector<TraceEvent> read_trace_csv(const std::filesystem::path& path);

}  // namespace afl::sim
