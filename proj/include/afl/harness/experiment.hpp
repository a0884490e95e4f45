#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "afl/data/dataset.hpp"
#include "afl/data/partition.hpp"
#include "afl/harness/config.hpp"
#include "afl/harness/metrics.hpp"
#include "afl/sim/trace.hpp"

namespace afl::harness {

// Everything derived from (config, seed) before the server loop starts.
struct Task {
    data::Dataset train;
    data::Dataset test;
    data::Dataset public_data;  // empty unless revive_dd
    data::Partitioned clients;
    nn::ModelSpec spec;
};

Task build_task(const ExperimentConfig& cfg, std::uint64_t seed);

struct RunOutput {
    std::vector<MetricsRecord> metrics;
    std::vector<sim::TraceEvent> trace;
    std::uint64_t server_updates = 0;
    std::size_t kd_warnings = 0;
    nn::ParamVector final_params;
};

// Runs the server loop for one seed until the horizon (or max_updates),
// evaluating every `interval` simulated seconds.
RunOutput run_experiment(const ExperimentConfig& cfg, std::uint64_t seed);

// File name stem used by the CLI: "<label>_seed<seed>".
std::string run_stem(const ExperimentConfig& cfg, std::uint64_t seed);

// Runs every seed of `cfg` (in parallel when OpenMP has threads) and writes
// per-seed metrics CSVs and, optionally, traces under `out_dir`.
std::vector<RunOutput> run_and_write(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                                     const std::vector<std::uint64_t>& seeds);

// Loads "<label>_seed<N>.csv" files under `dir`, grouped by label.
std::map<std::string, std::map<std::uint64_t, std::vector<MetricsRecord>>> load_runs(
    const std::filesystem::path& dir);

struct SummaryOptions {
    double target_frac = 0.85;
    std::string reference = "fedbuff";
    std::optional<double> absolute_target;
};

// Per-seed target = target_frac * best accuracy of the reference label on the
// same seed, unless an absolute target is given.
std::vector<MethodSummary> summarize(
    const std::map<std::string, std::map<std::uint64_t, std::vector<MetricsRecord>>>& runs,
    const SummaryOptions& opts);

}  // namespace afl::harness
