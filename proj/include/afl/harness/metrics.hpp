#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "afl/data/dataset.hpp"
#include "afl/nn/model.hpp"
#include "afl/sim/trace.hpp"

namespace afl::harness {

struct MetricsRecord {
    std::uint64_t seed = 0;
    double sim_time = 0.0;
    std::uint64_t server_updates = 0;
    double test_accuracy = 0.0;
    double test_loss = 0.0;
    double best_so_far = 0.0;
    std::int64_t last_staleness = -1;  // -1 before the first arrival
};

inline constexpr const char* kMetricsHeader =
    "seed,sim_time,server_updates,test_accuracy,test_loss,best_so_far,last_staleness";

std::string format_metrics_row(const MetricsRecord& r);
void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricsRecord> records);
std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path);

struct Evaluation {
    double accuracy = 0.0;
    double loss = 0.0;
};

// Argmax accuracy (ties go to the lower class) and mean cross-entropy.
Evaluation evaluate(const nn::ModelSpec& spec, const nn::ParamVector& params, const data::Dataset& test);

std::vector<double> best_so_far(std::span<const double> series);

// First sim_time whose running-max accuracy reaches `target`; nullopt if
// never. Throws PreconditionError for target <= 0.
std::optional<double> time_to_target(std::span<const MetricsRecord> records, double target);

struct StalenessHistogram {
    std::map<std::uint64_t, std::size_t> bins;
    std::size_t count = 0;
    double mean = 0.0;
    std::uint64_t p50 = 0;
    std::uint64_t p90 = 0;
    std::uint64_t p99 = 0;
};

// Nearest-rank quantile of a sample (q in (0, 1]).
std::uint64_t quantile(std::vector<std::uint64_t> values, double q);

StalenessHistogram staleness_histogram(std::span<const std::uint64_t> staleness);
StalenessHistogram staleness_histogram(std::span<const sim::TraceEvent> trace);

struct SeedResult {
    std::uint64_t seed = 0;
    double final_accuracy = 0.0;
    double best_accuracy = 0.0;
    double horizon = 0.0;  // last recorded sim_time
    std::optional<double> time_to_target;
};

struct MeanStd {
    double mean = 0.0;
    std::optional<double> std;  // sample std, only with >= 2 values
};

MeanStd mean_std(std::span<const double> values);

struct MethodSummary {
    std::string label;
    std::vector<SeedResult> seeds;
    MeanStd final_accuracy;
    MeanStd best_accuracy;
    // Present only when every seed reached the target.
    std::optional<MeanStd> time_to_target;
};

// Renders "mean ± std", or ">horizon" when some seed never reached it.
std::string format_time_to_target(const MethodSummary& m);

}  // namespace afl::harness
