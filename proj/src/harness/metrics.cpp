#include "afl/harness/metrics.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "afl/errors.hpp"
#include "afl/nn/losses.hpp"

namespace afl::harness {

std::string format_metrics_row(const MetricsRecord& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%" PRIu64 ",%.6f,%" PRIu64 ",%.6f,%.6f,%.6f,%" PRId64, r.seed, r.sim_time,
                  r.server_updates, r.test_accuracy, r.test_loss, r.best_so_far, r.last_staleness);
    return buf;
}

void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricsRecord> records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << kMetricsHeader << '\n';
    for (const auto& r : records) out << format_metrics_row(r) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kMetricsHeader)
        throw IoError(path.string() + ": unexpected metrics header");
    std::vector<MetricsRecord> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        MetricsRecord r;
        char tail = 0;
        const int n = std::sscanf(line.c_str(), "%" SCNu64 ",%lf,%" SCNu64 ",%lf,%lf,%lf,%" SCNd64 "%c", &r.seed,
                                  &r.sim_time, &r.server_updates, &r.test_accuracy, &r.test_loss, &r.best_so_far,
                                  &r.last_staleness, &tail);
        if (n != 7) throw IoError(path.string() + ":" + std::to_string(lineno) + ": malformed row");
        out.push_back(r);
    }
    return out;
}

Evaluation evaluate(const nn::ModelSpec& spec, const nn::ParamVector& params, const data::Dataset& test) {
    if (test.size() == 0) throw PreconditionError("evaluate needs a nonempty test set");
    const nn::ForwardResult fr = nn::forward(spec, params, test.inputs);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < test.size(); ++i)
        if (static_cast<int>(nn::argmax(fr.logits.row(i))) == test.labels[i]) ++correct;
    Evaluation e;
    e.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
    e.loss = nn::cross_entropy(fr.logits, test.labels).value;
    return e;
}

std::vector<double> best_so_far(std::span<const double> series) {
    std::vector<double> out(series.begin(), series.end());
    for (std::size_t i = 1; i < out.size(); ++i) out[i] = std::max(out[i], out[i - 1]);
    return out;
}

std::optional<double> time_to_target(std::span<const MetricsRecord> records, double target) {
    if (!(target > 0.0)) throw PreconditionError("time_to_target needs target > 0");
    double best = -1.0;
    for (const auto& r : records) {
        best = std::max(best, r.test_accuracy);
        if (best >= target) return r.sim_time;
    }
    return std::nullopt;
}

std::uint64_t quantile(std::vector<std::uint64_t> values, double q) {
    if (values.empty()) throw PreconditionError("quantile of an empty sample");
    if (!(q > 0.0 && q <= 1.0)) throw PreconditionError("quantile level must be in (0, 1]");
    std::sort(values.begin(), values.end());
    auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
    rank = std::clamp<std::size_t>(rank, 1, values.size());
    return values[rank - 1];
}

StalenessHistogram staleness_histogram(std::span<const std::uint64_t> staleness) {
    StalenessHistogram h;
    h.count = staleness.size();
    if (staleness.empty()) return h;
    double sum = 0.0;
    for (auto s : staleness) {
        ++h.bins[s];
        sum += static_cast<double>(s);
    }
    h.mean = sum / static_cast<double>(h.count);
    std::vector<std::uint64_t> v(staleness.begin(), staleness.end());
    h.p50 = quantile(v, 0.5);
    h.p90 = quantile(v, 0.9);
    h.p99 = quantile(v, 0.99);
    return h;
}

StalenessHistogram staleness_histogram(std::span<const sim::TraceEvent> trace) {
    std::vector<std::uint64_t> s;
    s.reserve(trace.size());
    for (const auto& e : trace) s.push_back(e.staleness);
    return staleness_histogram(s);
}

MeanStd mean_std(std::span<const double> values) {
    MeanStd m;
    if (values.empty()) return m;
    double sum = 0.0;
    for (double v : values) sum += v;
    m.mean = sum / static_cast<double>(values.size());
    if (values.size() >= 2) {
        double ss = 0.0;
        for (double v : values) ss += (v - m.mean) * (v - m.mean);
        m.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return m;
}

std::string format_time_to_target(const MethodSummary& m) {
    char buf[64];
    if (!m.time_to_target) {
        double horizon = 0.0;
        for (const auto& s : m.seeds) horizon = std::max(horizon, s.horizon);
        std::snprintf(buf, sizeof buf, ">%g", horizon);
        return buf;
    }
    if (m.time_to_target->std)
        std::snprintf(buf, sizeof buf, "%.1f ± %.1f", m.time_to_target->mean, *m.time_to_target->std);
    else
        std::snprintf(buf, sizeof buf, "%.1f", m.time_to_target->mean);
    return buf;
}

}  // namespace afl::harness
