#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "afl/errors.hpp"
#include "afl/harness/experiment.hpp"
#include "afl/harness/metrics.hpp"
#include "afl/sim/trace.hpp"

namespace {

std::string fmt_mean_std(const afl::harness::MeanStd& m) {
    char buf[64];
    if (m.std)
        std::snprintf(buf, sizeof buf, "%.4f ± %.4f", m.mean, *m.std);
    else
        std::snprintf(buf, sizeof buf, "%.4f", m.mean);
    return buf;
}

int cmd_run(const std::string& config, const std::vector<std::uint64_t>& seeds, const std::string& out) {
    afl::harness::ExperimentConfig cfg = afl::harness::load_config(config);
    const std::vector<std::uint64_t> use = seeds.empty() ? cfg.seeds : seeds;
    const std::filesystem::path dir = out.empty() ? cfg.output_dir : std::filesystem::path(out);
    const auto outputs = afl::harness::run_and_write(cfg, dir, use);
    for (std::size_t i = 0; i < use.size(); ++i) {
        const auto& o = outputs[i];
        const auto& last = o.metrics.back();
        std::printf("%s seed=%llu updates=%llu final_acc=%.4f best_acc=%.4f", cfg.label.c_str(),
                    static_cast<unsigned long long>(use[i]), static_cast<unsigned long long>(o.server_updates),
                    last.test_accuracy, last.best_so_far);
        if (o.kd_warnings) std::printf(" kd_warnings=%zu", o.kd_warnings);
        std::printf(" -> %s\n", (dir / (afl::harness::run_stem(cfg, use[i]) + ".csv")).string().c_str());
    }
    return 0;
}

int cmd_summarize(const std::string& runs_dir, const afl::harness::SummaryOptions& opts) {
    const auto runs = afl::harness::load_runs(runs_dir);
    if (runs.empty()) throw afl::IoError("no <label>_seed<N>.csv files in " + runs_dir);
    const auto summary = afl::harness::summarize(runs, opts);
    if (opts.absolute_target)
        std::printf("target: accuracy %.4f\n", *opts.absolute_target);
    else
        std::printf("target: %.2f x best '%s' accuracy per seed\n", opts.target_frac, opts.reference.c_str());
    std::printf("%-16s %5s  %-18s %-18s %s\n", "method", "seeds", "final_acc", "best_acc", "time_to_target");
    for (const auto& m : summary) {
        std::printf("%-16s %5zu  %-18s %-18s %s\n", m.label.c_str(), m.seeds.size(),
                    fmt_mean_std(m.final_accuracy).c_str(), fmt_mean_std(m.best_accuracy).c_str(),
                    afl::harness::format_time_to_target(m).c_str());
    }
    for (const auto& m : summary) {
        for (const auto& s : m.seeds) {
            std::printf("  %s seed=%llu final=%.4f best=%.4f ttt=", m.label.c_str(),
                        static_cast<unsigned long long>(s.seed), s.final_accuracy, s.best_accuracy);
            if (s.time_to_target)
                std::printf("%.1f\n", *s.time_to_target);
            else
                std::printf(">%g\n", s.horizon);
        }
    }
    return 0;
}

int cmd_histogram(const std::string& trace_path) {
    const auto trace = afl::sim::read_trace_csv(trace_path);
    const auto h = afl::harness::staleness_histogram(trace);
    std::printf("events=%zu mean=%.3f p50=%llu p90=%llu p99=%llu\n", h.count, h.mean,
                static_cast<unsigned long long>(h.p50), static_cast<unsigned long long>(h.p90),
                static_cast<unsigned long long>(h.p99));
    std::printf("staleness,count\n");
    for (const auto& [bin, count] : h.bins)
        std::printf("%llu,%zu\n", static_cast<unsigned long long>(bin), count);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Asynchronous federated learning simulator"};
    app.require_subcommand(1);

    std::string config, out;
    std::vector<std::uint64_t> seeds;
    auto* run = app.add_subcommand("run", "Run an experiment config for one or more seeds");
    run->add_option("--config", config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--seed", seeds, "Seed to run (repeatable); defaults to the config's seed list");
    run->add_option("--out", out, "Output directory; defaults to the config's output.dir");

    std::string runs_dir;
    afl::harness::SummaryOptions opts;
    std::optional<double> absolute;
    auto* summarize = app.add_subcommand("summarize", "Final/best accuracy and time-to-target per method");
    summarize->add_option("--runs", runs_dir, "Directory of metrics CSVs")->required()->check(CLI::ExistingDirectory);
    summarize->add_option("--target-frac", opts.target_frac, "Fraction of the reference's best accuracy")
        ->check(CLI::Range(0.0, 1.0));
    summarize->add_option("--reference", opts.reference, "Label whose best accuracy sets the target");
    summarize->add_option("--target", absolute, "Absolute target accuracy (overrides --target-frac)");

    std::string trace_path;
    auto* histogram = app.add_subcommand("histogram", "Staleness histogram of an event trace");
    histogram->add_option("--trace", trace_path, "Trace CSV")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(config, seeds, out);
        if (*summarize) {
            opts.absolute_target = absolute;
            return cmd_summarize(runs_dir, opts);
        }
        if (*histogram) return cmd_histogram(trace_path);
    } catch (const afl::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
