#include "afl/harness/experiment.hpp"

#include <algorithm>
#include <exception>
#include <limits>
#include <regex>

#include "afl/errors.hpp"
#include "afl/sim/engine.hpp"

namespace afl::harness {

namespace {

// Stream tags for derive_seed; one per independent consumer of randomness.
constexpr std::uint64_t kDataStream = 0xDA7A;
constexpr std::uint64_t kSplitStream = 0x5B1;
constexpr std::uint64_t kPartitionStream = 0xBA27;
constexpr std::uint64_t kPopulationStream = 0x909;
constexpr std::uint64_t kEngineStream = 0xE96;
constexpr std::uint64_t kInitStream = 0x1417;
constexpr std::uint64_t kLocalStream = 0x10CA1;
constexpr std::uint64_t kKdStream = 0xCD;

std::uint64_t limit_or_max(std::uint64_t v) {
    return v == 0 ? std::numeric_limits<std::uint64_t>::max() : v;
}

}  // namespace

Task build_task(const ExperimentConfig& cfg, std::uint64_t seed) {
    const auto& dc = cfg.dataset;
    const bool needs_public = cfg.strategy.name == agg::Strategy::revive_dd;
    const std::size_t public_count =
        needs_public ? std::max<std::size_t>(dc.classes, static_cast<std::size_t>(dc.public_fraction *
                                                                                  static_cast<double>(dc.train_samples)))
                     : 0;
    const std::size_t total = dc.train_samples + dc.test_samples + public_count;

    data::Dataset all = data::make_blobs(derive_seed(seed, kDataStream), dc.classes, dc.dim, total, dc.spread);
    auto [rest, test] = data::split(all, dc.test_samples, derive_seed(seed, kSplitStream));

    Task task;
    task.test = std::move(test);
    if (needs_public) {
        auto [train, pub] = data::split(rest, public_count, derive_seed(seed, kSplitStream + 1));
        task.train = std::move(train);
        task.public_data = std::move(pub);
    } else {
        task.train = std::move(rest);
    }

    const auto& pc = cfg.partition;
    const std::uint64_t pseed = derive_seed(seed, kPartitionStream);
    if (pc.iid)
        task.clients = data::iid_partition(task.train, pc.clients, pseed);
    else if (pc.samples_per_client)
        task.clients = data::dirichlet_partition_fixed(task.train, pc.clients, pc.alpha, *pc.samples_per_client, pseed);
    else
        task.clients = data::dirichlet_partition(task.train, pc.clients, pc.alpha, pseed);

    task.spec = cfg.model_spec();
    return task;
}

RunOutput run_experiment(const ExperimentConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const Task task = build_task(cfg, seed);
    const nn::ModelSpec& spec = task.spec;
    const agg::Strategy strategy = cfg.strategy.name;
    const bool sync = strategy == agg::Strategy::sync;
    const double lr = cfg.train.server_lr;
    const std::size_t concurrency = cfg.train.concurrency;
    const std::uint64_t max_updates = limit_or_max(cfg.train.max_updates);
    const agg::LocalTrainConfig ltc = cfg.local_train();

    sim::PopulationConfig pop_cfg = cfg.population;
    pop_cfg.clients = cfg.partition.clients;
    sim::Engine engine(sim::build_population(pop_cfg, derive_seed(seed, kPopulationStream)),
                       derive_seed(seed, kEngineStream));

    Rng init_rng = make_rng(seed, kInitStream);
    agg::ServerModel model{nn::init_params(spec, init_rng), 0};
    // Snapshots of every model version some in-flight job started from.
    std::map<std::uint64_t, nn::ParamVector> history{{0, model.params}};

    agg::BufferState buffer{cfg.strategy.buffer_size, {}};
    std::vector<sim::ClientUpdate> round;

    std::optional<dfkd::KdReviveState> kd;
    if (strategy == agg::Strategy::revive)
        kd = dfkd::make_kd_state(spec, cfg.dataset.classes, cfg.dfkd, derive_seed(seed, kKdStream));
    else if (strategy == agg::Strategy::revive_dd)
        kd = dfkd::make_kd_state_data_driven(spec, task.public_data, cfg.dfkd, derive_seed(seed, kKdStream));

    RunOutput out;
    std::int64_t last_staleness = -1;
    double best = 0.0;
    auto record = [&](double t) {
        const Evaluation e = evaluate(spec, model.params, task.test);
        best = out.metrics.empty() ? e.accuracy : std::max(best, e.accuracy);
        out.metrics.push_back({seed, t, model.updates, e.accuracy, e.loss, best, last_staleness});
    };

    for (std::size_t i = 0; i < concurrency; ++i) engine.request_dispatch(0);

    const double horizon = cfg.evaluation.horizon;
    const double interval = cfg.evaluation.interval;
    std::uint64_t k = 0;
    while (true) {
        const double next_eval = static_cast<double>(k) * interval;
        if (next_eval > horizon) break;
        const std::optional<double> arrival = engine.peek_arrival(model.updates);
        if (!arrival || *arrival > next_eval) {
            record(next_eval);
            ++k;
            continue;
        }

        const sim::InFlightJob job = engine.next_arrival(model.updates);
        Rng local_rng = make_rng(derive_seed(seed, kLocalStream), job.seq);
        agg::LocalTrainResult res = agg::local_train(spec, history.at(job.version), task.train,
                                                     task.clients.partition, job.client, ltc, local_rng);

        sim::ClientUpdate upd;
        upd.client = job.client;
        upd.delta = std::move(res.delta);
        upd.origin_version = job.version;
        upd.staleness = sim::staleness_of(job, model.updates);
        upd.arrival_time = job.arrival_time;
        upd.labels = &task.clients.labels.clients.at(job.client);
        out.trace.push_back({job.seq, job.arrival_time, job.client, job.version, upd.staleness});
        last_staleness = static_cast<std::int64_t>(upd.staleness);

        const std::uint64_t before = model.updates;
        switch (strategy) {
            case agg::Strategy::sync:
                round.push_back(std::move(upd));
                if (round.size() == concurrency) {
                    agg::agg_sync_round(model, round, lr);
                    round.clear();
                }
                break;
            case agg::Strategy::async:
                agg::agg_async(model, upd, lr);
                break;
            case agg::Strategy::fedbuff:
                agg::agg_fedbuff(model, upd, buffer, lr);
                break;
            case agg::Strategy::afldw:
                agg::agg_afldw(model, upd, cfg.strategy.beta, lr);
                break;
            case agg::Strategy::revive:
            case agg::Strategy::revive_dd: {
                const nn::ParamVector kd_update =
                    dfkd::kd_revive(*kd, res.trained, res.stats, *upd.labels, model.params);
                agg::agg_revive(model, upd, cfg.strategy.beta, lr, kd_update);
                break;
            }
        }
        if (model.updates != before) history.emplace(model.updates, model.params);

        if (model.updates >= max_updates) {
            record(job.arrival_time);
            break;
        }

        if (sync) {
            if (round.empty())
                for (std::size_t i = 0; i < concurrency; ++i) engine.request_dispatch(model.updates);
        } else {
            engine.request_dispatch(model.updates);
        }

        const std::uint64_t keep = std::min(engine.oldest_version().value_or(model.updates), model.updates);
        history.erase(history.begin(), history.lower_bound(keep));
    }

    out.server_updates = model.updates;
    out.final_params = model.params;
    if (kd) out.kd_warnings = kd->warnings;
    return out;
}

std::string run_stem(const ExperimentConfig& cfg, std::uint64_t seed) {
    return cfg.label + "_seed" + std::to_string(seed);
}

std::vector<RunOutput> run_and_write(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                                     const std::vector<std::uint64_t>& seeds) {
    std::vector<RunOutput> outputs(seeds.size());
    std::vector<std::exception_ptr> errors(seeds.size());
    const auto n = static_cast<std::int64_t>(seeds.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < n; ++i) {
        try {
            outputs[i] = run_experiment(cfg, seeds[i]);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    std::filesystem::create_directories(out_dir);
    if (cfg.write_trace) std::filesystem::create_directories(out_dir / "traces");
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        const std::string stem = run_stem(cfg, seeds[i]);
        write_metrics_csv(out_dir / (stem + ".csv"), outputs[i].metrics);
        if (cfg.write_trace) sim::write_trace_csv(out_dir / "traces" / (stem + ".csv"), outputs[i].trace);
    }
    return outputs;
}

std::map<std::string, std::map<std::uint64_t, std::vector<MetricsRecord>>> load_runs(
    const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    static const std::regex name_re(R"((.+)_seed(\d+)\.csv)");
    std::map<std::string, std::map<std::uint64_t, std::vector<MetricsRecord>>> runs;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        std::smatch m;
        if (!std::regex_match(name, m, name_re)) continue;
        runs[m[1].str()][std::stoull(m[2].str())] = read_metrics_csv(entry.path());
    }
    return runs;
}

std::vector<MethodSummary> summarize(
    const std::map<std::string, std::map<std::uint64_t, std::vector<MetricsRecord>>>& runs,
    const SummaryOptions& opts) {
    const std::map<std::uint64_t, std::vector<MetricsRecord>>* reference = nullptr;
    if (!opts.absolute_target) {
        auto it = runs.find(opts.reference);
        if (it == runs.end()) throw LookupError("reference label '" + opts.reference + "' not found in runs");
        reference = &it->second;
    }

    std::vector<MethodSummary> out;
    for (const auto& [label, seeds] : runs) {
        MethodSummary ms;
        ms.label = label;
        std::vector<double> finals, bests, times;
        bool all_reached = true;
        for (const auto& [seed, records] : seeds) {
            if (records.empty()) throw ConsistencyError(label + " seed " + std::to_string(seed) + " has no records");
            SeedResult sr;
            sr.seed = seed;
            sr.final_accuracy = records.back().test_accuracy;
            for (const auto& r : records) sr.best_accuracy = std::max(sr.best_accuracy, r.test_accuracy);
            sr.horizon = records.back().sim_time;

            double target = 0.0;
            if (opts.absolute_target) {
                target = *opts.absolute_target;
            } else {
                auto ref = reference->find(seed);
                if (ref == reference->end())
                    throw LookupError("reference '" + opts.reference + "' has no seed " + std::to_string(seed));
                double ref_best = 0.0;
                for (const auto& r : ref->second) ref_best = std::max(ref_best, r.test_accuracy);
                target = opts.target_frac * ref_best;
            }
            sr.time_to_target = time_to_target(records, target);
            if (sr.time_to_target)
                times.push_back(*sr.time_to_target);
            else
                all_reached = false;
            finals.push_back(sr.final_accuracy);
            bests.push_back(sr.best_accuracy);
            ms.seeds.push_back(sr);
        }
        ms.final_accuracy = mean_std(finals);
        ms.best_accuracy = mean_std(bests);
        if (all_reached && !times.empty()) ms.time_to_target = mean_std(times);
        out.push_back(std::move(ms));
    }
    return out;
}

}  // namespace afl::harness
