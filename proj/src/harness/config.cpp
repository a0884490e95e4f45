#include "afl/harness/config.hpp"

#include <fstream>
#include <set>

#include "afl/errors.hpp"

namespace afl::harness {

using nlohmann::json;

namespace {

// Reads keys from one JSON object and rejects anything it was not asked for.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + " must be an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    template <typename T>
    void read(const std::string& key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(where() + "." + key + ": " + e.what());
        }
    }

    Section child(const std::string& key) {
        seen_.insert(key);
        return Section(j_.at(key), path_ + "." + key);
    }

    // Marks a key as known without reading it.
    void accept(const std::string& key) { seen_.insert(key); }

    void finish() const {
        for (const auto& [key, _] : j_.items())
            if (!seen_.count(key)) throw ConfigError("unknown key " + where() + "." + key);
    }

    std::string where() const { return path_; }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

nn::Activation parse_activation(const std::string& s) {
    if (s == "relu") return nn::Activation::relu;
    if (s == "tanh") return nn::Activation::tanh;
    if (s == "identity") return nn::Activation::identity;
    throw ConfigError("unknown activation '" + s + "'");
}

const char* activation_name(nn::Activation a) {
    switch (a) {
        case nn::Activation::relu: return "relu";
        case nn::Activation::tanh: return "tanh";
        case nn::Activation::identity: return "identity";
    }
    return "?";
}

}  // namespace

nn::ModelSpec ExperimentConfig::model_spec() const {
    nn::ModelSpec spec = nn::ModelSpec::mlp(dataset.dim, model.hidden, dataset.classes, model.activation);
    if (model.tracked_layers) {
        for (auto& l : spec.layers) l.track_stats = false;
        for (std::size_t l : *model.tracked_layers) {
            if (l >= spec.layers.size()) throw ConfigError("model.tracked_layers: layer index out of range");
            spec.layers[l].track_stats = true;
        }
    }
    return spec;
}

agg::LocalTrainConfig ExperimentConfig::local_train() const {
    return {train.local_steps, train.local_lr, train.batch};
}

void ExperimentConfig::validate() const {
    if (seeds.empty()) throw ConfigError("seeds must not be empty");
    if (dataset.classes < 2 || dataset.dim < 2) throw ConfigError("dataset needs classes >= 2 and dim >= 2");
    if (!(dataset.spread > 0.0)) throw ConfigError("dataset.spread must be positive");
    if (dataset.train_samples < dataset.classes) throw ConfigError("dataset.train_samples must be >= classes");
    if (dataset.test_samples == 0) throw ConfigError("dataset.test_samples must be positive");
    if (partition.clients == 0) throw ConfigError("partition.clients must be positive");
    if (!partition.iid && !(partition.alpha > 0.0)) throw ConfigError("partition.alpha must be positive");
    sim::PopulationConfig pop = population;
    pop.clients = partition.clients;
    pop.validate();
    model_spec().validate();
    if (!(train.local_lr >= 0.0) || !(train.server_lr >= 0.0)) throw ConfigError("learning rates must be >= 0");
    if (train.batch == 0) throw ConfigError("train.batch must be positive");
    if (train.concurrency == 0 || train.concurrency > partition.clients)
        throw ConfigError("train.concurrency must be in [1, clients]");
    if (strategy.name == agg::Strategy::fedbuff && strategy.buffer_size == 0)
        throw ConfigError("strategy.buffer_size must be positive");
    if (agg::uses_beta(strategy.name)) strategy.beta.validate();
    if (agg::uses_kd(strategy.name)) dfkd.validate();
    if (strategy.name == agg::Strategy::revive_dd && !(dataset.public_fraction > 0.0))
        throw ConfigError("dataset.public_fraction must be positive for revive_dd");
    if (!(evaluation.interval > 0.0)) throw ConfigError("evaluation.interval must be positive");
    if (evaluation.horizon < 0.0) throw ConfigError("evaluation.horizon must be >= 0");
}

ExperimentConfig parse_config(const json& j) {
    ExperimentConfig cfg;
    Section root(j, "config");

    root.read("label", cfg.label);
    root.read("seeds", cfg.seeds);

    if (root.has("dataset")) {
        Section s = root.child("dataset");
        s.read("classes", cfg.dataset.classes);
        s.read("dim", cfg.dataset.dim);
        s.read("spread", cfg.dataset.spread);
        s.read("train_samples", cfg.dataset.train_samples);
        s.read("test_samples", cfg.dataset.test_samples);
        s.read("public_fraction", cfg.dataset.public_fraction);
        s.finish();
    }
    if (root.has("partition")) {
        Section s = root.child("partition");
        s.read("clients", cfg.partition.clients);
        s.read("alpha", cfg.partition.alpha);
        s.read("iid", cfg.partition.iid);
        if (s.has("samples_per_client")) {
            std::size_t n = 0;
            s.read("samples_per_client", n);
            cfg.partition.samples_per_client = n;
        } else {
            s.accept("samples_per_client");
        }
        s.finish();
    }
    if (root.has("population")) {
        Section s = root.child("population");
        auto& p = cfg.population;
        s.read("active_fraction", p.active_fraction);
        s.read("group_mix", p.group_mix);
        s.read("compute_median", p.compute_median);
        s.read("upload_median", p.upload_median);
        s.read("compute_sigma", p.compute_sigma);
        s.read("upload_sigma", p.upload_sigma);
        s.read("client_jitter", p.client_jitter);
        s.read("mean_active_period", p.mean_active_period);
        s.finish();
    }
    cfg.population.clients = cfg.partition.clients;
    if (root.has("model")) {
        Section s = root.child("model");
        s.read("hidden", cfg.model.hidden);
        std::string act = activation_name(cfg.model.activation);
        s.read("activation", act);
        cfg.model.activation = parse_activation(act);
        if (s.has("tracked_layers")) {
            std::vector<std::size_t> t;
            s.read("tracked_layers", t);
            cfg.model.tracked_layers = t;
        } else {
            s.accept("tracked_layers");
        }
        s.finish();
    }
    if (root.has("train")) {
        Section s = root.child("train");
        s.read("local_lr", cfg.train.local_lr);
        s.read("server_lr", cfg.train.server_lr);
        s.read("local_steps", cfg.train.local_steps);
        s.read("batch", cfg.train.batch);
        s.read("concurrency", cfg.train.concurrency);
        s.read("max_updates", cfg.train.max_updates);
        s.finish();
    }
    if (!root.has("strategy")) throw ConfigError("config.strategy is required");
    {
        Section s = root.child("strategy");
        std::string name;
        s.read("name", name);
        if (name.empty()) throw ConfigError("config.strategy.name is required");
        cfg.strategy.name = agg::parse_strategy(name);
        if (s.has("buffer_size")) {
            if (cfg.strategy.name != agg::Strategy::fedbuff)
                throw ConfigError("strategy.buffer_size only applies to fedbuff");
            s.read("buffer_size", cfg.strategy.buffer_size);
        }
        if (s.has("beta")) {
            if (!agg::uses_beta(cfg.strategy.name))
                throw ConfigError("strategy.beta only applies to afldw, revive and revive_dd");
            Section b = s.child("beta");
            std::string fam = agg::to_string(cfg.strategy.beta.family);
            b.read("family", fam);
            cfg.strategy.beta.family = agg::parse_beta_family(fam);
            b.read("transition", cfg.strategy.beta.transition);
            b.read("value", cfg.strategy.beta.value);
            b.finish();
        }
        s.finish();
    }
    if (root.has("dfkd")) {
        if (!agg::uses_kd(cfg.strategy.name)) throw ConfigError("dfkd section only applies to revive and revive_dd");
        Section s = root.child("dfkd");
        auto& d = cfg.dfkd;
        s.read("kd_buffer", d.buffer_capacity);
        s.read("synthetic_capacity", d.synthetic_capacity);
        if (s.has("generator")) {
            Section g = s.child("generator");
            g.read("latent_dim", d.generator.latent_dim);
            g.read("hidden", d.generator.hidden);
            g.read("output_scale", d.generator.output_scale);
            g.finish();
        }
        if (s.has("synthesis")) {
            Section g = s.child("synthesis");
            g.read("steps", d.synthesis.steps);
            g.read("lr", d.synthesis.lr);
            g.read("w_target", d.synthesis.w_target);
            g.read("w_feature", d.synthesis.w_feature);
            g.read("w_adv", d.synthesis.w_adv);
            g.read("meta_lambda", d.synthesis.meta_lambda);
            g.read("batch", d.synthesis.batch);
            g.finish();
        }
        if (s.has("distill")) {
            Section g = s.child("distill");
            g.read("steps", d.distill.steps);
            g.read("lr", d.distill.lr);
            g.read("batch", d.distill.batch);
            g.read("temperature", d.distill.temperature);
            g.finish();
        }
        s.finish();
    }
    if (root.has("evaluation")) {
        Section s = root.child("evaluation");
        s.read("interval", cfg.evaluation.interval);
        s.read("horizon", cfg.evaluation.horizon);
        s.finish();
    }
    if (root.has("output")) {
        Section s = root.child("output");
        std::string dir = cfg.output_dir.string();
        s.read("dir", dir);
        cfg.output_dir = dir;
        s.read("trace", cfg.write_trace);
        s.finish();
    }
    root.finish();

    if (cfg.label.empty()) cfg.label = agg::to_string(cfg.strategy.name);
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_config(j);
}

json to_json(const ExperimentConfig& cfg) {
    json j;
    j["label"] = cfg.label;
    j["seeds"] = cfg.seeds;
    j["dataset"] = {{"classes", cfg.dataset.classes},
                    {"dim", cfg.dataset.dim},
                    {"spread", cfg.dataset.spread},
                    {"train_samples", cfg.dataset.train_samples},
                    {"test_samples", cfg.dataset.test_samples},
                    {"public_fraction", cfg.dataset.public_fraction}};
    j["partition"] = {{"clients", cfg.partition.clients}, {"alpha", cfg.partition.alpha}, {"iid", cfg.partition.iid}};
    if (cfg.partition.samples_per_client) j["partition"]["samples_per_client"] = *cfg.partition.samples_per_client;
    const auto& p = cfg.population;
    j["population"] = {{"active_fraction", p.active_fraction},
                       {"group_mix", p.group_mix},
                       {"compute_median", p.compute_median},
                       {"upload_median", p.upload_median},
                       {"compute_sigma", p.compute_sigma},
                       {"upload_sigma", p.upload_sigma},
                       {"client_jitter", p.client_jitter},
                       {"mean_active_period", p.mean_active_period}};
    j["model"] = {{"hidden", cfg.model.hidden}, {"activation", activation_name(cfg.model.activation)}};
    if (cfg.model.tracked_layers) j["model"]["tracked_layers"] = *cfg.model.tracked_layers;
    j["train"] = {{"local_lr", cfg.train.local_lr},
                  {"server_lr", cfg.train.server_lr},
                  {"local_steps", cfg.train.local_steps},
                  {"batch", cfg.train.batch},
                  {"concurrency", cfg.train.concurrency},
                  {"max_updates", cfg.train.max_updates}};
    j["strategy"] = {{"name", agg::to_string(cfg.strategy.name)}};
    if (cfg.strategy.name == agg::Strategy::fedbuff) j["strategy"]["buffer_size"] = cfg.strategy.buffer_size;
    if (agg::uses_beta(cfg.strategy.name))
        j["strategy"]["beta"] = {{"family", agg::to_string(cfg.strategy.beta.family)},
                                 {"transition", cfg.strategy.beta.transition},
                                 {"value", cfg.strategy.beta.value}};
    if (agg::uses_kd(cfg.strategy.name)) {
        const auto& d = cfg.dfkd;
        j["dfkd"] = {{"kd_buffer", d.buffer_capacity},
                     {"synthetic_capacity", d.synthetic_capacity},
                     {"generator",
                      {{"latent_dim", d.generator.latent_dim},
                       {"hidden", d.generator.hidden},
                       {"output_scale", d.generator.output_scale}}},
                     {"synthesis",
                      {{"steps", d.synthesis.steps},
                       {"lr", d.synthesis.lr},
                       {"w_target", d.synthesis.w_target},
                       {"w_feature", d.synthesis.w_feature},
                       {"w_adv", d.synthesis.w_adv},
                       {"meta_lambda", d.synthesis.meta_lambda},
                       {"batch", d.synthesis.batch}}},
                     {"distill",
                      {{"steps", d.distill.steps},
                       {"lr", d.distill.lr},
                       {"batch", d.distill.batch},
                       {"temperature", d.distill.temperature}}}};
    }
    j["evaluation"] = {{"interval", cfg.evaluation.interval}, {"horizon", cfg.evaluation.horizon}};
    j["output"] = {{"dir", cfg.output_dir.string()}, {"trace", cfg.write_trace}};
    return j;
}

}  // namespace afl::harness
