#include "afl/data/partition.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

#include <boost/random/gamma_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include "afl/errors.hpp"

namespace afl::data {

std::size_t LabelHistogram::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

LabelHistogram LabelHistogram::from_counts(std::vector<std::size_t> counts) {
    LabelHistogram h;
    h.counts = std::move(counts);
    h.proportions.assign(h.counts.size(), 0.0);
    const std::size_t n = h.total();
    if (n > 0)
        for (std::size_t c = 0; c < h.counts.size(); ++c)
            h.proportions[c] = static_cast<double>(h.counts[c]) / static_cast<double>(n);
    return h;
}

LabelDistribution label_distribution(const Dataset& ds, const ClientPartition& part) {
    LabelDistribution out;
    out.clients.reserve(part.num_clients());
    for (const auto& idx : part.indices) {
        std::vector<std::size_t> counts(ds.num_classes, 0);
        for (std::size_t i : idx) ++counts[static_cast<std::size_t>(ds.labels[i])];
        out.clients.push_back(LabelHistogram::from_counts(std::move(counts)));
    }
    return out;
}

void fill_empty_clients(ClientPartition& part) {
    for (auto& client : part.indices) {
        if (!client.empty()) continue;
        auto largest = std::max_element(part.indices.begin(), part.indices.end(),
                                        [](const auto& a, const auto& b) { return a.size() < b.size(); });
        if (largest->size() < 2) return;  // nothing left to move
        client.push_back(largest->back());
        largest->pop_back();
    }
}

namespace {

std::vector<double> draw_dirichlet(std::size_t k, double alpha, Rng& rng) {
    boost::random::gamma_distribution<double> gamma(alpha, 1.0);
    std::vector<double> p(k);
    double s = 0.0;
    for (double& v : p) {
        v = gamma(rng);
        s += v;
    }
    if (s == 0.0) {
        // Tiny alpha can underflow every draw; degenerate to a single class.
        boost::random::uniform_int_distribution<std::size_t> pick(0, k - 1);
        std::fill(p.begin(), p.end(), 0.0);
        p[pick(rng)] = 1.0;
        return p;
    }
    for (double& v : p) v /= s;
    return p;
}

// Draws a class from `p` restricted to classes where `available` is true.
std::size_t draw_class(const std::vector<double>& p, const std::vector<bool>& available, Rng& rng) {
    double mass = 0.0;
    for (std::size_t c = 0; c < p.size(); ++c)
        if (available[c]) mass += p[c];
    boost::random::uniform_01<double> u01;
    if (mass <= 0.0) {
        // Client prior has no mass left on any available class: fall back to
        // uniform over what remains.
        std::vector<std::size_t> avail;
        for (std::size_t c = 0; c < p.size(); ++c)
            if (available[c]) avail.push_back(c);
        boost::random::uniform_int_distribution<std::size_t> pick(0, avail.size() - 1);
        return avail[pick(rng)];
    }
    const double target = u01(rng) * mass;
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t c = 0; c < p.size(); ++c) {
        if (!available[c]) continue;
        acc += p[c];
        last = c;
        if (target < acc) return c;
    }
    return last;
}

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        boost::random::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(v[i - 1], v[pick(rng)]);
    }
}

std::vector<std::vector<std::size_t>> class_pools(const Dataset& ds) {
    std::vector<std::vector<std::size_t>> pools(ds.num_classes);
    for (std::size_t i = 0; i < ds.size(); ++i) pools[static_cast<std::size_t>(ds.labels[i])].push_back(i);
    return pools;
}

void check_args(const Dataset& ds, std::size_t clients, double alpha) {
    if (clients == 0) throw ConfigError("partition: need at least one client");
    if (!(alpha > 0.0)) throw ConfigError("partition: alpha must be positive");
    if (ds.size() == 0) throw ConfigError("partition: empty dataset");
}

}  // namespace

Partitioned dirichlet_partition(const Dataset& ds, std::size_t clients, double alpha, std::uint64_t seed) {
    check_args(ds, clients, alpha);
    Rng rng = make_rng(seed, 0xD1C1);
    const std::size_t k = ds.num_classes;

    std::vector<std::vector<double>> priors(clients);
    for (auto& p : priors) p = draw_dirichlet(k, alpha, rng);

    auto pools = class_pools(ds);
    for (auto& pool : pools) shuffle(pool, rng);

    const std::size_t n = ds.size();
    std::vector<std::size_t> quota(clients, n / clients);
    for (std::size_t j = 0; j < n % clients; ++j) ++quota[j];

    std::vector<bool> available(k);
    for (std::size_t c = 0; c < k; ++c) available[c] = !pools[c].empty();

    ClientPartition part;
    part.indices.resize(clients);
    std::vector<std::vector<std::size_t>> counts(clients, std::vector<std::size_t>(k, 0));
    std::vector<std::size_t> open;
    for (std::size_t j = 0; j < clients; ++j)
        if (quota[j] > 0) open.push_back(j);

    for (std::size_t assigned = 0; assigned < n; ++assigned) {
        boost::random::uniform_int_distribution<std::size_t> pick(0, open.size() - 1);
        const std::size_t slot = pick(rng);
        const std::size_t j = open[slot];
        // Largest-deficit class: counts track prior * quota without
        // multinomial noise; the randomness comes from the Dirichlet draw.
        const double next = static_cast<double>(part.indices[j].size() + 1);
        std::size_t c = k;
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t cc = 0; cc < k; ++cc) {
            if (!available[cc]) continue;
            const double deficit = priors[j][cc] * next - static_cast<double>(counts[j][cc]);
            if (deficit > best) best = deficit, c = cc;
        }
        ++counts[j][c];
        part.indices[j].push_back(pools[c].back());
        pools[c].pop_back();
        if (pools[c].empty()) available[c] = false;
        if (--quota[j] == 0) {
            open[slot] = open.back();
            open.pop_back();
        }
    }
    for (auto& idx : part.indices) std::sort(idx.begin(), idx.end());
    fill_empty_clients(part);
    return {part, label_distribution(ds, part)};
}

Partitioned dirichlet_partition_fixed(const Dataset& ds, std::size_t clients, double alpha,
                                      std::size_t per_client, std::uint64_t seed) {
    check_args(ds, clients, alpha);
    if (per_client == 0) throw ConfigError("partition: per-client sample count must be positive");
    Rng rng = make_rng(seed, 0xD1C2);
    const std::size_t k = ds.num_classes;
    const auto pools = class_pools(ds);
    std::vector<bool> available(k);
    for (std::size_t c = 0; c < k; ++c) available[c] = !pools[c].empty();

    ClientPartition part;
    part.with_replacement = true;
    part.indices.resize(clients);
    for (std::size_t j = 0; j < clients; ++j) {
        const auto prior = draw_dirichlet(k, alpha, rng);
        auto& idx = part.indices[j];
        idx.reserve(per_client);
        for (std::size_t s = 0; s < per_client; ++s) {
            const std::size_t c = draw_class(prior, available, rng);
            boost::random::uniform_int_distribution<std::size_t> pick(0, pools[c].size() - 1);
            idx.push_back(pools[c][pick(rng)]);
        }
    }
    return {part, label_distribution(ds, part)};
}

Partitioned iid_partition(const Dataset& ds, std::size_t clients, std::uint64_t seed) {
    if (clients == 0) throw ConfigError("partition: need at least one client");
    Rng rng = make_rng(seed, 0xD1C3);
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(order, rng);
    ClientPartition part;
    part.indices.resize(clients);
    for (std::size_t i = 0; i < order.size(); ++i) part.indices[i % clients].push_back(order[i]);
    for (auto& idx : part.indices) std::sort(idx.begin(), idx.end());
    fill_empty_clients(part);
    return {part, label_distribution(ds, part)};
}

Batch sample_batch(const Dataset& ds, const ClientPartition& part, std::size_t client,
                   std::size_t batch, Rng& rng) {
    if (client >= part.num_clients()) throw LookupError("unknown client id " + std::to_string(client));
    const auto& idx = part.indices[client];
    if (idx.empty()) throw PreconditionError("client " + std::to_string(client) + " has no samples");
    boost::random::uniform_int_distribution<std::size_t> pick(0, idx.size() - 1);
    std::vector<std::size_t> rows(batch);
    for (auto& r : rows) r = idx[pick(rng)];
    Batch b;
    b.inputs = nn::gather_rows(ds.inputs, rows);
    b.labels.reserve(batch);
    for (std::size_t r : rows) b.labels.push_back(ds.labels[r]);
    return b;
}

}  // namespace afl::data
