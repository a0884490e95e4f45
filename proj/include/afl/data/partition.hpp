#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "afl/data/dataset.hpp"
#include "afl/nn/tensor.hpp"
#include "afl/rng.hpp"

namespace afl::data {

struct ClientPartition {
    std::vector<std::vector<std::size_t>> indices;
    // Fixed-size mode draws with replacement, so indices may repeat across
    // and within clients.
    bool with_replacement = false;

    std::size_t num_clients() const { return indices.size(); }
};

// One client's class histogram.
struct LabelHistogram {
    std::vector<std::size_t> counts;
    std::vector<double> proportions;

    std::size_t total() const;
    static LabelHistogram from_counts(std::vector<std::size_t> counts);
};

struct LabelDistribution {
    std::vector<LabelHistogram> clients;
};

struct Partitioned {
    ClientPartition partition;
    LabelDistribution labels;
};

// Disjoint non-IID split: each client draws class proportions from
// Dir(alpha * 1_C) and fills an equal quota sample by sample, always taking
// the class furthest below its target share among classes that still have
// unassigned samples.
Partitioned dirichlet_partition(const Dataset& ds, std::size_t clients, double alpha,
                                std::uint64_t seed);

// Fixed-size mode: every client gets `per_client` samples drawn with
// replacement from class pools according to its Dirichlet proportions.
Partitioned dirichlet_partition_fixed(const Dataset& ds, std::size_t clients, double alpha,
                                      std::size_t per_client, std::uint64_t seed);

// Shuffle-and-deal split into near-equal shards.
Partitioned iid_partition(const Dataset& ds, std::size_t clients, std::uint64_t seed);

LabelDistribution label_distribution(const Dataset& ds, const ClientPartition& part);

// Moves one sample from the largest client into each empty one.
void fill_empty_clients(ClientPartition& part);

struct Batch {
    nn::Tensor inputs;
    std::vector<int> labels;
};

// Uniform with replacement from one client's indices.
Batch sample_batch(const Dataset& ds, const ClientPartition& part, std::size_t client,
                   std::size_t batch, Rng& rng);

}  // namespace afl::data
