#pragma once

#include <cstddef>
#include <cstdint>

#include "afl/data/partition.hpp"
#include "afl/nn/model.hpp"

namespace afl::sim {

struct ClientUpdate {
    std::size_t client = 0;
    nn::ParamVector delta;
    std::uint64_t origin_version = 0;
    std::uint64_t staleness = 0;
    double arrival_time = 0.0;
    const data::LabelHistogram* labels = nullptr;
};

}  // namespace afl::sim
