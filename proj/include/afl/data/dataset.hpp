#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "afl/nn/tensor.hpp"
#include "afl/rng.hpp"

namespace afl::data {

struct Dataset {
    nn::Tensor inputs;  // [n, d]
    std::vector<int> labels;
    std::size_t num_classes = 0;

    std::size_t size() const { return labels.size(); }
    std::size_t dim() const { return inputs.cols(); }

    // Shapes agree, labels in range, every class present, n >= C.
    void validate() const;
};

// Isotropic Gaussian clusters. Class means are seeded random directions on
// the unit sphere; sample k has label k mod C.
Dataset make_blobs(std::uint64_t seed, std::size_t classes, std::size_t dim, std::size_t samples,
                   double spread);

Dataset subset(const Dataset& ds, std::span<const std::size_t> indices);

// Shuffled split; the second dataset receives `test_count` samples.
std::pair<Dataset, Dataset> split(const Dataset& ds, std::size_t test_count, std::uint64_t seed);

std::vector<std::size_t> class_histogram(const Dataset& ds);

// Flat binary format: "AFLD", u32 version, u32 C, u32 d, u64 n, n*d f64, n u32.
// Little-endian.
void save_dataset(const std::filesystem::path& path, const Dataset& ds);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace afl::data
