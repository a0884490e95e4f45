#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "afl/data/dataset.hpp"
#include "afl/data/partition.hpp"
#include "afl/nn/model.hpp"

namespace afl::dfkd {

struct TeacherEntry {
    nn::ParamVector params;
    nn::FeatureStats stats;
    data::LabelHistogram labels;
    std::uint64_t arrival = 0;
};

// FIFO of the most recent client models, oldest evicted first.
class KdBuffer {
public:
    explicit KdBuffer(std::size_t capacity = 8, std::uint64_t spec_hash = 0);

    // Throws BindingError when the teacher is bound to another spec.
    void push(nn::ParamVector teacher, nn::FeatureStats stats, data::LabelHistogram labels);

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    std::size_t capacity() const { return capacity_; }
    const std::deque<TeacherEntry>& entries() const { return entries_; }
    const TeacherEntry& operator[](std::size_t i) const { return entries_[i]; }

private:
    std::size_t capacity_ = 0;
    std::uint64_t spec_hash_;
    std::uint64_t next_arrival_ = 1;
    std::deque<TeacherEntry> entries_;
};

// w_j = n_{j,c} / sum_k n_{k,c}; uniform when no buffered client holds class c.
std::vector<double> teacher_weights(const KdBuffer& buf, std::size_t cls);

// Bounded store of pseudo-samples (D_KD). Appending beyond capacity drops
// the oldest rows.
class SyntheticDataset {
public:
    SyntheticDataset() = default;
    SyntheticDataset(std::size_t capacity, std::size_t dim);

    void append(const nn::Tensor& samples, std::span<const int> labels);

    std::size_t size() const { return labels_.size(); }
    bool empty() const { return labels_.empty(); }
    std::size_t capacity() const { return capacity_; }
    std::size_t dim() const { return dim_; }
    int label(std::size_t i) const { return labels_[i]; }
    std::span<const double> sample(std::size_t i) const { return rows_[i]; }
    // Total rows ever appended; the oldest retained row is number
    // appended() - size().
    std::uint64_t appended() const { return appended_; }

    nn::Tensor gather(std::span<const std::size_t> indices) const;
    // Snapshot in the fed_data layout, for dumping with save_dataset.
    data::Dataset snapshot(std::size_t num_classes) const;

private:
    std::size_t capacity_ = 0;
    std::size_t dim_ = 0;
    std::uint64_t appended_ = 0;
    std::deque<std::vector<double>> rows_;
    std::deque<int> labels_;
};

}  // namespace afl::dfkd
