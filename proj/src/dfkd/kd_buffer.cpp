#include "afl/dfkd/kd_buffer.hpp"

#include <algorithm>
#include <string>

#include "afl/errors.hpp"

namespace afl::dfkd {

KdBuffer::KdBuffer(std::size_t capacity, std::uint64_t spec_hash)
    : capacity_(capacity), spec_hash_(spec_hash) {
    if (capacity_ == 0) throw ConfigError("KD buffer capacity must be positive");
}

void KdBuffer::push(nn::ParamVector teacher, nn::FeatureStats stats, data::LabelHistogram labels) {
    if (spec_hash_ == 0) spec_hash_ = teacher.spec_hash();
    if (teacher.spec_hash() != spec_hash_) throw BindingError("teacher bound to a different model spec");
    entries_.push_back({std::move(teacher), std::move(stats), std::move(labels), next_arrival_++});
    while (entries_.size() > capacity_) entries_.pop_front();
}

std::vector<double> teacher_weights(const KdBuffer& buf, std::size_t cls) {
    if (buf.empty()) throw PreconditionError("teacher_weights on an empty KD buffer");
    const std::size_t n = buf.size();
    std::vector<double> w(n, 0.0);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const auto& counts = buf[j].labels.counts;
        const double c = cls < counts.size() ? static_cast<double>(counts[cls]) : 0.0;
        w[j] = c;
        total += c;
    }
    if (total == 0.0) {
        std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(n));
        return w;
    }
    for (double& v : w) v /= total;
    return w;
}

SyntheticDataset::SyntheticDataset(std::size_t capacity, std::size_t dim) : capacity_(capacity), dim_(dim) {
    if (capacity_ == 0) throw ConfigError("synthetic dataset capacity must be positive");
}

void SyntheticDataset::append(const nn::Tensor& samples, std::span<const int> labels) {
    if (samples.rows() != labels.size()) throw DimensionError("synthetic append: rows != labels");
    if (samples.rows() > 0 && samples.cols() != dim_) throw DimensionError("synthetic append: wrong sample dim");
    for (std::size_t r = 0; r < samples.rows(); ++r) {
        auto row = samples.row(r);
        rows_.emplace_back(row.begin(), row.end());
        labels_.push_back(labels[r]);
        ++appended_;
        if (rows_.size() > capacity_) {
            rows_.pop_front();
            labels_.pop_front();
        }
    }
}

nn::Tensor SyntheticDataset::gather(std::span<const std::size_t> indices) const {
    nn::Tensor out(indices.size(), dim_);
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const auto& row = rows_.at(indices[k]);
        std::copy(row.begin(), row.end(), out.row(k).begin());
    }
    return out;
}

data::Dataset SyntheticDataset::snapshot(std::size_t num_classes) const {
    data::Dataset ds;
    ds.num_classes = num_classes;
    ds.inputs = nn::Tensor(size(), dim_);
    ds.labels.assign(labels_.begin(), labels_.end());
    for (std::size_t r = 0; r < size(); ++r) std::copy(rows_[r].begin(), rows_[r].end(), ds.inputs.row(r).begin());
    return ds;
}

}  // namespace afl::dfkd
