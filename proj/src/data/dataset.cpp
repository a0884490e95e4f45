#include "afl/data/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include "afl/errors.hpp"

namespace afl::data {

static_assert(std::endian::native == std::endian::little,
              "dataset files are written in host order, which must be little-endian");

void Dataset::validate() const {
    if (inputs.rows() != labels.size()) throw DimensionError("dataset: input rows != label count");
    if (num_classes < 2) throw ConfigError("dataset: need at least two classes");
    if (labels.size() < num_classes) throw ConfigError("dataset: fewer samples than classes");
    std::vector<bool> seen(num_classes, false);
    for (int y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= num_classes) throw DimensionError("dataset: label out of range");
        seen[static_cast<std::size_t>(y)] = true;
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end())
        throw ConfigError("dataset: some class has no samples");
}

Dataset make_blobs(std::uint64_t seed, std::size_t classes, std::size_t dim, std::size_t samples,
                   double spread) {
    if (classes < 2) throw ConfigError("make_blobs: need C >= 2");
    if (dim < 2) throw ConfigError("make_blobs: need d >= 2");
    if (samples < classes) throw ConfigError("make_blobs: need n >= C");
    if (!(spread > 0.0)) throw ConfigError("make_blobs: spread must be positive");

    Rng rng = make_rng(seed, 0xB10B5);
    boost::random::normal_distribution<double> normal(0.0, 1.0);

    nn::Tensor means(classes, dim);
    for (std::size_t c = 0; c < classes; ++c) {
        auto m = means.row(c);
        double norm = 0.0;
        do {
            norm = 0.0;
            for (double& v : m) {
                v = normal(rng);
                norm += v * v;
            }
        } while (norm == 0.0);
        norm = std::sqrt(norm);
        for (double& v : m) v /= norm;
    }

    Dataset ds;
    ds.num_classes = classes;
    ds.inputs = nn::Tensor(samples, dim);
    ds.labels.resize(samples);
    for (std::size_t k = 0; k < samples; ++k) {
        const std::size_t c = k % classes;
        ds.labels[k] = static_cast<int>(c);
        auto x = ds.inputs.row(k);
        auto m = means.row(c);
        for (std::size_t j = 0; j < dim; ++j) x[j] = m[j] + spread * normal(rng);
    }
    return ds;
}

Dataset subset(const Dataset& ds, std::span<const std::size_t> indices) {
    Dataset out;
    out.num_classes = ds.num_classes;
    out.inputs = nn::gather_rows(ds.inputs, indices);
    out.labels.reserve(indices.size());
    for (std::size_t i : indices) out.labels.push_back(ds.labels[i]);
    return out;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, std::size_t test_count, std::uint64_t seed) {
    if (test_count > ds.size()) throw ConfigError("split: test count exceeds dataset size");
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = make_rng(seed, 0x5B117);
    for (std::size_t i = order.size(); i > 1; --i) {
        boost::random::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(order[i - 1], order[pick(rng)]);
    }
    const std::size_t train_count = ds.size() - test_count;
    std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_count));
    std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(train_count), order.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {subset(ds, train), subset(ds, test)};
}

std::vector<std::size_t> class_histogram(const Dataset& ds) {
    std::vector<std::size_t> h(ds.num_classes, 0);
    for (int y : ds.labels) ++h[static_cast<std::size_t>(y)];
    return h;
}

namespace {

constexpr char kMagic[4] = {'A', 'F', 'L', 'D'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw IoError("dataset file truncated");
    return v;
}

}  // namespace

void save_dataset(const std::filesystem::path& path, const Dataset& ds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(kMagic, 4);
    put(out, kVersion);
    put(out, static_cast<std::uint32_t>(ds.num_classes));
    put(out, static_cast<std::uint32_t>(ds.dim()));
    put(out, static_cast<std::uint64_t>(ds.size()));
    out.write(reinterpret_cast<const char*>(ds.inputs.values.data()),
              static_cast<std::streamsize>(ds.inputs.values.size() * sizeof(double)));
    for (int y : ds.labels) put(out, static_cast<std::uint32_t>(y));
    if (!out) throw IoError("write failed for " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) throw IoError(path.string() + ": bad magic");
    if (get<std::uint32_t>(in) != kVersion) throw IoError(path.string() + ": unsupported version");
    Dataset ds;
    ds.num_classes = get<std::uint32_t>(in);
    const std::size_t d = get<std::uint32_t>(in);
    const std::size_t n = get<std::uint64_t>(in);
    ds.inputs = nn::Tensor(n, d);
    in.read(reinterpret_cast<char*>(ds.inputs.values.data()),
            static_cast<std::streamsize>(n * d * sizeof(double)));
    if (!in) throw IoError(path.string() + ": truncated inputs");
    ds.labels.resize(n);
    for (auto& y : ds.labels) y = static_cast<int>(get<std::uint32_t>(in));
    return ds;
}

}  // namespace afl::data
