#include "afl/nn/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "afl/errors.hpp"

namespace afl::nn {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError("logit tensors differ in shape");
}

// log-softmax of one row at temperature T.
void log_softmax_row(std::span<const double> logits, double temperature, std::span<double> out) {
    double mx = logits[0] / temperature;
    for (double v : logits) mx = std::max(mx, v / temperature);
    double s = 0.0;
    for (double v : logits) s += std::exp(v / temperature - mx);
    const double lse = mx + std::log(s);
    for (std::size_t c = 0; c < logits.size(); ++c) out[c] = logits[c] / temperature - lse;
}

}  // namespace

std::vector<double> softmax_row(std::span<const double> logits, double temperature) {
    std::vector<double> out(logits.size());
    double mx = logits[0] / temperature;
    for (double v : logits) mx = std::max(mx, v / temperature);
    double s = 0.0;
    for (std::size_t c = 0; c < logits.size(); ++c) {
        out[c] = std::exp(logits[c] / temperature - mx);
        s += out[c];
    }
    for (double& v : out) v /= s;
    return out;
}

Tensor softmax(const Tensor& logits, double temperature) {
    Tensor out(logits.rows(), logits.cols());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        auto p = softmax_row(logits.row(r), temperature);
        std::copy(p.begin(), p.end(), out.row(r).begin());
    }
    return out;
}

std::size_t argmax(std::span<const double> row) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < row.size(); ++c)
        if (row[c] > row[best]) best = c;
    return best;
}

LossGrad cross_entropy(const Tensor& logits, std::span<const int> labels) {
    const std::size_t n = logits.rows();
    const std::size_t k = logits.cols();
    if (labels.size() != n) throw DimensionError("cross_entropy: label count != batch size");
    LossGrad out{0.0, Tensor(n, k)};
    std::vector<double> logp(k);
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) {
        const int y = labels[r];
        if (y < 0 || static_cast<std::size_t>(y) >= k) throw DimensionError("cross_entropy: label out of range");
        log_softmax_row(logits.row(r), 1.0, logp);
        out.value -= logp[static_cast<std::size_t>(y)];
        auto g = out.dlogits.row(r);
        for (std::size_t c = 0; c < k; ++c) g[c] = std::exp(logp[c]) * inv;
        g[static_cast<std::size_t>(y)] -= inv;
    }
    out.value *= inv;
    return out;
}

double kl_row(std::span<const double> teacher, std::span<const double> student, double temperature) {
    const std::size_t k = teacher.size();
    std::vector<double> lp(k), lq(k);
    log_softmax_row(teacher, temperature, lp);
    log_softmax_row(student, temperature, lq);
    double kl = 0.0;
    for (std::size_t c = 0; c < k; ++c) kl += std::exp(lp[c]) * (lp[c] - lq[c]);
    // Rounding can leave a tiny negative residue at equality.
    return std::max(kl, 0.0);
}

void kl_row_teacher_grad(std::span<const double> teacher, std::span<const double> student,
                         double temperature, std::span<double> out) {
    const std::size_t k = teacher.size();
    std::vector<double> lp(k), lq(k);
    log_softmax_row(teacher, temperature, lp);
    log_softmax_row(student, temperature, lq);
    double kl = 0.0;
    for (std::size_t c = 0; c < k; ++c) kl += std::exp(lp[c]) * (lp[c] - lq[c]);
    for (std::size_t c = 0; c < k; ++c)
        out[c] = std::exp(lp[c]) * ((lp[c] - lq[c]) - kl) / temperature;
}

double kl_divergence(const Tensor& teacher_logits, const Tensor& student_logits, double temperature) {
    require_same_shape(teacher_logits, student_logits);
    if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
    const std::size_t n = teacher_logits.rows();
    if (n == 0) return 0.0;
    double s = 0.0;
    for (std::size_t r = 0; r < n; ++r) s += kl_row(teacher_logits.row(r), student_logits.row(r), temperature);
    return s / static_cast<double>(n);
}

LossGrad kl_student_grad(const Tensor& teacher_logits, const Tensor& student_logits, double temperature) {
    require_same_shape(teacher_logits, student_logits);
    if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
    const std::size_t n = teacher_logits.rows();
    const std::size_t k = teacher_logits.cols();
    LossGrad out{0.0, Tensor(n, k)};
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) {
        auto t = teacher_logits.row(r);
        auto s = student_logits.row(r);
        out.value += kl_row(t, s, temperature);
        const auto p = softmax_row(t, temperature);
        const auto q = softmax_row(s, temperature);
        auto g = out.dlogits.row(r);
        for (std::size_t c = 0; c < k; ++c) g[c] = (q[c] - p[c]) * inv / temperature;
    }
    out.value *= inv;
    return out;
}

LossAndGradient gradient(const ModelSpec& spec, const ParamVector& params, const Tensor& batch,
                         const Loss& loss) {
    ForwardResult fwd = forward(spec, params, batch);
    LossGrad lg = std::visit(
        [&](const auto& l) -> LossGrad {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, HardLabels>) {
                return cross_entropy(fwd.logits, l.labels);
            } else if constexpr (std::is_same_v<L, TeacherLogits>) {
                return kl_student_grad(*l.logits, fwd.logits, l.temperature);
            } else {
                return l(fwd);
            }
        },
        loss);
    if (!std::isfinite(lg.value) || !lg.dlogits.all_finite()) {
        const int layer = first_nonfinite_layer(fwd.trace);
        throw NumericError("non-finite loss (first bad layer " + std::to_string(layer) + ")", layer);
    }
    Gradients g = backward(spec, params, fwd.trace, lg.dlogits);
    return {lg.value, std::move(g.params)};
}

}  // namespace afl::nn
