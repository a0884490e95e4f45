#include "afl/dfkd/distill.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include "afl/errors.hpp"
#include "afl/nn/adam.hpp"
#include "afl/nn/losses.hpp"

namespace afl::dfkd {

void DistillConfig::validate() const {
    if (!(lr >= 0.0)) throw ConfigError("distill lr must be >= 0");
    if (batch == 0) throw ConfigError("distill batch must be positive");
    if (!(temperature > 0.0)) throw ConfigError("distill temperature must be positive");
}

std::vector<std::size_t> sample_for_teacher(const SyntheticDataset& pool, const data::LabelHistogram& labels,
                                            std::size_t batch, Rng& rng) {
    const std::size_t n = pool.size();
    std::vector<double> w(n, 0.0);
    std::size_t eligible = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto y = static_cast<std::size_t>(pool.label(i));
        w[i] = y < labels.proportions.size() ? labels.proportions[y] : 0.0;
        if (w[i] > 0.0) ++eligible;
    }
    if (eligible == 0) throw SamplingExhausted("no synthetic sample carries a label this client holds");

    boost::random::uniform_01<double> u01;
    std::vector<std::size_t> out;
    out.reserve(batch);
    if (eligible >= batch) {
        // Efraimidis-Spirakis: keep the `batch` largest log(u) / w.
        std::vector<std::pair<double, std::size_t>> keys;
        keys.reserve(eligible);
        for (std::size_t i = 0; i < n; ++i) {
            if (w[i] <= 0.0) continue;
            double u = u01(rng);
            while (u == 0.0) u = u01(rng);
            keys.emplace_back(std::log(u) / w[i], i);
        }
        std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(batch), keys.end(),
                          [](const auto& a, const auto& b) {
                              return a.first != b.first ? a.first > b.first : a.second < b.second;
                          });
        for (std::size_t k = 0; k < batch; ++k) out.push_back(keys[k].second);
        return out;
    }
    std::vector<double> cdf(n);
    std::partial_sum(w.begin(), w.end(), cdf.begin());
    const double total = cdf.back();
    for (std::size_t k = 0; k < batch; ++k) {
        const double target = u01(rng) * total;
        auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
        std::size_t i = it == cdf.end() ? n - 1 : static_cast<std::size_t>(it - cdf.begin());
        while (w[i] <= 0.0) --i;  // only reachable through rounding at the top end
        out.push_back(i);
    }
    return out;
}

namespace {

std::vector<std::size_t> sample_uniform(std::size_t n, std::size_t batch, Rng& rng) {
    std::vector<std::size_t> out;
    if (n >= batch) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t k = 0; k < batch; ++k) {
            boost::random::uniform_int_distribution<std::size_t> pick(k, n - 1);
            std::swap(order[k], order[pick(rng)]);
        }
        out.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(batch));
        return out;
    }
    boost::random::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t k = 0; k < batch; ++k) out.push_back(pick(rng));
    return out;
}

}  // namespace

DistillResult distill(const nn::ModelSpec& spec, const nn::ParamVector& student_init, const KdBuffer& buf,
                      const SyntheticDataset& pool, const DistillConfig& cfg, Rng& rng) {
    cfg.validate();
    nn::require_bound_to(student_init, spec);
    if (buf.empty()) throw PreconditionError("distill needs at least one teacher");
    if (pool.empty()) throw PreconditionError("distill needs a non-empty sample pool");

    DistillResult res;
    nn::ParamVector student = student_init;
    nn::AdamState adam(student.size());
    const double inv_teachers = 1.0 / static_cast<double>(buf.size());

    for (std::size_t step = 0; step < cfg.steps; ++step) {
        nn::ParamVector grad(spec);
        double loss = 0.0;
        for (const TeacherEntry& teacher : buf.entries()) {
            std::vector<std::size_t> idx;
            try {
                idx = sample_for_teacher(pool, teacher.labels, cfg.batch, rng);
            } catch (const SamplingExhausted&) {
                idx = sample_uniform(pool.size(), cfg.batch, rng);
                ++res.uniform_fallbacks;
            }
            const nn::Tensor u = pool.gather(idx);
            const nn::Tensor t_logits = nn::forward(spec, teacher.params, u).logits;
            nn::ForwardResult s = nn::forward(spec, student, u);
            nn::LossGrad lg = nn::kl_student_grad(t_logits, s.logits, cfg.temperature);
            if (!std::isfinite(lg.value))
                throw NumericError("non-finite distillation loss", nn::first_nonfinite_layer(s.trace));
            loss += lg.value;
            grad.axpy(1.0, nn::backward(spec, student, s.trace, lg.dlogits).params);
        }
        grad.scale(inv_teachers);
        res.loss_trace.push_back(loss * inv_teachers);
        nn::adam_step(student.values(), grad.values(), adam, cfg.lr);
    }
    res.delta = nn::difference(student, student_init);
    return res;
}

}  // namespace afl::dfkd
