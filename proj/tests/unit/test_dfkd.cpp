#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "afl/data/partition.hpp"
#include "afl/dfkd/distill.hpp"
#include "afl/dfkd/kd_buffer.hpp"
#include "afl/dfkd/kd_revive.hpp"
#include "afl/dfkd/synthesis.hpp"
#include "afl/errors.hpp"
#include "afl/nn/losses.hpp"
#include "support.hpp"

using namespace afl;
using namespace afl::dfkd;

namespace {

data::LabelHistogram hist(std::vector<std::size_t> counts) { return data::LabelHistogram::from_counts(std::move(counts)); }

nn::ParamVector tagged(const nn::ModelSpec& spec, double tag) {
    nn::ParamVector p(spec);
    p[0] = tag;
    return p;
}

// Two-class model with one tracked identity layer, so every quantity in the
// synthesis loss can be written out by hand.
nn::ModelSpec tiny_spec() {
    nn::ModelSpec s;
    s.input_dim = 2;
    s.layers = {{2, nn::Activation::identity, true}, {2, nn::Activation::identity, false}};
    return s;
}

struct Mat2 {
    double a[2][2];
    double b[2];
    std::array<double, 2> apply(const std::array<double, 2>& x) const {
        return {a[0][0] * x[0] + a[0][1] * x[1] + b[0], a[1][0] * x[0] + a[1][1] * x[1] + b[1]};
    }
};

nn::ParamVector pack(const nn::ModelSpec& s, const Mat2& l1, const Mat2& l2) {
    return nn::ParamVector(s.hash(), {l1.a[0][0], l1.a[0][1], l1.a[1][0], l1.a[1][1], l1.b[0], l1.b[1], l2.a[0][0],
                                      l2.a[0][1], l2.a[1][0], l2.a[1][1], l2.b[0], l2.b[1]});
}

double log_softmax_at(const std::array<double, 2>& z, int k) {
    const double mx = std::max(z[0], z[1]);
    return z[k] - mx - std::log(std::exp(z[0] - mx) + std::exp(z[1] - mx));
}

double kl2(const std::array<double, 2>& t, const std::array<double, 2>& s) {
    double r = 0.0;
    for (int k = 0; k < 2; ++k) r += std::exp(log_softmax_at(t, k)) * (log_softmax_at(t, k) - log_softmax_at(s, k));
    return r;
}

KdReviveConfig small_kd_config() {
    KdReviveConfig c;
    c.synthesis.batch = 1;
    c.synthesis.steps = 2;
    c.distill.steps = 2;
    c.distill.batch = 4;
    c.synthetic_capacity = 512;
    return c;
}

}  // namespace

TEST_CASE("KD buffer is a FIFO of fixed capacity") {
    nn::ModelSpec spec = nn::ModelSpec::mlp(3, {4}, 2);
    KdBuffer buf(8);
    buf.push(tagged(spec, 1), {}, hist({1, 1}));
    CHECK(buf.size() == 1);
    for (int k = 2; k <= 9; ++k) buf.push(tagged(spec, k), {}, hist({1, 1}));
    CHECK(buf.size() == 8);
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(buf[i].params[0] == static_cast<double>(i + 2));
        CHECK(buf[i].arrival == i + 2);
    }

    KdBuffer dup(8);
    auto t = tagged(spec, 5);
    dup.push(t, {}, hist({1, 0}));
    dup.push(t, {}, hist({1, 0}));
    CHECK(dup.size() == 2);
    CHECK_THROWS_AS(dup.push(tagged(nn::ModelSpec::mlp(3, {5}, 2), 1), {}, hist({1, 0})), BindingError);
}

TEST_CASE("teacher weights") {
    nn::ModelSpec spec = nn::ModelSpec::mlp(3, {4}, 3);
    KdBuffer one;
    one.push(tagged(spec, 0), {}, hist({0, 4, 0}));
    for (std::size_t c = 0; c < 3; ++c) CHECK(teacher_weights(one, c) == std::vector<double>{1.0});

    KdBuffer two;
    two.push(tagged(spec, 0), {}, hist({30, 0, 0}));
    two.push(tagged(spec, 1), {}, hist({10, 5, 0}));
    auto w = teacher_weights(two, 0);
    CHECK(w[0] == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(w[1] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(teacher_weights(two, 2) == std::vector<double>{0.5, 0.5});
    for (std::size_t c = 0; c < 3; ++c) {
        auto ww = teacher_weights(two, c);
        CHECK(std::abs(std::accumulate(ww.begin(), ww.end(), 0.0) - 1.0) <= 1e-12);
    }
}

TEST_CASE("synthetic dataset evicts oldest first") {
    SyntheticDataset pool(5, 2);
    for (int k = 0; k < 4; ++k) {
        nn::Tensor x({2, 2}, {double(2 * k), 0.0, double(2 * k + 1), 0.0});
        std::vector<int> y{k % 3, (k + 1) % 3};
        pool.append(x, y);
        CHECK(pool.size() <= 5);
    }
    CHECK(pool.size() == 5);
    CHECK(pool.appended() == 8);
    for (std::size_t i = 0; i < 5; ++i) CHECK(pool.sample(i)[0] == static_cast<double>(3 + i));
    CHECK_THROWS_AS(pool.append(nn::Tensor(1, 3), std::vector<int>{0}), DimensionError);
}

TEST_CASE("synthesis target labels are balanced") {
    Rng rng = make_rng(1);
    for (std::size_t m : {1u, 7u, 64u, 65u})
        for (std::size_t c : {2u, 10u}) {
            auto y = assign_targets(m, c, rng);
            std::vector<int> counts(c, 0);
            for (int v : y) ++counts[v];
            CHECK(*std::max_element(counts.begin(), counts.end()) - *std::min_element(counts.begin(), counts.end()) <= 1);
        }
}

TEST_CASE("synthesis loss: confident correct teacher drives the target loss to zero") {
    nn::ModelSpec spec = tiny_spec();
    Mat2 id{{{1, 0}, {0, 1}}, {0, 0}};
    Mat2 out{{{0, 0}, {0, 0}}, {60, 0}};
    KdBuffer buf;
    buf.push(pack(spec, id, out), {}, hist({3, 3}));
    SynthesisConfig cfg;
    cfg.w_feature = 0.0;
    cfg.w_adv = 0.0;
    Rng rng = make_rng(2);
    nn::Tensor x = test::random_tensor(4, 2, rng);
    std::vector<int> y(4, 0);
    SynthLossEval ev = synth_loss(x, y, buf, spec, nn::ParamVector(spec), cfg);
    CHECK(ev.loss.total < 1e-20);
    CHECK(ev.loss.total >= 0.0);
}

TEST_CASE("synthesis loss: adversarial term vanishes when student equals teacher") {
    nn::ModelSpec spec = nn::ModelSpec::mlp(3, {5}, 4, nn::Activation::tanh);
    Rng rng = make_rng(3);
    auto teacher = test::random_params(spec, rng);
    KdBuffer buf;
    buf.push(teacher, {}, hist({2, 2, 2, 2}));
    SynthesisConfig cfg;
    cfg.w_target = 0.0;
    cfg.w_feature = 0.0;
    nn::Tensor x = test::random_tensor(6, 3, rng);
    std::vector<int> y{0, 1, 2, 3, 0, 1};
    SynthLossEval ev = synth_loss(x, y, buf, spec, teacher, cfg);
    CHECK(std::abs(ev.loss.adv) < 1e-15);
    CHECK(std::abs(ev.loss.total) < 1e-15);
}

TEST_CASE("synthesis loss: two teachers on a hand-computed 2-class batch") {
    nn::ModelSpec spec = tiny_spec();
    Mat2 a1{{{1.0, -0.5}, {0.25, 2.0}}, {0.1, -0.3}};
    Mat2 a2{{{0.5, 1.0}, {-1.0, 0.75}}, {0.0, 0.2}};
    Mat2 b1{{{-0.5, 0.3}, {1.2, 0.1}}, {0.2, 0.0}};
    Mat2 b2{{{0.9, -0.2}, {0.4, 0.6}}, {-0.1, 0.3}};
    Mat2 s1{{{0.3, 0.3}, {-0.2, 1.0}}, {0.0, 0.0}};
    Mat2 s2{{{1.0, 0.0}, {0.0, -1.0}}, {0.05, 0.0}};
    const Mat2 layer1[2] = {a1, b1};
    const Mat2 layer2[2] = {a2, b2};

    nn::FeatureStats st[2];
    st[0].updates = 3;
    st[0].layers = {{0, {0.2, -0.1}, {0.5, 1.5}}};
    st[1].updates = 7;
    st[1].layers = {{0, {-0.3, 0.4}, {2.0, 0.25}}};
    const std::size_t counts[2][2] = {{30, 5}, {10, 15}};

    KdBuffer buf;
    for (int j = 0; j < 2; ++j)
        buf.push(pack(spec, layer1[j], layer2[j]), st[j], hist({counts[j][0], counts[j][1]}));
    const auto student = pack(spec, s1, s2);

    const std::array<double, 2> xs[2] = {{0.7, -1.1}, {-0.4, 0.9}};
    const int ys[2] = {0, 1};
    nn::Tensor x({2, 2}, {xs[0][0], xs[0][1], xs[1][0], xs[1][1]});
    std::vector<int> y{ys[0], ys[1]};

    SynthesisConfig cfg;
    cfg.w_target = 1.0;
    cfg.w_feature = 0.3;
    cfg.w_adv = 0.7;

    double target = 0.0, feature = 0.0, adv = 0.0;
    for (int j = 0; j < 2; ++j) {
        std::array<double, 2> h[2], t[2];
        double omega = 0.0;
        for (int i = 0; i < 2; ++i) {
            h[i] = layer1[j].apply(xs[i]);
            t[i] = layer2[j].apply(h[i]);
            const int c = ys[i];
            const double w = static_cast<double>(counts[j][c]) / static_cast<double>(counts[0][c] + counts[1][c]);
            omega += w / 2.0;
            target += w / 2.0 * -log_softmax_at(t[i], c);
            const auto s = s2.apply(s1.apply(xs[i]));
            const int ta = t[i][1] > t[i][0] ? 1 : 0;
            const int sa = s[1] > s[0] ? 1 : 0;
            if (ta == sa) adv -= w / 2.0 * kl2(t[i], s);
        }
        double f = 0.0;
        for (int u = 0; u < 2; ++u) {
            const double mu = (h[0][u] + h[1][u]) / 2.0;
            const double var = ((h[0][u] - mu) * (h[0][u] - mu) + (h[1][u] - mu) * (h[1][u] - mu)) / 2.0;
            f += std::pow(mu - st[j].layers[0].mean[u], 2) + std::pow(var - st[j].layers[0].var[u], 2);
        }
        feature += omega * f;
    }
    const double total = 1.0 * target + 0.3 * feature + 0.7 * adv;

    SynthLossEval ev = synth_loss(x, y, buf, spec, student, cfg);
    CHECK(ev.loss.target == doctest::Approx(target).epsilon(1e-13));
    CHECK(ev.loss.feature == doctest::Approx(feature).epsilon(1e-13));
    CHECK(ev.loss.adv == doctest::Approx(adv).epsilon(1e-13));
    CHECK(ev.loss.total == doctest::Approx(total).epsilon(1e-13));
    CHECK(adv < 0.0);  // at least one agreeing sample in this setup
}

TEST_CASE("synthesis loss input gradient matches finite differences") {
    nn::ModelSpec spec = nn::ModelSpec::mlp(3, {6, 4}, 3, nn::Activation::tanh);
    Rng rng = make_rng(5);
    KdBuffer buf;
    for (int j = 0; j < 3; ++j) {
        auto p = test::random_params(spec, rng);
        nn::FeatureStats st;
        nn::forward_tracked(spec, p, test::random_tensor(16, 3, rng), st);
        buf.push(p, st, hist({std::size_t(j + 1), 4, std::size_t(2 * j)}));
    }
    auto student = test::random_params(spec, rng);
    SynthesisConfig cfg;
    cfg.w_feature = 0.5;
    cfg.w_adv = 0.4;
    nn::Tensor x = test::random_tensor(5, 3, rng);
    std::vector<int> y{0, 1, 2, 0, 1};
    SynthLossEval ev = synth_loss(x, y, buf, spec, student, cfg);
    auto rep = test::finite_difference_check(x.values, ev.dinput.values, [&](const std::vector<double>& v) {
        return synth_loss(nn::Tensor({5, 3}, v), y, buf, spec, student, cfg, false).loss.total;
    });
    CHECK(rep.pass_rate() >= 0.99);
}

TEST_CASE("adversarial loss is never positive") {
    nn::ModelSpec spec = nn::ModelSpec::mlp(4, {5}, 3);
    Rng rng = make_rng(6);
    SynthesisConfig cfg;
    for (int trial = 0; trial < 50; ++trial) {
        KdBuffer buf;
        for (int j = 0; j < 3; ++j) buf.push(test::random_params(spec, rng, 1.0), {}, hist({1, 2, 3}));
        auto student = test::random_params(spec, rng, 1.0);
        std::vector<int> y{0, 1, 2, 2};
        auto ev = synth_loss(test::random_tensor(4, 4, rng), y, buf, spec, student, cfg, false);
        CHECK(ev.loss.adv <= 0.0);
    }
    KdBuffer empty;
    CHECK_THROWS_AS(synth_loss(nn::Tensor(1, 4), std::vector<int>{0}, empty, spec, nn::ParamVector(spec), cfg),
                    PreconditionError);
}

TEST_CASE("synthesize") {
    nn::ModelSpec spec = nn::ModelSpec::mlp(4, {6}, 3);
    Rng rng = make_rng(7);
    KdBuffer buf;
    for (int j = 0; j < 2; ++j) {
        auto p = test::random_params(spec, rng);
        nn::FeatureStats st;
        nn::forward_tracked(spec, p, test::random_tensor(8, 4, rng), st);
        buf.push(p, st, hist({3, 1, 2}));
    }
    auto student = test::random_params(spec, rng);
    Generator gen = make_generator({}, 4, rng);

    SUBCASE("no steps returns the raw generator output") {
        SynthesisConfig cfg;
        cfg.steps = 0;
        cfg.batch = 5;
        Rng r1 = make_rng(9);
        auto res = synthesize(gen, buf, spec, student, cfg, r1);
        CHECK(res.adapted.bitwise_equal(gen.params));
        CHECK(res.loss_trace.size() == 1);
        CHECK(res.best_step == 0);
        // Reproduce z from the same stream.
        Rng r2 = make_rng(9);
        assign_targets(5, 3, r2);
        boost::random::normal_distribution<double> normal(0.0, 1.0);
        nn::Tensor z(5, 16);
        for (auto& v : z.values) v = normal(r2);
        CHECK(generate(gen, gen.params, z).values == res.samples.values);
    }
    SUBCASE("zero learning rate keeps step 0 and phi") {
        SynthesisConfig cfg;
        cfg.lr = 0.0;
        Rng r = make_rng(10);
        auto res = synthesize(gen, buf, spec, student, cfg, r);
        CHECK(res.best_step == 0);
        CHECK(res.adapted.bitwise_equal(gen.params));
    }
    SUBCASE("selected step has the lowest recorded loss") {
        for (std::uint64_t s = 0; s < 10; ++s) {
            SynthesisConfig cfg;
            cfg.lr = 0.05;
            Rng r = make_rng(s);
            auto res = synthesize(gen, buf, spec, student, cfg, r);
            REQUIRE(res.loss_trace.size() == 3);
            for (double l : res.loss_trace) CHECK(res.loss_trace[res.best_step] <= l);
            CHECK(res.loss_trace[res.best_step] <= res.loss_trace[0]);
            CHECK(res.samples.rows() == cfg.batch);
            CHECK(res.labels.size() == cfg.batch);
        }
    }
}

TEST_CASE("meta update") {
    Rng rng = make_rng(8);
    Generator gen = make_generator({}, 4, rng);
    const auto phi = gen.params;
    auto adapted = test::random_params(gen.spec, rng);
    Generator g1 = gen;
    meta_update(g1, adapted, 1.0);
    CHECK(g1.params.bitwise_equal(phi));
    Generator g0 = gen;
    meta_update(g0, adapted, 0.0);
    CHECK(g0.params.bitwise_equal(adapted));
    Generator gz = gen;
    gz.params = nn::ParamVector(gen.spec);
    meta_update(gz, adapted, 0.5);
    for (std::size_t i = 0; i < adapted.size(); ++i) CHECK(gz.params[i] == 0.5 * adapted[i]);
    CHECK_THROWS_AS(meta_update(gz, adapted, 1.5), ConfigError);
}

TEST_CASE("label-proportional sampling") {
    SyntheticDataset pool(100, 2);
    std::vector<int> labels;
    for (int i = 0; i < 60; ++i) labels.push_back(i % 3);
    pool.append(nn::Tensor(60, 2), labels);
    Rng rng = make_rng(11);

    auto only_one = hist({0, 5, 0});
    auto idx = sample_for_teacher(pool, only_one, 16, rng);
    CHECK(idx.size() == 16);
    CHECK(std::set<std::size_t>(idx.begin(), idx.end()).size() == 16);  // without replacement
    for (auto i : idx) CHECK(pool.label(i) == 1);

    auto big = sample_for_teacher(pool, only_one, 50, rng);  // 20 eligible < 50
    CHECK(big.size() == 50);
    for (auto i : big) CHECK(pool.label(i) == 1);

    std::map<int, int> seen;
    auto skew = hist({9, 1, 0});
    for (int k = 0; k < 400; ++k)
        for (auto i : sample_for_teacher(pool, skew, 4, rng)) ++seen[pool.label(i)];
    CHECK(seen[2] == 0);
    CHECK(seen[0] > 3 * seen[1]);

    CHECK_THROWS_AS(sample_for_teacher(pool, hist({0, 0, 0, 4}), 4, rng), SamplingExhausted);
}

TEST_CASE("distill") {
    nn::ModelSpec spec = nn::ModelSpec::mlp(4, {8}, 3, nn::Activation::tanh);
    Rng rng = make_rng(12);
    SyntheticDataset pool(64, 4);
    pool.append(test::random_tensor(64, 4, rng), assign_targets(64, 3, rng));
    auto student = test::random_params(spec, rng);

    SUBCASE("no steps, no change") {
        KdBuffer buf;
        buf.push(test::random_params(spec, rng), {}, hist({1, 1, 1}));
        DistillConfig cfg;
        cfg.steps = 0;
        auto r = distill(spec, student, buf, pool, cfg, rng);
        for (double v : r.delta.values()) CHECK(v == 0.0);
    }
    SUBCASE("teacher equal to student is a fixed point") {
        KdBuffer buf;
        buf.push(student, {}, hist({1, 1, 1}));
        auto r = distill(spec, student, buf, pool, DistillConfig{}, rng);
        CHECK(r.delta.norm() < 1e-8);
        for (double l : r.loss_trace) CHECK(std::abs(l) < 1e-12);
    }
    SUBCASE("orthogonal labels fall back to uniform sampling") {
        KdBuffer buf;
        buf.push(test::random_params(spec, rng), {}, hist({0, 0, 0, 5}));
        DistillConfig cfg;
        cfg.steps = 3;
        auto r = distill(spec, student, buf, pool, cfg, rng);
        CHECK(r.uniform_fallbacks == 3);
        CHECK(r.delta.all_finite());
    }
    SUBCASE("mean KL on a frozen batch decreases") {
        KdBuffer buf;
        auto teacher = test::random_params(spec, rng);
        buf.push(teacher, {}, hist({1, 1, 1}));
        SyntheticDataset frozen(32, 4);
        frozen.append(test::random_tensor(32, 4, rng), assign_targets(32, 3, rng));
        std::vector<std::size_t> all(32);
        std::iota(all.begin(), all.end(), std::size_t{0});
        const nn::Tensor u = frozen.gather(all);
        const nn::Tensor t = nn::forward(spec, teacher, u).logits;
        const double before = nn::kl_divergence(t, nn::forward(spec, student, u).logits, 1.0);
        auto r = distill(spec, student, buf, frozen, DistillConfig{}, rng);
        auto after_params = student;
        after_params.axpy(1.0, r.delta);
        const double after = nn::kl_divergence(t, nn::forward(spec, after_params, u).logits, 1.0);
        CHECK(after < before);
    }
}

TEST_CASE("kd_revive bookkeeping over 12 arrivals") {
    nn::ModelSpec spec = nn::ModelSpec::mlp(4, {6}, 3);
    KdReviveConfig cfg = small_kd_config();
    cfg.synthesis.meta_lambda = 1.0;
    KdReviveState st = make_kd_state(spec, 3, cfg, 5);
    st.log_warnings = false;
    const auto phi0 = st.generator.params;
    Rng rng = make_rng(13);
    auto x = test::random_params(spec, rng);
    for (int a = 1; a <= 12; ++a) {
        auto teacher = tagged(spec, a);
        for (std::size_t i = 1; i < teacher.size(); ++i) teacher[i] = x[i] + 0.01 * a;
        nn::FeatureStats stats;
        nn::forward_tracked(spec, teacher, test::random_tensor(8, 4, rng), stats);
        auto d = kd_revive(st, teacher, stats, hist({2, 1, std::size_t(a % 2)}), x);
        CHECK(d.all_finite());
        CHECK(d.size() == spec.param_count());
        CHECK(st.pool.size() == std::min<std::size_t>(a, cfg.synthetic_capacity));
        CHECK(st.generator.params.bitwise_equal(phi0));
    }
    CHECK(st.warnings == 0);
    REQUIRE(st.buffer.size() == 8);
    for (std::size_t i = 0; i < 8; ++i) CHECK(st.buffer[i].params[0] == static_cast<double>(i + 5));
}

TEST_CASE("kd_revive degrades to a zero update on failure") {
    nn::ModelSpec spec = nn::ModelSpec::mlp(4, {6}, 3);
    KdReviveState st = make_kd_state(spec, 3, small_kd_config(), 6);
    st.log_warnings = false;
    nn::ParamVector wrong(nn::ModelSpec::mlp(4, {7}, 3));
    Rng rng = make_rng(14);
    auto x = test::random_params(spec, rng);
    auto d = kd_revive(st, wrong, {}, hist({1, 1, 1}), x);
    CHECK(st.warnings == 1);
    CHECK_FALSE(st.last_warning.empty());
    CHECK(d.spec_hash() == spec.hash());
    for (double v : d.values()) CHECK(v == 0.0);
}

TEST_CASE("data-driven mode distills from the fixed public set") {
    nn::ModelSpec spec = nn::ModelSpec::mlp(4, {6}, 3);
    data::Dataset pub = data::make_blobs(3, 3, 4, 30, 0.5);
    KdReviveState st = make_kd_state_data_driven(spec, pub, small_kd_config(), 7);
    Rng rng = make_rng(15);
    auto x = test::random_params(spec, rng);
    const auto phi = st.generator.params;
    auto d = kd_revive(st, test::random_params(spec, rng), {}, hist({1, 1, 1}), x);
    CHECK(d.norm() > 0.0);
    CHECK(st.pool.size() == 30);
    CHECK(st.generator.params.bitwise_equal(phi));
}
