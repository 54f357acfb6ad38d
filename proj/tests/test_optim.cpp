#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "moelab/model.hpp"
#include "moelab/optim.hpp"
#include "moelab/params.hpp"
#include "moelab/rng.hpp"

#include <cmath>

using namespace moelab;

namespace {

MoEWeights model_for(const ScaleVector& s, const RuleSet& rules, uint64_t seed) {
    return build_weights(s, rules.init_stds(), rules.shared_experts, rules.readout_zero, seed);
}

GradientCache random_grads(const ScaleVector& s, uint64_t seed, double scale = 1.0) {
    GradientCache g(s);
    auto fill = [&](Matrix& m, uint64_t tag) {
        rng::SplitMix64 r(rng::derive(seed, tag));
        for (double& v : m.a) v = scale * r.next_gaussian();
    };
    fill(g.gw1, 1);
    fill(g.gq, 2);
    for (std::size_t i = 0; i < s.m; ++i) {
        fill(g.gw2[i], 10 + i);
        fill(g.gw3[i], 100 + i);
    }
    fill(g.gw4, 5);
    return g;
}

} // namespace

TEST_CASE("sgd_step: zero gradients leave weights unchanged; bases never move") {
    ScaleVector s{8, 4, 3, 3, 5};
    RuleSet rules = rules_for(Regime::II, Parameterization::muP, OptimizerKind::SGD, s, 0.5, 1e-8);
    MoEWeights w = model_for(s, rules, 7);
    const auto base_snapshot = w.w3[1].base.a;
    GradientCache zero(s);
    sgd_step(w, zero, rules);
    for (double v : w.w1.delta.a) CHECK(v == 0.0);
    for (double v : w.w4.delta.a) CHECK(v == 0.0);

    GradientCache g = random_grads(s, 3);
    for (int t = 0; t < 5; ++t) sgd_step(w, g, rules);
    CHECK(w.w3[1].base.a == base_snapshot);
    bool moved = false;
    for (double v : w.w3[1].delta.a) moved = moved || v != 0.0;
    CHECK(moved);
}

// Reference oracle: a plain single-tensor update loop.
TEST_CASE("sgd_step matches a naive reference implementation") {
    ScaleVector s{6, 3, 2, 2, 4};
    RuleSet rules = rules_for(Regime::III, Parameterization::muP, OptimizerKind::SGD, s, 0.3, 1e-8);
    MoEWeights w = model_for(s, rules, 11);
    GradientCache g = random_grads(s, 13);

    std::vector<double> ref = w.w2[0].delta.a;
    const double lr = rules.lr(LayerId::expert_in, OptimizerKind::SGD);
    for (std::size_t i = 0; i < ref.size(); ++i) ref[i] -= lr * g.gw2[0].a[i];
    sgd_step(w, g, rules);
    for (std::size_t i = 0; i < ref.size(); ++i)
        CHECK(w.w2[0].delta.a[i] == doctest::Approx(ref[i]).epsilon(1e-12));
}

TEST_CASE("sgd_step: layerwise lr of zero freezes that layer exactly") {
    ScaleVector s{6, 3, 2, 2, 4};
    RuleSet rules = rules_for(Regime::II, Parameterization::muP, OptimizerKind::SGD, s, 0.3, 1e-8);
    rules.multipliers.lr_layer[static_cast<int>(LayerId::router)] = 0.0;
    MoEWeights w = model_for(s, rules, 17);
    GradientCache g = random_grads(s, 19);
    for (int t = 0; t < 3; ++t) sgd_step(w, g, rules);
    for (double v : w.q.delta.a) CHECK(v == 0.0);
    bool moved = false;
    for (double v : w.w1.delta.a) moved = moved || v != 0.0;
    CHECK(moved);
}

TEST_CASE("sgd_step: one step from init realizes the rank-one expert-out update") {
    // first update of w3[i] is -eta3 * chi * (phi_i/M) * (W4)^T (h2_i)^T
    ScaleVector s{16, 8, 4, 4, 6};
    RuleSet rules = rules_for(Regime::II, Parameterization::muP, OptimizerKind::SGD, s, 0.05, 1e-8);
    MoEWeights w = model_for(s, rules, 23);
    GateSpec gate = GateSpec::sigmoid_soft();
    Vector x(s.d);
    rng::SplitMix64 r(29);
    for (double& v : x) v = r.next_gaussian();
    ActivationCache c = forward(w, x, gate);
    const double chi = 2.0 * (c.f - 1.3);
    GradientCache g = backward(w, c, chi, gate);
    sgd_step(w, g, rules);

    const double eta3 = rules.lr(LayerId::expert_out, OptimizerKind::SGD);
    for (std::size_t i = 0; i < s.m; ++i) {
        const double pref = -eta3 * chi * c.phi[i] / static_cast<double>(s.m);
        for (std::size_t a = 0; a < s.n; ++a)
            for (std::size_t b = 0; b < s.ne; ++b)
                CHECK(w.w3[i].delta(a, b) ==
                      doctest::Approx(pref * w.w4.base(0, a) * c.h2[i][b]).epsilon(1e-12));
    }
}

TEST_CASE("sgd_step: non-finite gradient raises a divergence error naming the layer") {
    ScaleVector s{4, 2, 2, 2, 3};
    RuleSet rules = rules_for(Regime::I, Parameterization::muP, OptimizerKind::SGD, s, 0.1, 1e-8);
    MoEWeights w = model_for(s, rules, 31);
    GradientCache g = random_grads(s, 33);
    g.gw2[1].a[0] = std::nan("");
    try {
        sgd_step(w, g, rules);
        CHECK(false);
    } catch (const DivergenceError& e) {
        CHECK(std::string(e.what()).find("expert_in") != std::string::npos);
    }
}

namespace {

// Textbook Adam with explicit epsilon, one tensor.
struct RefAdam {
    std::vector<double> m, v;
    long t = 0;
    void step(std::vector<double>& w, const std::vector<double>& g, double lr, double eps,
              double b1, double b2) {
        if (m.empty()) {
            m.assign(w.size(), 0.0);
            v.assign(w.size(), 0.0);
        }
        ++t;
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = b1 * m[i] + (1 - b1) * g[i];
            v[i] = b2 * v[i] + (1 - b2) * g[i] * g[i];
            const double mh = m[i] / (1 - std::pow(b1, t));
            const double vh = v[i] / (1 - std::pow(b2, t));
            w[i] -= lr * mh / (std::sqrt(vh) + eps);
        }
    }
};

} // namespace

TEST_CASE("adam_step matches a textbook reference over 5 random steps") {
    ScaleVector s{6, 3, 2, 2, 4};
    RuleSet rules = rules_for(Regime::II, Parameterization::muP, OptimizerKind::Adam, s, 0.01, 1e-3);
    MoEWeights w = model_for(s, rules, 37);
    AdamState st(s, 0.9, 0.95);

    RefAdam ref_w1, ref_q, ref_w4;
    std::vector<RefAdam> ref_w2(s.m), ref_w3(s.m);
    std::vector<double> d_w1 = w.w1.delta.a, d_q = w.q.delta.a, d_w4 = w.w4.delta.a;
    std::vector<std::vector<double>> d_w2(s.m), d_w3(s.m);
    for (std::size_t i = 0; i < s.m; ++i) {
        d_w2[i] = w.w2[i].delta.a;
        d_w3[i] = w.w3[i].delta.a;
    }

    for (int t = 0; t < 5; ++t) {
        GradientCache g = random_grads(s, 1000 + t);
        adam_step(w, g, rules, st);
        auto step_ref = [&](RefAdam& ra, std::vector<double>& dw, const Matrix& grad, LayerId l) {
            ra.step(dw, grad.a, rules.lr(l, OptimizerKind::Adam), rules.rule(l).adam_eps, 0.9, 0.95);
        };
        step_ref(ref_w1, d_w1, g.gw1, LayerId::embed);
        step_ref(ref_q, d_q, g.gq, LayerId::router);
        for (std::size_t i = 0; i < s.m; ++i) {
            step_ref(ref_w2[i], d_w2[i], g.gw2[i], LayerId::expert_in);
            step_ref(ref_w3[i], d_w3[i], g.gw3[i], LayerId::expert_out);
        }
        step_ref(ref_w4, d_w4, g.gw4, LayerId::readout);
    }
    auto close = [](const std::vector<double>& a, const std::vector<double>& b) {
        for (std::size_t i = 0; i < a.size(); ++i)
            CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-10));
    };
    close(w.w1.delta.a, d_w1);
    close(w.q.delta.a, d_q);
    close(w.w4.delta.a, d_w4);
    for (std::size_t i = 0; i < s.m; ++i) {
        close(w.w2[i].delta.a, d_w2[i]);
        close(w.w3[i].delta.a, d_w3[i]);
    }
}

TEST_CASE("adam_step: zero gradients leave weights and moments at zero") {
    ScaleVector s{5, 3, 2, 2, 4};
    RuleSet rules = rules_for(Regime::I, Parameterization::muP, OptimizerKind::Adam, s, 0.01, 1e-4);
    MoEWeights w = model_for(s, rules, 41);
    AdamState st(s);
    GradientCache zero(s);
    adam_step(w, zero, rules, st);
    for (double v : w.w1.delta.a) CHECK(v == 0.0);
    for (double v : st.m_w1.a) CHECK(v == 0.0);
    for (double v : st.v_w1.a) CHECK(v == 0.0);
}

// The faithfulness identity: Psi(c*g; c*eps-factor) == Psi(g; eps-factor).
TEST_CASE("adam_step: gradient scaling is equivalent to epsilon scaling") {
    ScaleVector s{6, 3, 3, 3, 4};
    RuleSet rules = rules_for(Regime::III, Parameterization::muP, OptimizerKind::Adam, s, 0.02, 1e-5);
    RuleSet rules_scaled = rules;
    const double c = 512.0;
    for (auto& r : rules_scaled.rules) r.adam_eps *= c;

    MoEWeights wa = model_for(s, rules, 43);
    MoEWeights wb = model_for(s, rules, 43);
    AdamState sa(s), sb(s);
    for (int t = 0; t < 10; ++t) {
        GradientCache g = random_grads(s, 2000 + t, 1e-3);
        GradientCache gc = random_grads(s, 2000 + t, 1e-3);
        auto scale_all = [&](GradientCache& gg) {
            for (double& v : gg.gw1.a) v *= c;
            for (double& v : gg.gq.a) v *= c;
            for (double& v : gg.gw4.a) v *= c;
            for (auto& m : gg.gw2)
                for (double& v : m.a) v *= c;
            for (auto& m : gg.gw3)
                for (double& v : m.a) v *= c;
        };
        scale_all(gc);
        adam_step(wa, g, rules, sa);
        adam_step(wb, gc, rules_scaled, sb);
    }
    for (std::size_t i = 0; i < wa.w1.delta.a.size(); ++i)
        CHECK(wa.w1.delta.a[i] == doctest::Approx(wb.w1.delta.a[i]).epsilon(1e-12));
    for (std::size_t i = 0; i < wa.w3[2].delta.a.size(); ++i)
        CHECK(wa.w3[2].delta.a[i] == doctest::Approx(wb.w3[2].delta.a[i]).epsilon(1e-12));
}

TEST_CASE("adam_step: beta1=beta2=0 degenerates to the sign-like closed form") {
    // with no momentum, update = lr * g / (|g| + eps_factor)
    ScaleVector s{4, 2, 2, 2, 3};
    RuleSet rules = rules_for(Regime::I, Parameterization::muP, OptimizerKind::SGD, s, 1.0, 1.0);
    for (auto& r : rules.rules) {
        r.adam_lr = 0.1;
        r.adam_eps = 0.5;
    }
    MoEWeights w = model_for(s, rules, 47);
    AdamState st(s, 0.0, 0.0);
    GradientCache g = random_grads(s, 51);
    adam_step(w, g, rules, st);
    for (std::size_t i = 0; i < w.w1.delta.a.size(); ++i) {
        const double gi = g.gw1.a[i];
        const double expected = -0.1 * gi / (std::abs(gi) + 0.5);
        CHECK(w.w1.delta.a[i] == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("clip_global_norm caps the joint gradient norm") {
    ScaleVector s{4, 2, 2, 2, 3};
    GradientCache g = random_grads(s, 53, 10.0);
    clip_global_norm(g, 1.0);
    double ss = 0.0;
    auto acc = [&](const Matrix& m) {
        for (double x : m.a) ss += x * x;
    };
    acc(g.gw1);
    acc(g.gq);
    acc(g.gw4);
    for (const auto& m : g.gw2) acc(m);
    for (const auto& m : g.gw3) acc(m);
    CHECK(std::sqrt(ss) == doctest::Approx(1.0).epsilon(1e-12));
}
