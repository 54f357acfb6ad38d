#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "moelab/model.hpp"
#include "moelab/params.hpp"
#include "moelab/rng.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

using namespace moelab;

namespace {

Vector random_input(std::size_t d, uint64_t seed) {
    Vector x(d);
    rng::SplitMix64 r(seed);
    for (double& v : x) v = r.next_gaussian();
    return x;
}

MoEWeights small_model(const ScaleVector& s, uint64_t seed, bool shared = false, bool readout_zero = false) {
    LayerStds stds{1.0 / std::sqrt(double(s.d)), 1.0 / std::sqrt(double(s.n)),
                   1.0 / std::sqrt(double(s.n)), 1.0 / std::sqrt(double(s.ne)), 1.0 / double(s.n)};
    return build_weights(s, stds, shared, readout_zero, seed);
}

void perturb_deltas(MoEWeights& w, uint64_t seed, double scale) {
    auto bump = [&](Matrix& m, uint64_t tag) {
        rng::SplitMix64 r(rng::derive(seed, tag));
        for (double& v : m.a) v += scale * r.next_gaussian();
    };
    bump(w.w1.delta, 1);
    bump(w.q.delta, 2);
    for (std::size_t i = 0; i < w.scale.m; ++i) {
        bump(w.w2[i].delta, 10 + i);
        bump(w.w3[i].delta, 100 + i);
    }
    bump(w.w4.delta, 5);
}

} // namespace

TEST_CASE("build_weights: shared experts share the base draw bit-exactly") {
    ScaleVector s{8, 4, 3, 3, 5};
    MoEWeights w = small_model(s, 42, /*shared=*/true);
    for (std::size_t i = 1; i < s.m; ++i) {
        CHECK(w.w2[i].base.a == w.w2[0].base.a);
        CHECK(w.w3[i].base.a == w.w3[0].base.a);
    }
    MoEWeights u = small_model(s, 42, /*shared=*/false);
    CHECK(u.w2[1].base.a != u.w2[0].base.a);
}

TEST_CASE("build_weights: zero readout makes f vanish on any input") {
    ScaleVector s{8, 4, 3, 3, 5};
    MoEWeights w = small_model(s, 1, false, /*readout_zero=*/true);
    for (uint64_t t = 0; t < 5; ++t) {
        ActivationCache c = forward(w, random_input(s.d, 50 + t), GateSpec::sigmoid_soft());
        CHECK(c.f == 0.0);
    }
}

TEST_CASE("forward: zero router logit gives sigmoid gate exactly one half") {
    ScaleVector s{6, 3, 1, 1, 4};
    LayerStds stds{0.5, 0.0, 0.5, 0.5, 0.1};
    MoEWeights w = build_weights(s, stds, false, false, 3);
    Vector x = random_input(s.d, 9);
    ActivationCache c = forward(w, x, GateSpec::sigmoid_soft());
    CHECK(c.phi[0] == doctest::Approx(0.5).epsilon(1e-15));
    // h3 = 0.5 * W3 W2 h1 with the M=1 aggregation coefficient 1/M = 1
    Vector h2(s.ne, 0.0), h3(s.n, 0.0);
    w.w2[0].apply(c.h1, h2);
    w.w3[0].apply(h2, h3);
    for (std::size_t j = 0; j < s.n; ++j) CHECK(c.h3[j] == doctest::Approx(0.5 * h3[j]).epsilon(1e-12));
}

// Brute-force oracle: direct matrix-chain evaluation of the whole block.
TEST_CASE("forward matches an independently coded dense evaluation") {
    ScaleVector s{4, 2, 2, 2, 3};
    MoEWeights w = small_model(s, 77);
    perturb_deltas(w, 5, 0.1);
    Vector x = {0.7, -1.1, 0.4};

    for (GateKind kind : {GateKind::sigmoid, GateKind::softmax}) {
        GateSpec gate{kind, 1.7, std::nullopt, kind == GateKind::sigmoid ? 1.0 : 0.0};
        ActivationCache c = forward(w, x, gate);

        auto eff = [](const SplitWeight& sw, std::size_t i, std::size_t j) {
            return sw.base(i, j) + sw.delta(i, j);
        };
        Vector h1(s.n, 0.0);
        for (std::size_t i = 0; i < s.n; ++i)
            for (std::size_t j = 0; j < s.d; ++j) h1[i] += eff(w.w1, i, j) * x[j];
        Vector psi(s.m, 0.0);
        for (std::size_t i = 0; i < s.m; ++i)
            for (std::size_t j = 0; j < s.n; ++j) psi[i] += eff(w.q, i, j) * h1[j];
        Vector phi(s.m, 0.0);
        if (kind == GateKind::sigmoid) {
            for (std::size_t i = 0; i < s.m; ++i) phi[i] = 1.0 / (1.0 + std::exp(-gate.beta * psi[i]));
        } else {
            double z = 0.0;
            for (std::size_t i = 0; i < s.m; ++i) z += std::exp(gate.beta * psi[i]);
            for (std::size_t i = 0; i < s.m; ++i) phi[i] = std::exp(gate.beta * psi[i]) / z;
        }
        const double coeff = kind == GateKind::sigmoid ? 1.0 / double(s.m) : 1.0;
        double f = 0.0;
        for (std::size_t i = 0; i < s.m; ++i) {
            Vector h2(s.ne, 0.0);
            for (std::size_t a = 0; a < s.ne; ++a)
                for (std::size_t b = 0; b < s.n; ++b) h2[a] += eff(w.w2[i], a, b) * h1[b];
            Vector h3(s.n, 0.0);
            for (std::size_t a = 0; a < s.n; ++a)
                for (std::size_t b = 0; b < s.ne; ++b) h3[a] += eff(w.w3[i], a, b) * h2[b];
            for (std::size_t a = 0; a < s.n; ++a) f += eff(w.w4, 0, a) * coeff * phi[i] * h3[a];
        }
        CHECK(c.f == doctest::Approx(f).epsilon(1e-12));
        for (std::size_t i = 0; i < s.m; ++i) CHECK(c.phi[i] == doctest::Approx(phi[i]).epsilon(1e-12));
    }
}

TEST_CASE("softmax gates sum to one; sigmoid gates sit in (0,1)") {
    ScaleVector s{12, 4, 6, 6, 5};
    MoEWeights w = small_model(s, 8);
    Vector x = random_input(s.d, 2);
    ActivationCache csoft = forward(w, x, GateSpec::softmax_soft(1.2));
    double sum = 0.0;
    for (double p : csoft.phi) sum += p;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    ActivationCache csig = forward(w, x, GateSpec::sigmoid_soft(0.8));
    for (std::size_t i = 0; i < s.m; ++i) {
        CHECK(csig.phi[i] > 0.0);
        CHECK(csig.phi[i] < 1.0);
    }
    // top-k softmax renormalizes over the active set
    ActivationCache ctop = forward(w, x, GateSpec::softmax_topk(3));
    CHECK(ctop.active.size() == 3);
    double topsum = 0.0;
    for (std::size_t i : ctop.active) topsum += ctop.phi[i];
    CHECK(topsum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("top-k selects the k largest logits with lowest-index ties") {
    ScaleVector s{4, 2, 5, 2, 3};
    LayerStds stds{0.5, 0.0, 0.5, 0.5, 0.1};
    MoEWeights w = build_weights(s, stds, false, false, 11);
    // zero router -> all logits tie at 0 -> lowest indices win
    Vector x = random_input(s.d, 4);
    ActivationCache c = forward(w, x, GateSpec::sigmoid_topk(2));
    REQUIRE(c.active.size() == 2);
    CHECK(c.active[0] == 0);
    CHECK(c.active[1] == 1);
}

TEST_CASE("dense_equivalent_forward: degenerate M=1 oracle") {
    ScaleVector s{6, 3, 1, 1, 4};
    MoEWeights w = small_model(s, 13);
    perturb_deltas(w, 3, 0.05);
    Vector x = random_input(s.d, 31);
    // softmax over a single expert forces phi = 1 and coeff = 1
    ActivationCache c = forward(w, x, GateSpec::softmax_soft());
    CHECK(c.f == doctest::Approx(dense_equivalent_forward(w, x)).epsilon(1e-12));
    Vector zero(s.d, 0.0);
    CHECK(dense_equivalent_forward(w, zero) == 0.0);

    ScaleVector s2{6, 3, 2, 2, 4};
    MoEWeights w2 = small_model(s2, 14);
    CHECK_THROWS_AS(dense_equivalent_forward(w2, x), std::invalid_argument);
}

TEST_CASE("backward: zero readout zeroes every hidden gradient") {
    ScaleVector s{8, 4, 3, 3, 5};
    MoEWeights w = small_model(s, 15, false, /*readout_zero=*/true);
    Vector x = random_input(s.d, 6);
    GateSpec gate = GateSpec::sigmoid_soft();
    ActivationCache c = forward(w, x, gate);
    GradientCache g = backward(w, c, 1.0, gate);
    for (double v : g.g_h3) CHECK(v == 0.0);
    for (const auto& gi : g.g_h2i)
        for (double v : gi) CHECK(v == 0.0);
    for (double v : g.g_phi) CHECK(v == 0.0);
    for (double v : g.g_h1_exp) CHECK(v == 0.0);
    for (double v : g.g_h1_router) CHECK(v == 0.0);
    // the readout's own gradient is the only nonzero one
    bool any = false;
    for (double v : g.gw4.a) any = any || v != 0.0;
    CHECK(any);
    for (double v : g.gw1.a) CHECK(v == 0.0);
}

TEST_CASE("backward: d f/d h3 equals the effective readout row") {
    ScaleVector s{7, 3, 2, 2, 4};
    MoEWeights w = small_model(s, 16);
    perturb_deltas(w, 8, 0.2);
    Vector x = random_input(s.d, 61);
    GateSpec gate = GateSpec::sigmoid_soft();
    ActivationCache c = forward(w, x, gate);
    GradientCache g = backward(w, c, 1.0, gate);
    for (std::size_t j = 0; j < s.n; ++j)
        CHECK(g.g_h3[j] == doctest::Approx(w.w4.base(0, j) + w.w4.delta(0, j)).epsilon(1e-15));
}

namespace {

// Central finite differences on every weight entry of a small instance.
void gradient_check(const GateSpec& gate, bool shared, bool readout_zero, Nonlinearity nl,
                    double chi) {
    ScaleVector s{6, 3, 3, gate.topk ? *gate.topk : 3, 3};
    MoEWeights w = small_model(ScaleVector{6, 3, 3, 3, 3}, 19, shared, readout_zero);
    perturb_deltas(w, 23, 0.15);
    Vector x = {0.8, -0.3, 1.1};
    ActivationCache cache = forward(w, x, gate, nl);
    GradientCache g = backward(w, cache, chi, gate, nl);

    const double h = 1e-6;
    auto fd = [&](Matrix& delta, std::size_t idx) {
        const double saved = delta.a[idx];
        delta.a[idx] = saved + h;
        const double fp = forward(w, x, gate, nl).f;
        delta.a[idx] = saved - h;
        const double fm = forward(w, x, gate, nl).f;
        delta.a[idx] = saved;
        return chi * (fp - fm) / (2.0 * h);
    };
    auto check_tensor = [&](Matrix& delta, const Matrix& grad) {
        for (std::size_t idx = 0; idx < delta.a.size(); ++idx) {
            const double expected = fd(delta, idx);
            CHECK(grad.a[idx] == doctest::Approx(expected).epsilon(1e-5));
        }
    };
    check_tensor(w.w1.delta, g.gw1);
    check_tensor(w.q.delta, g.gq);
    for (std::size_t i = 0; i < w.scale.m; ++i) {
        check_tensor(w.w2[i].delta, g.gw2[i]);
        check_tensor(w.w3[i].delta, g.gw3[i]);
    }
    check_tensor(w.w4.delta, g.gw4);
    (void)s;
}

} // namespace

TEST_CASE("gradients match central finite differences (all gate variants)") {
    gradient_check(GateSpec::sigmoid_soft(1.0), false, false, Nonlinearity::identity, 1.0);
    gradient_check(GateSpec::softmax_soft(1.0), false, false, Nonlinearity::identity, -0.7);
    gradient_check(GateSpec::sigmoid_topk(2, 1.3), false, false, Nonlinearity::identity, 1.0);
    gradient_check(GateSpec::softmax_topk(2, 0.9), false, false, Nonlinearity::identity, 2.3);
    gradient_check(GateSpec::sigmoid_soft(1.0), true, true, Nonlinearity::identity, 1.0);
    gradient_check(GateSpec::sigmoid_soft(1.0), false, false, Nonlinearity::gelu, 1.0);
    gradient_check(GateSpec::softmax_topk(2, 1.1), false, false, Nonlinearity::gelu, 1.0);
}

TEST_CASE("top-k: gradients of non-selected experts are exactly zero") {
    ScaleVector s{8, 4, 5, 2, 5};
    MoEWeights w = small_model(s, 29);
    perturb_deltas(w, 31, 0.1);
    Vector x = random_input(s.d, 71);
    GateSpec gate = GateSpec::sigmoid_topk(2);
    ActivationCache c = forward(w, x, gate);
    GradientCache g = backward(w, c, 1.0, gate);
    REQUIRE(c.active.size() == 2);
    std::vector<bool> active(s.m, false);
    for (std::size_t i : c.active) active[i] = true;
    for (std::size_t i = 0; i < s.m; ++i) {
        if (active[i]) continue;
        for (double v : g.gw2[i].a) CHECK(v == 0.0);
        for (double v : g.gw3[i].a) CHECK(v == 0.0);
        CHECK(g.g_psi[i] == 0.0);
        CHECK(g.gq(i, 0) == 0.0);
    }
}

TEST_CASE("shared-init MSSP at t=0: expert states coincide and softmax h3 equals h3i") {
    ScaleVector s{10, 10, 4, 4, 5};
    MoEWeights w = small_model(s, 33, /*shared=*/true, /*readout_zero=*/true);
    Vector x = random_input(s.d, 3);
    ActivationCache c = forward(w, x, GateSpec::softmax_soft());
    for (std::size_t i = 1; i < s.m; ++i) {
        CHECK(c.h2[i] == c.h2[0]);
        CHECK(c.h3i[i] == c.h3i[0]);
    }
    // gates sum to 1, so the aggregate equals the common per-expert state
    for (std::size_t j = 0; j < s.n; ++j) CHECK(c.h3[j] == doctest::Approx(c.h3i[0][j]).epsilon(1e-12));
}

TEST_CASE("batched forward/backward equals the per-sample path") {
    ScaleVector s{9, 4, 4, 2, 5};
    MoEWeights w = small_model(s, 41);
    perturb_deltas(w, 43, 0.1);
    GateSpec gate = GateSpec::sigmoid_topk(2, 1.1);
    const std::size_t B = 6;
    Matrix xb(s.d, B);
    rng::SplitMix64 r(55);
    for (double& v : xb.a) v = r.next_gaussian();

    DenseWeights dense;
    dense.refresh(w);
    BatchCache bc;
    forward_batch(dense, s, xb, gate, bc);

    Vector chi(B);
    for (std::size_t b = 0; b < B; ++b) chi[b] = 0.3 + 0.1 * static_cast<double>(b);
    GradientCache gb(s);
    backward_batch(dense, s, bc, chi, gate, gb);

    GradientCache gs(s);
    for (std::size_t b = 0; b < B; ++b) {
        Vector x(s.d);
        for (std::size_t j = 0; j < s.d; ++j) x[j] = xb(j, b);
        ActivationCache c = forward(w, x, gate);
        CHECK(bc.f[b] == doctest::Approx(c.f).epsilon(1e-12));
        backward_accumulate(w, c, chi[b], gate, gs);
    }
    auto close = [&](const Matrix& a, const Matrix& b2) {
        REQUIRE(a.a.size() == b2.a.size());
        for (std::size_t i = 0; i < a.a.size(); ++i)
            CHECK(a.a[i] == doctest::Approx(b2.a[i]).epsilon(1e-11));
    };
    close(gb.gw1, gs.gw1);
    close(gb.gq, gs.gq);
    close(gb.gw4, gs.gw4);
    for (std::size_t i = 0; i < s.m; ++i) {
        close(gb.gw2[i], gs.gw2[i]);
        close(gb.gw3[i], gs.gw3[i]);
    }
}

TEST_CASE("forward flags non-finite activations with the first offending tensor") {
    ScaleVector s{4, 2, 2, 2, 3};
    MoEWeights w = small_model(s, 51);
    w.w1.delta.a[0] = std::numeric_limits<double>::infinity();
    ActivationCache c = forward(w, random_input(s.d, 1), GateSpec::sigmoid_soft());
    CHECK(c.diverged);
    CHECK(c.diverged_at == "h1");
}

TEST_CASE("weight checkpoints round-trip") {
    ScaleVector s{5, 3, 2, 2, 4};
    MoEWeights w = small_model(s, 61, true, true);
    perturb_deltas(w, 62, 0.3);
    const std::string path = (std::filesystem::temp_directory_path() / "moelab_ckpt.bin").string();
    save_weights(w, path);
    MoEWeights r = load_weights(path);
    CHECK(r.scale.n == s.n);
    CHECK(r.shared_experts == w.shared_experts);
    CHECK(r.w1.base.a == w.w1.base.a);
    CHECK(r.w1.delta.a == w.w1.delta.a);
    CHECK(r.w3[1].delta.a == w.w3[1].delta.a);
    CHECK(r.w4.base.a == w.w4.base.a);
    std::filesystem::remove(path);
}
