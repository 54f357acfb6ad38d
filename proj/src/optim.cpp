#include "moelab/optim.hpp"

#include <cmath>

namespace moelab {

namespace {

void check_finite(const Matrix& g, const char* layer) {
    if (!all_finite(g.a)) throw DivergenceError(std::string("non-finite gradient in ") + layer);
}

void sgd_update(Matrix& delta, const Matrix& g, double lr, const char* layer) {
    check_finite(g, layer);
    if (lr == 0.0) return;
    for (std::size_t i = 0; i < delta.a.size(); ++i) delta.a[i] -= lr * g.a[i];
}

} // namespace

void sgd_step(MoEWeights& w, const GradientCache& g, const RuleSet& rules) {
    sgd_update(w.w1.delta, g.gw1, rules.lr(LayerId::embed, OptimizerKind::SGD), "embed");
    sgd_update(w.q.delta, g.gq, rules.lr(LayerId::router, OptimizerKind::SGD), "router");
    const double lr2 = rules.lr(LayerId::expert_in, OptimizerKind::SGD);
    const double lr3 = rules.lr(LayerId::expert_out, OptimizerKind::SGD);
    for (std::size_t i = 0; i < w.scale.m; ++i) {
        sgd_update(w.w2[i].delta, g.gw2[i], lr2, "expert_in");
        sgd_update(w.w3[i].delta, g.gw3[i], lr3, "expert_out");
    }
    sgd_update(w.w4.delta, g.gw4, rules.lr(LayerId::readout, OptimizerKind::SGD), "readout");
}

AdamState::AdamState(const ScaleVector& s, double b1, double b2) : beta1(b1), beta2(b2) {
    m_w1 = Matrix(s.n, s.d);
    v_w1 = Matrix(s.n, s.d);
    m_q = Matrix(s.m, s.n);
    v_q = Matrix(s.m, s.n);
    m_w4 = Matrix(1, s.n);
    v_w4 = Matrix(1, s.n);
    m_w2.assign(s.m, Matrix(s.ne, s.n));
    v_w2.assign(s.m, Matrix(s.ne, s.n));
    m_w3.assign(s.m, Matrix(s.n, s.ne));
    v_w3.assign(s.m, Matrix(s.n, s.ne));
}

namespace {

void adam_update(Matrix& delta, const Matrix& g, Matrix& m, Matrix& v, double lr, double eps_factor,
                 double beta1, double beta2, long t, const char* layer) {
    check_finite(g, layer);
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    const double inv_f = 1.0 / eps_factor;
    for (std::size_t i = 0; i < delta.a.size(); ++i) {
        const double gs = g.a[i] * inv_f; // scaled gradient; unit eps below
        m.a[i] = beta1 * m.a[i] + (1.0 - beta1) * gs;
        v.a[i] = beta2 * v.a[i] + (1.0 - beta2) * gs * gs;
        const double mh = m.a[i] / bc1;
        const double vh = v.a[i] / bc2;
        delta.a[i] -= lr * mh / (std::sqrt(vh) + 1.0);
    }
}

} // namespace

void adam_step(MoEWeights& w, const GradientCache& g, const RuleSet& rules, AdamState& state) {
    state.t += 1;
    auto upd = [&](Matrix& delta, const Matrix& grad, Matrix& m, Matrix& v, LayerId l, const char* name) {
        adam_update(delta, grad, m, v, rules.lr(l, OptimizerKind::Adam), rules.rule(l).adam_eps,
                    state.beta1, state.beta2, state.t, name);
    };
    upd(w.w1.delta, g.gw1, state.m_w1, state.v_w1, LayerId::embed, "embed");
    upd(w.q.delta, g.gq, state.m_q, state.v_q, LayerId::router, "router");
    for (std::size_t i = 0; i < w.scale.m; ++i) {
        upd(w.w2[i].delta, g.gw2[i], state.m_w2[i], state.v_w2[i], LayerId::expert_in, "expert_in");
        upd(w.w3[i].delta, g.gw3[i], state.m_w3[i], state.v_w3[i], LayerId::expert_out, "expert_out");
    }
    upd(w.w4.delta, g.gw4, state.m_w4, state.v_w4, LayerId::readout, "readout");
}

void clip_global_norm(GradientCache& g, double max_norm) {
    double ss = 0.0;
    auto acc = [&](const Matrix& m) {
        for (double x : m.a) ss += x * x;
    };
    acc(g.gw1);
    acc(g.gq);
    acc(g.gw4);
    for (const auto& m : g.gw2) acc(m);
    for (const auto& m : g.gw3) acc(m);
    const double norm = std::sqrt(ss);
    if (norm <= max_norm || norm == 0.0) return;
    const double sc = max_norm / norm;
    auto scale = [&](Matrix& m) {
        for (double& x : m.a) x *= sc;
    };
    scale(g.gw1);
    scale(g.gq);
    scale(g.gw4);
    for (auto& m : g.gw2) scale(m);
    for (auto& m : g.gw3) scale(m);
}

} // namespace moelab
