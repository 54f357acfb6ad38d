#include "moelab/model.hpp"

#include "moelab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace moelab {

void ScaleVector::validate() const {
    if (n == 0 || ne == 0 || m == 0 || k == 0 || d == 0)
        throw std::invalid_argument("ScaleVector: all dimensions must be positive");
    if (k > m) throw std::invalid_argument("ScaleVector: K must not exceed M");
}

GateSpec GateSpec::sigmoid_soft(double beta) { return GateSpec{GateKind::sigmoid, beta, std::nullopt, 1.0}; }
GateSpec GateSpec::softmax_soft(double beta) { return GateSpec{GateKind::softmax, beta, std::nullopt, 0.0}; }
GateSpec GateSpec::sigmoid_topk(std::size_t k, double beta, double agg_exponent) {
    return GateSpec{GateKind::sigmoid, beta, k, agg_exponent};
}
GateSpec GateSpec::softmax_topk(std::size_t k, double beta) { return GateSpec{GateKind::softmax, beta, k, 0.0}; }

void GateSpec::validate(const ScaleVector& s) const {
    if (beta <= 0.0) throw std::invalid_argument("GateSpec: beta must be positive");
    if (agg_exponent < 0.0 || agg_exponent > 1.0)
        throw std::invalid_argument("GateSpec: agg_exponent must lie in [0,1]");
    if (topk && (*topk == 0 || *topk > s.m))
        throw std::invalid_argument("GateSpec: topk must lie in [1, M]");
}

std::size_t GateSpec::active_count(const ScaleVector& s) const { return topk ? *topk : s.m; }

double GateSpec::agg_coeff(const ScaleVector& s) const {
    if (kind == GateKind::sigmoid && !topk) return 1.0 / static_cast<double>(s.m);
    return std::pow(static_cast<double>(active_count(s)), -agg_exponent);
}

MoEWeights build_weights(const ScaleVector& scale, const LayerStds& stds, bool shared_experts,
                         bool readout_zero, uint64_t seed) {
    scale.validate();
    if (stds.embed < 0 || stds.router < 0 || stds.expert_in < 0 || stds.expert_out < 0 || stds.readout < 0)
        throw std::invalid_argument("build_weights: negative init std");
    MoEWeights w;
    w.scale = scale;
    w.shared_experts = shared_experts;
    w.w1.init(gaussian_matrix(scale.n, scale.d, stds.embed, rng::derive(seed, 1)));
    w.q.init(gaussian_matrix(scale.m, scale.n, stds.router, rng::derive(seed, 2)));
    w.w2.resize(scale.m);
    w.w3.resize(scale.m);
    for (std::size_t i = 0; i < scale.m; ++i) {
        // One draw reused across experts realizes the shared-init scheme.
        const uint64_t tag2 = shared_experts ? 0 : i;
        w.w2[i].init(gaussian_matrix(scale.ne, scale.n, stds.expert_in, rng::derive(seed, 3, tag2)));
        w.w3[i].init(gaussian_matrix(scale.n, scale.ne, stds.expert_out, rng::derive(seed, 4, tag2)));
    }
    w.w4.init(gaussian_matrix(1, scale.n, readout_zero ? 0.0 : stds.readout, rng::derive(seed, 5)));
    return w;
}

void gate_jacobian_apply(const GateSpec& gate, const Vector& phi,
                         const std::vector<std::size_t>& active, const Vector& g_phi,
                         Vector& g_psi) {
    g_psi.assign(phi.size(), 0.0);
    if (gate.kind == GateKind::sigmoid) {
        for (std::size_t i : active) g_psi[i] = gate.beta * phi[i] * (1.0 - phi[i]) * g_phi[i];
    } else {
        double inner = 0.0;
        for (std::size_t j : active) inner += phi[j] * g_phi[j];
        for (std::size_t i : active) g_psi[i] = gate.beta * phi[i] * (g_phi[i] - inner);
    }
}

namespace {

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * 0.7071067811865475244)); }
double gelu_deriv(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x * 0.7071067811865475244));
    const double pdf = 0.3989422804014326779 * std::exp(-0.5 * x * x);
    return cdf + x * pdf;
}

void apply_nl(Nonlinearity nl, const Vector& pre, Vector& post) {
    if (nl == Nonlinearity::identity) {
        post = pre;
        return;
    }
    post.resize(pre.size());
    for (std::size_t i = 0; i < pre.size(); ++i) post[i] = gelu(pre[i]);
}

void backprop_nl(Nonlinearity nl, const Vector& pre, Vector& grad) {
    if (nl == Nonlinearity::identity) return;
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= gelu_deriv(pre[i]);
}

// K largest logits; ties broken toward the lowest expert index. Returned
// sorted ascending.
std::vector<std::size_t> select_topk(const Vector& psi, std::size_t k) {
    std::vector<std::size_t> idx(psi.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (psi[a] != psi[b]) return psi[a] > psi[b];
        return a < b;
    });
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

void compute_gates(const GateSpec& gate, const Vector& psi, const std::vector<std::size_t>& active,
                   Vector& phi) {
    phi.assign(psi.size(), 0.0);
    if (gate.kind == GateKind::sigmoid) {
        for (std::size_t i : active) phi[i] = 1.0 / (1.0 + std::exp(-gate.beta * psi[i]));
    } else {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t i : active) mx = std::max(mx, psi[i]);
        double z = 0.0;
        for (std::size_t i : active) {
            phi[i] = std::exp(gate.beta * (psi[i] - mx));
            z += phi[i];
        }
        for (std::size_t i : active) phi[i] /= z;
    }
}

bool flag_divergence(ActivationCache& c, std::span<const double> v, const char* name) {
    if (all_finite(v)) return false;
    c.diverged = true;
    if (c.diverged_at.empty()) c.diverged_at = name;
    return true;
}

enum class WeightPart { effective, base_only };

ActivationCache forward_impl(const MoEWeights& w, const Vector& x, const GateSpec& gate,
                             Nonlinearity nl, WeightPart part) {
    const ScaleVector& s = w.scale;
    gate.validate(s);
    if (x.size() != s.d) throw std::invalid_argument("forward: input dimension mismatch");

    const bool base_only = part == WeightPart::base_only;
    ActivationCache c;
    c.x = x;
    c.h1_pre.assign(s.n, 0.0);
    if (base_only)
        matvec(w.w1.base, x, c.h1_pre);
    else
        w.w1.apply(x, c.h1_pre);
    apply_nl(nl, c.h1_pre, c.h1);
    flag_divergence(c, c.h1, "h1");

    c.psi.assign(s.m, 0.0);
    if (base_only)
        matvec(w.q.base, c.h1, c.psi);
    else
        w.q.apply(c.h1, c.psi);
    flag_divergence(c, c.psi, "psi");

    if (gate.topk)
        c.active = select_topk(c.psi, *gate.topk);
    else {
        c.active.resize(s.m);
        std::iota(c.active.begin(), c.active.end(), 0);
    }
    compute_gates(gate, c.psi, c.active, c.phi);

    c.h2_pre.resize(s.m);
    c.h2.resize(s.m);
    c.h3i.resize(s.m);
    c.h3.assign(s.n, 0.0);
    const double coeff = gate.agg_coeff(s);
    for (std::size_t i = 0; i < s.m; ++i) {
        c.h2_pre[i].assign(s.ne, 0.0);
        if (base_only)
            matvec(w.w2[i].base, c.h1, c.h2_pre[i]);
        else
            w.w2[i].apply(c.h1, c.h2_pre[i]);
        apply_nl(nl, c.h2_pre[i], c.h2[i]);
        c.h3i[i].assign(s.n, 0.0);
        if (base_only)
            matvec(w.w3[i].base, c.h2[i], c.h3i[i]);
        else
            w.w3[i].apply(c.h2[i], c.h3i[i]);
        flag_divergence(c, c.h3i[i], "h3i");
    }
    for (std::size_t i : c.active) axpy(coeff * c.phi[i], c.h3i[i], c.h3);
    flag_divergence(c, c.h3, "h3");

    double f = 0.0;
    if (base_only)
        f = dot(std::span<const double>(w.w4.base.a), c.h3);
    else
        f = dot(std::span<const double>(w.w4.base.a), c.h3) + dot(std::span<const double>(w.w4.delta.a), c.h3);
    c.f = f;
    if (!std::isfinite(f) && !c.diverged) {
        c.diverged = true;
        c.diverged_at = "f";
    }
    return c;
}

} // namespace

ActivationCache forward(const MoEWeights& w, const Vector& x, const GateSpec& gate, Nonlinearity nl) {
    return forward_impl(w, x, gate, nl, WeightPart::effective);
}

ActivationCache forward_base(const MoEWeights& w, const Vector& x, const GateSpec& gate, Nonlinearity nl) {
    return forward_impl(w, x, gate, nl, WeightPart::base_only);
}

GradientCache::GradientCache(const ScaleVector& s) : scale(s) {
    gw1 = Matrix(s.n, s.d);
    gq = Matrix(s.m, s.n);
    gw4 = Matrix(1, s.n);
    gw2.assign(s.m, Matrix(s.ne, s.n));
    gw3.assign(s.m, Matrix(s.n, s.ne));
    g_h3.assign(s.n, 0.0);
    g_h3i.assign(s.m, Vector(s.n, 0.0));
    g_h2i.assign(s.m, Vector(s.ne, 0.0));
    g_phi.assign(s.m, 0.0);
    g_psi.assign(s.m, 0.0);
    g_h1_exp.assign(s.n, 0.0);
    g_h1_router.assign(s.n, 0.0);
}

void GradientCache::zero_weight_grads() {
    gw1.zero();
    gq.zero();
    gw4.zero();
    for (auto& g : gw2) g.zero();
    for (auto& g : gw3) g.zero();
}

void backward_accumulate(const MoEWeights& w, const ActivationCache& cache, double chi,
                         const GateSpec& gate, GradientCache& out, Nonlinearity nl) {
    const ScaleVector& s = w.scale;
    if (cache.h1.size() != s.n || cache.psi.size() != s.m || cache.x.size() != s.d)
        throw std::invalid_argument("backward: cache does not match weights");
    out.chi = chi;

    // readout
    for (std::size_t j = 0; j < s.n; ++j)
        out.g_h3[j] = chi * (w.w4.base(0, j) + w.w4.delta(0, j));
    for (std::size_t j = 0; j < s.n; ++j) out.gw4(0, j) += chi * cache.h3[j];

    const double coeff = gate.agg_coeff(s);
    std::fill(out.g_phi.begin(), out.g_phi.end(), 0.0);
    for (auto& v : out.g_h3i) std::fill(v.begin(), v.end(), 0.0);
    for (auto& v : out.g_h2i) std::fill(v.begin(), v.end(), 0.0);
    std::fill(out.g_h1_exp.begin(), out.g_h1_exp.end(), 0.0);

    Vector g_h2_pre(s.ne);
    for (std::size_t i : cache.active) {
        const double si = coeff * cache.phi[i];
        for (std::size_t j = 0; j < s.n; ++j) out.g_h3i[i][j] = si * out.g_h3[j];
        out.g_phi[i] = coeff * dot(cache.h3i[i], out.g_h3);

        w.w3[i].apply_t(out.g_h3i[i], out.g_h2i[i]);
        outer_acc(out.gw3[i], 1.0, out.g_h3i[i], cache.h2[i]);

        g_h2_pre = out.g_h2i[i];
        backprop_nl(nl, cache.h2_pre[i], g_h2_pre);
        outer_acc(out.gw2[i], 1.0, g_h2_pre, cache.h1);
        w.w2[i].apply_t(g_h2_pre, out.g_h1_exp, true);
    }

    gate_jacobian_apply(gate, cache.phi, cache.active, out.g_phi, out.g_psi);
    outer_acc(out.gq, 1.0, out.g_psi, cache.h1);
    w.q.apply_t(out.g_psi, out.g_h1_router);

    Vector g_h1_pre(s.n);
    for (std::size_t j = 0; j < s.n; ++j) g_h1_pre[j] = out.g_h1_exp[j] + out.g_h1_router[j];
    backprop_nl(nl, cache.h1_pre, g_h1_pre);
    outer_acc(out.gw1, 1.0, g_h1_pre, cache.x);
}

GradientCache backward(const MoEWeights& w, const ActivationCache& cache, double chi,
                       const GateSpec& gate, Nonlinearity nl) {
    GradientCache g(w.scale);
    backward_accumulate(w, cache, chi, gate, g, nl);
    return g;
}

double dense_equivalent_forward(const MoEWeights& w, const Vector& x) {
    const ScaleVector& s = w.scale;
    if (s.m != 1) throw std::invalid_argument("dense_equivalent_forward: requires M == 1");
    if (x.size() != s.d) throw std::invalid_argument("dense_equivalent_forward: input dimension mismatch");
    Vector h1(s.n, 0.0), h2(s.ne, 0.0), h3(s.n, 0.0);
    w.w1.apply(x, h1);
    w.w2[0].apply(h1, h2);
    w.w3[0].apply(h2, h3);
    return dot(std::span<const double>(w.w4.base.a), h3) + dot(std::span<const double>(w.w4.delta.a), h3);
}

// ---------------------------------------------------------------------------
// Batched path

void DenseWeights::refresh(const MoEWeights& w) {
    auto mat = [](const SplitWeight& sw) {
        Matrix m(sw.base.rows, sw.base.cols);
        for (std::size_t i = 0; i < m.a.size(); ++i) m.a[i] = sw.base.a[i] + sw.delta.a[i];
        return m;
    };
    w1 = mat(w.w1);
    q = mat(w.q);
    w4 = mat(w.w4);
    w2.resize(w.w2.size());
    w3.resize(w.w3.size());
    for (std::size_t i = 0; i < w.w2.size(); ++i) {
        w2[i] = mat(w.w2[i]);
        w3[i] = mat(w.w3[i]);
    }
}

namespace {

void apply_nl_mat(Nonlinearity nl, const Matrix& pre, Matrix& post) {
    if (nl == Nonlinearity::identity) {
        post = pre;
        return;
    }
    post = Matrix(pre.rows, pre.cols);
    for (std::size_t i = 0; i < pre.a.size(); ++i) post.a[i] = gelu(pre.a[i]);
}

void backprop_nl_mat(Nonlinearity nl, const Matrix& pre, Matrix& grad) {
    if (nl == Nonlinearity::identity) return;
    for (std::size_t i = 0; i < grad.a.size(); ++i) grad.a[i] *= gelu_deriv(pre.a[i]);
}

bool flag_divergence_b(BatchCache& c, const Matrix& m, const char* name) {
    if (all_finite(m.a)) return false;
    c.diverged = true;
    if (c.diverged_at.empty()) c.diverged_at = name;
    return true;
}

} // namespace

void forward_batch(const DenseWeights& dw, const ScaleVector& s, const Matrix& x,
                   const GateSpec& gate, BatchCache& cache, Nonlinearity nl) {
    gate.validate(s);
    if (x.rows != s.d) throw std::invalid_argument("forward_batch: input dimension mismatch");
    const std::size_t B = x.cols;
    cache.batch = B;
    cache.x = x;
    cache.diverged = false;
    cache.diverged_at.clear();

    cache.h1_pre = Matrix(s.n, B);
    gemm_nn(cache.h1_pre, dw.w1, x);
    apply_nl_mat(nl, cache.h1_pre, cache.h1);
    flag_divergence_b(cache, cache.h1, "h1");

    cache.psi = Matrix(s.m, B);
    gemm_nn(cache.psi, dw.q, cache.h1);
    flag_divergence_b(cache, cache.psi, "psi");

    cache.active.assign(B, {});
    cache.phi = Matrix(s.m, B);
    cache.phi.zero();
    Vector psi_col(s.m), phi_col(s.m);
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t i = 0; i < s.m; ++i) psi_col[i] = cache.psi(i, b);
        if (gate.topk)
            cache.active[b] = select_topk(psi_col, *gate.topk);
        else {
            cache.active[b].resize(s.m);
            std::iota(cache.active[b].begin(), cache.active[b].end(), 0);
        }
        compute_gates(gate, psi_col, cache.active[b], phi_col);
        for (std::size_t i : cache.active[b]) cache.phi(i, b) = phi_col[i];
    }

    cache.h2_pre.assign(s.m, Matrix());
    cache.h2.assign(s.m, Matrix());
    cache.h3i.assign(s.m, Matrix());
    cache.h3 = Matrix(s.n, B);
    cache.h3.zero();
    const double coeff = gate.agg_coeff(s);
    for (std::size_t i = 0; i < s.m; ++i) {
        cache.h2_pre[i] = Matrix(s.ne, B);
        gemm_nn(cache.h2_pre[i], dw.w2[i], cache.h1);
        apply_nl_mat(nl, cache.h2_pre[i], cache.h2[i]);
        cache.h3i[i] = Matrix(s.n, B);
        gemm_nn(cache.h3i[i], dw.w3[i], cache.h2[i]);
        for (std::size_t b = 0; b < B; ++b) {
            const double g = coeff * cache.phi(i, b);
            if (g == 0.0) continue;
            for (std::size_t r = 0; r < s.n; ++r) cache.h3(r, b) += g * cache.h3i[i](r, b);
        }
        flag_divergence_b(cache, cache.h3i[i], "h3i");
    }
    flag_divergence_b(cache, cache.h3, "h3");

    cache.f.assign(B, 0.0);
    for (std::size_t b = 0; b < B; ++b) {
        double f = 0.0;
        for (std::size_t r = 0; r < s.n; ++r) f += dw.w4(0, r) * cache.h3(r, b);
        cache.f[b] = f;
        if (!std::isfinite(f) && !cache.diverged) {
            cache.diverged = true;
            cache.diverged_at = "f";
        }
    }
}

void backward_batch(const DenseWeights& dw, const ScaleVector& s, const BatchCache& cache,
                    const Vector& chi, const GateSpec& gate, GradientCache& out, Nonlinearity nl) {
    const std::size_t B = cache.batch;
    if (chi.size() != B) throw std::invalid_argument("backward_batch: chi size mismatch");
    const double coeff = gate.agg_coeff(s);

    // G_h3(r,b) = chi_b * w4(0,r)
    Matrix g_h3(s.n, B);
    for (std::size_t r = 0; r < s.n; ++r)
        for (std::size_t b = 0; b < B; ++b) g_h3(r, b) = chi[b] * dw.w4(0, r);
    for (std::size_t r = 0; r < s.n; ++r) {
        double acc = 0.0;
        for (std::size_t b = 0; b < B; ++b) acc += chi[b] * cache.h3(r, b);
        out.gw4(0, r) += acc;
    }

    Matrix g_phi(s.m, B);
    g_phi.zero();
    for (std::size_t i = 0; i < s.m; ++i)
        for (std::size_t b = 0; b < B; ++b) {
            if (cache.phi(i, b) == 0.0 && gate.topk) continue;
            double d = 0.0;
            for (std::size_t r = 0; r < s.n; ++r) d += cache.h3i[i](r, b) * g_h3(r, b);
            g_phi(i, b) = coeff * d;
        }

    Matrix g_psi(s.m, B);
    g_psi.zero();
    Vector phi_col(s.m), gphi_col(s.m), gpsi_col(s.m);
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t i = 0; i < s.m; ++i) {
            phi_col[i] = cache.phi(i, b);
            gphi_col[i] = g_phi(i, b);
        }
        gate_jacobian_apply(gate, phi_col, cache.active[b], gphi_col, gpsi_col);
        for (std::size_t i = 0; i < s.m; ++i) g_psi(i, b) = gpsi_col[i];
    }
    gemm_nt(out.gq, g_psi, cache.h1, 1.0, true);

    Matrix g_h1(s.n, B);
    gemm_tn(g_h1, dw.q, g_psi); // router pathway

    Matrix g_h3i(s.n, B), g_h2i(s.ne, B);
    for (std::size_t i = 0; i < s.m; ++i) {
        bool any = false;
        for (std::size_t b = 0; b < B; ++b) {
            const double gci = coeff * cache.phi(i, b);
            for (std::size_t r = 0; r < s.n; ++r) g_h3i(r, b) = gci * g_h3(r, b);
            any = any || gci != 0.0;
        }
        if (!any) continue;
        gemm_nt(out.gw3[i], g_h3i, cache.h2[i], 1.0, true);
        gemm_tn(g_h2i, dw.w3[i], g_h3i);
        backprop_nl_mat(nl, cache.h2_pre[i], g_h2i);
        gemm_nt(out.gw2[i], g_h2i, cache.h1, 1.0, true);
        gemm_tn(g_h1, dw.w2[i], g_h2i, 1.0, true); // expert pathway
    }

    backprop_nl_mat(nl, cache.h1_pre, g_h1);
    gemm_nt(out.gw1, g_h1, cache.x, 1.0, true);
}

// ---------------------------------------------------------------------------
// Checkpoint format: little-endian, "MOEW1" magic, dims, flags, then base and
// delta of each tensor in declaration order.

namespace {

void write_mat(std::ofstream& f, const Matrix& m) {
    uint64_t r = m.rows, c = m.cols;
    f.write(reinterpret_cast<const char*>(&r), 8);
    f.write(reinterpret_cast<const char*>(&c), 8);
    f.write(reinterpret_cast<const char*>(m.a.data()), static_cast<std::streamsize>(m.a.size() * 8));
}

Matrix read_mat(std::ifstream& f) {
    uint64_t r = 0, c = 0;
    f.read(reinterpret_cast<char*>(&r), 8);
    f.read(reinterpret_cast<char*>(&c), 8);
    if (!f || r == 0 || c == 0 || r * c > (1ull << 32))
        throw std::runtime_error("load_weights: corrupt matrix header");
    Matrix m(r, c);
    f.read(reinterpret_cast<char*>(m.a.data()), static_cast<std::streamsize>(m.a.size() * 8));
    if (!f) throw std::runtime_error("load_weights: truncated file");
    return m;
}

void write_split(std::ofstream& f, const SplitWeight& w) {
    write_mat(f, w.base);
    write_mat(f, w.delta);
}

SplitWeight read_split(std::ifstream& f) {
    SplitWeight w;
    w.base = read_mat(f);
    w.delta = read_mat(f);
    if (w.base.rows != w.delta.rows || w.base.cols != w.delta.cols)
        throw std::runtime_error("load_weights: base/delta shape mismatch");
    return w;
}

} // namespace

void save_weights(const MoEWeights& w, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_weights: cannot open " + path);
    f.write("MOEW1", 5);
    uint64_t dims[5] = {w.scale.n, w.scale.ne, w.scale.m, w.scale.k, w.scale.d};
    f.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    uint8_t shared = w.shared_experts ? 1 : 0;
    f.write(reinterpret_cast<const char*>(&shared), 1);
    write_split(f, w.w1);
    write_split(f, w.q);
    for (std::size_t i = 0; i < w.scale.m; ++i) write_split(f, w.w2[i]);
    for (std::size_t i = 0; i < w.scale.m; ++i) write_split(f, w.w3[i]);
    write_split(f, w.w4);
    if (!f) throw std::runtime_error("save_weights: write failed");
}

MoEWeights load_weights(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_weights: cannot open " + path);
    char magic[5];
    f.read(magic, 5);
    if (!f || std::string(magic, 5) != "MOEW1") throw std::runtime_error("load_weights: bad magic");
    uint64_t dims[5];
    f.read(reinterpret_cast<char*>(dims), sizeof(dims));
    uint8_t shared = 0;
    f.read(reinterpret_cast<char*>(&shared), 1);
    MoEWeights w;
    w.scale = ScaleVector{dims[0], dims[1], dims[2], dims[3], dims[4]};
    w.scale.validate();
    w.shared_experts = shared != 0;
    w.w1 = read_split(f);
    w.q = read_split(f);
    w.w2.resize(w.scale.m);
    w.w3.resize(w.scale.m);
    for (std::size_t i = 0; i < w.scale.m; ++i) w.w2[i] = read_split(f);
    for (std::size_t i = 0; i < w.scale.m; ++i) w.w3[i] = read_split(f);
    w.w4 = read_split(f);
    return w;
}

} // namespace moelab
