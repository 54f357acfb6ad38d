#pragma once

#include "moelab/linalg.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace moelab {

// Joint model dimensions at one rung of a width ladder.
struct ScaleVector {
    std::size_t n = 0;   // embedding width N
    std::size_t ne = 0;  // expert hidden width N_e
    std::size_t m = 0;   // number of experts M
    std::size_t k = 0;   // active experts K (<= M)
    std::size_t d = 0;   // input dimension D

    void validate() const;
};

enum class GateKind { sigmoid, softmax };

// Routing configuration. Aggregation convention:
//   - sigmoid soft routing (no top-k): h3 = (1/M) sum_i phi_i h3i
//   - otherwise:                       h3 = K^-agg_exponent sum_{active} phi_i h3i
// where softmax gates are normalized over the active set. Softmax defaults to
// agg_exponent 0 (the softmax average already carries the 1/K), sigmoid to 1.
struct GateSpec {
    GateKind kind = GateKind::sigmoid;
    double beta = 1.0;                // inverse temperature
    std::optional<std::size_t> topk;  // absent = soft routing over all experts
    double agg_exponent = 1.0;        // alpha_agg in [0,1]

    static GateSpec sigmoid_soft(double beta = 1.0);
    static GateSpec softmax_soft(double beta = 1.0);
    static GateSpec sigmoid_topk(std::size_t k, double beta = 1.0, double agg_exponent = 1.0);
    static GateSpec softmax_topk(std::size_t k, double beta = 1.0);

    void validate(const ScaleVector& s) const;
    double agg_coeff(const ScaleVector& s) const;
    std::size_t active_count(const ScaleVector& s) const;
};

// Optional elementwise nonlinearity on h1 and the expert hidden state h2.
// The exponent catalog is stated for the identity (fully linear) model.
enum class Nonlinearity { identity, gelu };

// A trainable tensor kept as frozen initialization plus cumulative update.
// The optimizer only ever touches `delta`; every decomposition probe reads
// both parts. effective weight = base + delta.
struct SplitWeight {
    Matrix base;
    Matrix delta;

    void init(Matrix b) {
        delta = Matrix(b.rows, b.cols);
        base = std::move(b);
    }
    // y (+)= (base + delta) x, evaluated as two products so probes and the
    // forward pass share one linear-split convention.
    void apply(std::span<const double> x, std::span<double> y, bool accumulate = false) const {
        matvec(base, x, y, accumulate);
        matvec(delta, x, y, true);
    }
    void apply_t(std::span<const double> x, std::span<double> y, bool accumulate = false) const {
        matvec_t(base, x, y, accumulate);
        matvec_t(delta, x, y, true);
    }
};

// Per-layer initialization standard deviations.
struct LayerStds {
    double embed = 0.0;       // W1, N x D
    double router = 0.0;      // Q,  M x N
    double expert_in = 0.0;   // W2i, N_e x N
    double expert_out = 0.0;  // W3i, N x N_e
    double readout = 0.0;     // W4, 1 x N
};

struct MoEWeights {
    ScaleVector scale;
    SplitWeight w1;               // N x D
    SplitWeight q;                // M x N
    std::vector<SplitWeight> w2;  // M of N_e x N
    std::vector<SplitWeight> w3;  // M of N x N_e
    SplitWeight w4;               // 1 x N
    bool shared_experts = false;  // all experts drawn from one base sample
};

// Samples all base matrices (one draw reused across experts when
// shared_experts), zeroes all deltas, and zeroes w4.base when readout_zero.
MoEWeights build_weights(const ScaleVector& scale, const LayerStds& stds, bool shared_experts,
                         bool readout_zero, uint64_t seed);

// Every intermediate of one forward evaluation, kept for the backward pass
// and for the decomposition probes. h2/h3i are computed for all M experts
// even under top-k; only the active set enters the aggregation.
struct ActivationCache {
    Vector x;
    Vector h1;                    // post-nonlinearity when gelu is on
    Vector h1_pre;                // pre-nonlinearity
    Vector psi;                   // router logits, length M
    Vector phi;                   // gates; 0 outside the active set
    std::vector<std::size_t> active; // sorted, size K (or M when soft)
    std::vector<Vector> h2;       // per expert, post-nonlinearity
    std::vector<Vector> h2_pre;
    std::vector<Vector> h3i;      // per expert
    Vector h3;
    double f = 0.0;
    bool diverged = false;
    std::string diverged_at;      // first offending tensor
};

ActivationCache forward(const MoEWeights& w, const Vector& x, const GateSpec& gate,
                        Nonlinearity nl = Nonlinearity::identity);

// Forward through the frozen initialization only (deltas ignored). Probes
// compare this against the current forward on the same input.
ActivationCache forward_base(const MoEWeights& w, const Vector& x, const GateSpec& gate,
                             Nonlinearity nl = Nonlinearity::identity);

// Gradients of chi * f. Weight gradients accumulate across calls, which is
// how a batch mean is assembled (pass chi/|batch| per sample).
struct GradientCache {
    ScaleVector scale;
    double chi = 0.0;             // last chi passed in
    Matrix gw1, gq, gw4;
    std::vector<Matrix> gw2, gw3;
    Vector g_h3;                   // d(chi f)/d h3
    std::vector<Vector> g_h3i;     // zero outside the active set
    std::vector<Vector> g_h2i;
    Vector g_phi;                  // length M
    Vector g_psi;                  // length M; zero for non-selected logits
    Vector g_h1_exp;               // expert-pathway part of d/d h1
    Vector g_h1_router;            // router-pathway part

    explicit GradientCache(const ScaleVector& s);
    void zero_weight_grads();
};

// Exact analytic gradients of chi*f for the cache produced by `forward` on
// the same weights. Under top-k, gradients flow only through the active set;
// non-selected logits receive exactly zero.
GradientCache backward(const MoEWeights& w, const ActivationCache& cache, double chi,
                       const GateSpec& gate, Nonlinearity nl = Nonlinearity::identity);

void backward_accumulate(const MoEWeights& w, const ActivationCache& cache, double chi,
                         const GateSpec& gate, GradientCache& out,
                         Nonlinearity nl = Nonlinearity::identity);

// Plain W4(W3(W2(W1 x))) chain with the gate forced to 1; only valid for
// M == 1. Degenerate-case oracle for the aggregation path.
double dense_equivalent_forward(const MoEWeights& w, const Vector& x);

// Applies the transpose of the gate Jacobian at the current gates:
// g_psi = (d phi / d psi)^T g_phi. Linear in g_phi; zero outside the
// active set.
void gate_jacobian_apply(const GateSpec& gate, const Vector& phi,
                         const std::vector<std::size_t>& active, const Vector& g_phi,
                         Vector& g_psi);

// ---------------------------------------------------------------------------
// Batched training path. Same math as forward/backward with columns as
// samples, but runs on materialized effective weights via GEMM. Checked
// against the per-sample path in the test suite.

struct DenseWeights {
    Matrix w1, q, w4;
    std::vector<Matrix> w2, w3;
    void refresh(const MoEWeights& w);
};

struct BatchCache {
    std::size_t batch = 0;
    Matrix x;                      // D x B
    Matrix h1, h1_pre;             // N x B
    Matrix psi, phi;               // M x B
    std::vector<std::vector<std::size_t>> active; // per column
    std::vector<Matrix> h2, h2_pre; // per expert, N_e x B
    std::vector<Matrix> h3i;        // per expert, N x B
    Matrix h3;                     // N x B
    Vector f;                      // length B
    bool diverged = false;
    std::string diverged_at;
};

void forward_batch(const DenseWeights& dw, const ScaleVector& s, const Matrix& x,
                   const GateSpec& gate, BatchCache& cache, Nonlinearity nl = Nonlinearity::identity);

// chi has one entry per column. Accumulates into `out`.
void backward_batch(const DenseWeights& dw, const ScaleVector& s, const BatchCache& cache,
                    const Vector& chi, const GateSpec& gate, GradientCache& out,
                    Nonlinearity nl = Nonlinearity::identity);

// Simple binary checkpoint of (scale, flags, base, delta).
void save_weights(const MoEWeights& w, const std::string& path);
MoEWeights load_weights(const std::string& path);

} // namespace moelab
