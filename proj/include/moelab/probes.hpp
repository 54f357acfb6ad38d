#pragma once

#include "moelab/model.hpp"
#include "moelab/params.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace moelab {

// Raised when a decomposition fails to reproduce the undecomposed quantity.
// These are exact identities; a violation beyond tolerance means the probe
// and the model disagree about the same arithmetic.
struct ProbeIdentityError : std::runtime_error {
    explicit ProbeIdentityError(const std::string& what) : std::runtime_error(what) {}
};

struct TermValue {
    double rms = 0.0;
    bool exact_zero = false;
};

// term name -> RMS at one probe step. std::map keeps CSV output ordered.
using TermMap = std::map<std::string, TermValue>;

inline constexpr double kIdentityTol = 1e-10;

// Sub-terms of the cross-expert aggregation h3 = A1 + A21 + A22 + A3 + D,
// computed from the (base, delta) weight splits at the gates of `cache`:
//   A1  = c * sum phi_i W3b W2b x0          (init)
//   A21 = c * sum phi_i W3b W2b dx          (propagating through frozen chain)
//   A22 = c * sum phi_i W3b dW2 x_t         (propagating through W2 update)
//   A3  = c * sum phi_i dW3 h2_0i           (effective)
//   D   = c * sum phi_i dW3 dh2_i           (cross)
// with x0/x_t the embed activation under base/current weights on the same
// input and dx, dh2 their differences. The five terms sum to h3 exactly;
// the identity is asserted to kIdentityTol relative.
TermMap decompose_forward_aggregation(const MoEWeights& w, const GateSpec& gate,
                                      const ActivationCache& cache, const ActivationCache& cache0);

// Splits the gradient of f at h1 into the eight expert-pathway pieces
// (W2, W3, W4 each taken as base or delta) and the four router-pathway
// pieces (Q base/delta x the W3-split of the gate gradient), plus the
// init/update grids of d f/d h3, d f/d h2i and d f/d phi. Piece sums are
// asserted against the full backward gradient to kIdentityTol relative.
TermMap decompose_backward_input_grad(const MoEWeights& w, const GateSpec& gate,
                                      const ActivationCache& cache);

// Generic per-layer split of h_t = W_t x_t on the probe input:
// init = W0 x0, propagating = W0 dx, effective = dW x0, cross = dW dx.
struct LayerUpdateSplit {
    double init = 0.0, propagating = 0.0, effective = 0.0, cross = 0.0, total = 0.0;
};
LayerUpdateSplit decompose_layer_update(LayerId layer, const MoEWeights& w,
                                        const ActivationCache& cache, const ActivationCache& cache0);

// Everything the coordinate checks record at one probe step: the per-layer
// init/propagating/effective/cross splits for h1, psi, h2, h3i, h3, f; the
// five aggregation terms; the backward piece grids; and the raw RMS values
// needed for alignment-ratio fits. Requires the identity (linear) model.
TermMap probe_all(const MoEWeights& w, const GateSpec& gate, const Vector& x);

// All term names probe_all can emit, in output order.
std::vector<std::string> all_term_names();

// One ratio observation at one width for an alignment-exponent fit.
struct AlignmentSample {
    double fan_in = 0.0;
    double product_rms = 0.0; // RMS(W x)
    double w_rms = 0.0;       // RMS(W)
    double x_rms = 0.0;       // RMS(x)
};

// Fits the exponent a in RMS(Wx)/(RMS(W) RMS(x)) ~ fan_in^a. Rank-one
// updates aligned with their input give a = 1; an i.i.d. matrix on an
// independent vector gives a = 1/2. Zero-ratio samples are dropped; at
// least two positive samples are required.
ExponentFit fit_alignment_exponent(const std::vector<AlignmentSample>& samples);

// (p, q) for one layer: p over effective-update samples, q over
// propagating-update samples.
std::pair<ExponentFit, ExponentFit> measure_alignment_exponent(
    const std::vector<AlignmentSample>& effective_samples,
    const std::vector<AlignmentSample>& propagating_samples);

// Time-indexed RMS norms of one term at one width/seed. Exact zeros are
// recorded as zero (flagged), never substituted.
struct TermSeries {
    std::string term;
    std::size_t width = 0;
    uint64_t seed = 0;
    std::vector<int> steps;
    std::vector<double> values;
    std::vector<uint8_t> exact_zero;
};

struct ProbeRecorder {
    std::size_t width = 0;
    uint64_t seed = 0;
    std::map<std::string, TermSeries> series;

    void record(int step, const TermMap& terms);
};

} // namespace moelab
