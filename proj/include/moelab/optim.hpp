#pragma once

#include "moelab/model.hpp"
#include "moelab/params.hpp"

#include <stdexcept>
#include <vector>

namespace moelab {

// Raised when a non-finite gradient or update is encountered; names the layer.
struct DivergenceError : std::runtime_error {
    explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

// Plain SGD with layerwise learning rates: delta <- delta - lr_layer * grad.
// Base tensors are never touched.
void sgd_step(MoEWeights& w, const GradientCache& g, const RuleSet& rules);

// First/second moments per weight tensor, in the same layout as MoEWeights.
struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.95;
    long t = 0;
    Matrix m_w1, v_w1, m_q, v_q, m_w4, v_w4;
    std::vector<Matrix> m_w2, v_w2, m_w3, v_w3;

    AdamState() = default;
    AdamState(const ScaleVector& s, double b1 = 0.9, double b2 = 0.95);
};

// Adam with bias correction and per-layer lr. Faithfulness: the layerwise
// epsilon factor F is realized by feeding g/F to the moment recursions and
// using a unit epsilon internally, which in exact arithmetic equals running
// standard Adam with eps = F. Keeping the optimizer inputs near unit scale
// avoids the N^-2 gradient underflow of the expert output layer.
void adam_step(MoEWeights& w, const GradientCache& g, const RuleSet& rules, AdamState& state);

// Optional global-norm clip over all weight gradients; off by default.
void clip_global_norm(GradientCache& g, double max_norm);

} // namespace moelab
