#pragma once

#include "moelab/model.hpp"

#include <array>
#include <string>
#include <vector>

namespace moelab {

// Co-scaling regimes: which of (N, N_e, M, K) diverge together.
//   I   - N, N_e grow; M, K fixed
//   II  - N, M, K grow; N_e fixed (bottleneck)
//   III - all grow proportionally
enum class Regime { I, II, III };

enum class Parameterization { SP, muP, MSSP };
enum class OptimizerKind { SGD, Adam };

enum class LayerId : int { embed = 0, router = 1, expert_in = 2, expert_out = 3, readout = 4 };
inline constexpr std::array<LayerId, 5> kAllLayers = {LayerId::embed, LayerId::router, LayerId::expert_in,
                                                      LayerId::expert_out, LayerId::readout};
const char* layer_name(LayerId l);

// Concrete per-layer numbers, already evaluated at a ScaleVector.
struct LayerRule {
    double init_std = 0.0;
    double sgd_lr = 0.0;
    double adam_lr = 0.0;
    double adam_eps = 0.0;
};

// Tuning knobs mirroring the six-knob grid: a global init multiplier, a
// global lr multiplier, and one lr multiplier per layer. All default 1.
struct Multipliers {
    double init_global = 1.0;
    double lr_global = 1.0;
    std::array<double, 5> lr_layer = {1.0, 1.0, 1.0, 1.0, 1.0};

    double lr_mult(LayerId l) const { return lr_global * lr_layer[static_cast<int>(l)]; }
};

struct RuleSet {
    Regime regime = Regime::I;
    Parameterization param = Parameterization::muP;
    std::array<LayerRule, 5> rules;
    bool shared_experts = false; // Regime III MSSP only
    bool readout_zero = false;   // Regime II/III MSSP
    double base_lr = 0.0;
    double base_eps = 0.0;
    Multipliers multipliers;

    const LayerRule& rule(LayerId l) const { return rules[static_cast<int>(l)]; }
    LayerRule& rule(LayerId l) { return rules[static_cast<int>(l)]; }

    double lr(LayerId l, OptimizerKind opt) const {
        const LayerRule& r = rule(l);
        return multipliers.lr_mult(l) * (opt == OptimizerKind::SGD ? r.sgd_lr : r.adam_lr);
    }
    LayerStds init_stds() const {
        const double g = multipliers.init_global;
        return LayerStds{g * rule(LayerId::embed).init_std, g * rule(LayerId::router).init_std,
                         g * rule(LayerId::expert_in).init_std, g * rule(LayerId::expert_out).init_std,
                         g * rule(LayerId::readout).init_std};
    }
};

// A width ladder: fixed base dimensions scaled regime-appropriately.
struct RegimeTrajectory {
    Regime regime = Regime::I;
    ScaleVector base;
};

// Regime I: N, N_e scale, M, K fixed. Regime II: N, M, K scale, N_e fixed.
// Regime III: everything scales. Dimensions round to nearest, minimum 1.
ScaleVector scale_trajectory(const RegimeTrajectory& traj, double n);

// Evaluated per-layer rules for one (regime, parameterization) pair at a
// concrete scale. Both optimizer columns are always filled; `optimizer`
// only validates that the caller asked for a supported combination.
// `sp_lr_exponent` is the SP global-lr exponent c (lr = eta * N^-c).
RuleSet rules_for(Regime regime, Parameterization param, OptimizerKind optimizer,
                  const ScaleVector& scale, double eta, double eps, double sp_lr_exponent = 0.0);

// One row of the full Mixtral-style prescription.
struct ConfigRow {
    std::string layer;
    double init_std = -1.0; // -1 marks not-applicable (gains without init scale)
    double adam_lr = -1.0;
    double adam_eps = -1.0;
    std::string notes;
};

struct MixtralConfig {
    Regime regime;
    ScaleVector scale;
    std::size_t depth = 1;
    double base_lr = 0.0;
    double base_eps = 0.0;
    std::vector<ConfigRow> rows;
    std::string to_json() const;
};

// Emits every row of the full-architecture AdamW prescription evaluated at
// the target scale and depth: init stds, Adam lrs, Adam eps with depth
// factors, residual branch scale 1/L, aggregation multiplier 1/K, aux-loss
// and z-loss multipliers, and weight-decay guidance.
MixtralConfig emit_mixtral_config(Regime regime, const ScaleVector& scale, std::size_t depth,
                                  double base_lr, double base_eps);

const char* regime_name(Regime r);
const char* param_name(Parameterization p);
const char* optimizer_name(OptimizerKind o);
Regime regime_from_string(const std::string& s);
Parameterization param_from_string(const std::string& s);
OptimizerKind optimizer_from_string(const std::string& s);

} // namespace moelab
