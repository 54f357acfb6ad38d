#pragma once

#include "moelab/catalog.hpp"
#include "moelab/model.hpp"
#include "moelab/optim.hpp"
#include "moelab/params.hpp"
#include "moelab/probes.hpp"
#include "moelab/task.hpp"

#include <map>
#include <string>
#include <vector>

namespace moelab {

// One campaign: a regime/parameterization/optimizer triple trained across a
// width ladder and seeds on a synthetic task, with probes on a step schedule.
// When `gate.topk` is set, the per-rung active count is taken from the scaled
// ScaleVector's K, not from the config value.
struct RunConfig {
    Regime regime = Regime::II;
    Parameterization param = Parameterization::muP;
    OptimizerKind optimizer = OptimizerKind::SGD;
    GateSpec gate = GateSpec::sigmoid_soft();
    RegimeTrajectory trajectory;
    std::vector<double> width_multipliers;
    std::vector<uint64_t> seeds;
    int steps = 200;
    std::size_t batch = 32;
    double eta = 0.5;
    double eps = 1e-8;
    Multipliers multipliers;
    TaskSpec task;
    std::vector<int> probe_schedule = {0, 1, 2, 3, 5, 10, 20, 50, 100, 200};
    double sp_lr_exponent = 0.0;
    Nonlinearity nonlinearity = Nonlinearity::identity;
    bool grad_clip = false;
    double grad_clip_norm = 1.0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.95;
    double exponent_tol = 0.15;
    double r2_floor = 0.8;
    double divergence_threshold = 1e12;

    // Exponent fits need >= 3 widths and >= 2 seeds; the step classes need
    // probes at steps 0 and 1 plus one at >= 2, which needs steps >= 3.
    void validate(bool for_exponents) const;
};

struct RunRecord {
    std::size_t width = 0; // embedding width N of this rung
    ScaleVector scale;
    uint64_t seed = 0;
    double width_multiplier = 1.0;
    std::vector<double> loss; // batch training loss per step, pre-update
    double final_loss = 0.0;  // mean over the last tenth of steps
    bool diverged = false;
    int diverged_step = -1;
    std::string diverged_at;
    std::map<std::string, TermSeries> series;
};

// One training run: scale the trajectory, derive rules, build weights, then
// forward/loss/backward/step over sequential minibatches, firing probes on
// schedule. Divergence stops the run with a flag; earlier records stay valid.
RunRecord run_training(const RunConfig& cfg, double width_multiplier, uint64_t seed);

// Seed streams used inside run_training, exposed so external oracles can
// rebuild the exact same weights, data, and probe input.
uint64_t run_weights_seed(uint64_t seed);
uint64_t run_data_seed(uint64_t seed);
uint64_t run_probe_seed(uint64_t seed);

struct Verdict {
    std::string term;
    TClass tclass = TClass::t0;
    ExponentFit fit;
    double predicted = 0.0;
    double abs_error = 0.0;
    bool pass = false;
    bool predicted_is_zero = false; // catalog predicts a structural zero
    bool structural_zero = false;   // verdict decided on exact zeros
    std::size_t dropped_zeros = 0;
    std::string note;
};

struct CoordCheckResult {
    std::vector<RunRecord> runs;
    std::vector<Verdict> verdicts;
    bool all_pass = true;
};

// Full coordinate-check campaign: average each term's RMS over seeds per
// width at the class step (t0 -> step 0, t1 -> step 1, t2+ -> last probed
// step), fit the log-log exponent, and compare against the catalog. Exact
// zeros are excluded from fits with a count; an all-zero term passes iff the
// catalog predicts a structural zero. The r-squared floor gates nonzero
// predictions (a zero-slope trend has no variance for r-squared to explain).
CoordCheckResult run_coord_check(const RunConfig& cfg, std::size_t jobs = 1);

struct SweepCell {
    std::size_t width = 0;
    double lr = 0.0;
    uint64_t seed = 0;
    double final_loss = 0.0;
    bool diverged = false;
};

struct SweepResult {
    std::vector<double> lr_grid;
    std::vector<std::size_t> widths;
    std::vector<SweepCell> cells; // width-major, then lr, then seed
    // per width: index into lr_grid of the best mean loss over non-diverged
    // seeds; -1 when every lr diverged at that width
    std::vector<int> argmin_lr_index;

    // grid steps between the argmin at the smallest and largest width
    int argmin_drift_steps() const;
};

SweepResult run_lr_sweep(const RunConfig& cfg, const std::vector<double>& lr_grid, std::size_t jobs = 1);

struct MultiplierGrid {
    std::vector<double> init_global = {1.0};
    std::vector<double> lr_global = {1.0};
    std::vector<double> lr_embed = {1.0};
    std::vector<double> lr_router = {1.0};
    std::vector<double> lr_expert_in = {1.0};
    std::vector<double> lr_expert_out = {1.0};
    std::vector<double> lr_readout = {1.0};
};

struct TunePoint {
    Multipliers mults;
    double mean_final_loss = 0.0;
    bool any_diverged = false;
};

struct TuneResult {
    Multipliers best;
    double best_loss = 0.0;
    std::vector<TunePoint> table; // full factorial, deterministic order
};

// Exhaustive factorial over the six-knob grid at the base width (multiplier
// 1), mean final loss across the config seeds.
TuneResult tune_multipliers(const RunConfig& cfg, const MultiplierGrid& grid, std::size_t jobs = 1);

struct GramReport {
    std::size_t m = 0, n = 0;
    double sigma = 0.0;
    std::size_t n_seeds = 0;
    bool all_zero = false;
    // W^T W: diagonal mean / (m sigma^2), off-diagonal std / (sigma^2 sqrt(m))
    double inner_diag_ratio = 0.0;
    double inner_offdiag_ratio = 0.0;
    // W W^T: same with n in place of m
    double outer_diag_ratio = 0.0;
    double outer_offdiag_ratio = 0.0;
};

// Concentration of Gram matrices of an i.i.d. Gaussian: diagonal mean
// m sigma^2, off-diagonal fluctuations sigma^2 sqrt(m) (and the transpose
// statement), measured across seeds.
GramReport gram_concentration_check(std::size_t m, std::size_t n, double sigma, std::size_t n_seeds,
                                    uint64_t seed0 = 1);

struct CrossLayerRung {
    ScaleVector scale;
    double entry_rms = 0.0;          // RMS of G entries, mean over seeds
    double entry_rms_predicted = 0.0; // sqrt(Ne sigma2^2 sigma3^2 / M)
    double gv_ratio = 0.0;           // RMS(G v)/RMS(v), mean over seeds
};

struct CrossLayerReport {
    std::vector<CrossLayerRung> rungs;
    ExponentFit gv_exponent;   // slope of RMS(Gv)/RMS(v) vs N
    double variance_ratio = 0.0; // empirical Var(G_ab) / closed form, at the largest rung
};

// G = (1/M) sum_i (W2i)^T (W3i)^T with the Regime III init stds. Entries
// scale like 1/sqrt(NM) and G contracts a fixed vector by 1/sqrt(M).
CrossLayerReport cross_layer_sum_check(const ScaleVector& base, const std::vector<double>& width_multipliers,
                                       std::size_t n_seeds, uint64_t seed0 = 1);

struct RouterCollapseReport {
    std::vector<std::size_t> widths;
    std::vector<double> psi_rms_t0;    // mean over seeds
    std::vector<double> psi_rms_final; // at the last probed step
    ExponentFit exponent_t0;
    ExponentFit exponent_final;
    bool decays = false;           // final-step exponent < -0.25
    bool psi0_exact_zero = false;  // zero-router-init case
    std::vector<RunRecord> runs;
};

// Regime I soft-softmax check: how the router logit norm moves with width.
RouterCollapseReport router_collapse_check(const RunConfig& cfg, std::size_t jobs = 1);

// Assembles alignment-ratio samples for one layer from coord-check records
// at a probe step: p from (eff_cur, dw, in), q from (prop, w0, din).
std::pair<ExponentFit, ExponentFit> alignment_exponents_from_runs(const std::vector<RunRecord>& runs,
                                                                  LayerId layer, int step);

} // namespace moelab
