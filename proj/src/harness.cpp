#include "moelab/harness.hpp"

#include "moelab/rng.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace moelab {

void RunConfig::validate(bool for_exponents) const {
    trajectory.base.validate();
    if (width_multipliers.empty()) throw std::invalid_argument("config: no width multipliers");
    if (seeds.empty()) throw std::invalid_argument("config: no seeds");
    if (steps < 1) throw std::invalid_argument("config: steps must be positive");
    if (batch == 0) throw std::invalid_argument("config: batch must be positive");
    if (eta <= 0.0 || eps <= 0.0) throw std::invalid_argument("config: eta and eps must be positive");
    if (task.input_dim != trajectory.base.d)
        throw std::invalid_argument("config: task input_dim must match the trajectory's D");
    if (probe_schedule.empty() || probe_schedule.front() != 0)
        throw std::invalid_argument("config: probe schedule must start at step 0");
    if (for_exponents) {
        if (width_multipliers.size() < 3)
            throw std::invalid_argument("config: exponent fits need at least 3 widths");
        if (seeds.size() < 2) throw std::invalid_argument("config: exponent fits need at least 2 seeds");
        if (steps < 3) throw std::invalid_argument("config: exponent fits need at least 3 steps");
        std::set<int> sched(probe_schedule.begin(), probe_schedule.end());
        if (!sched.count(0) || !sched.count(1))
            throw std::invalid_argument("config: probe schedule must include steps 0 and 1");
    }
}

namespace {

GateSpec gate_for_scale(const RunConfig& cfg, const ScaleVector& s) {
    GateSpec g = cfg.gate;
    if (g.topk) g.topk = s.k; // active count always tracks the scaled K
    g.validate(s);
    return g;
}

bool batch_exceeds_threshold(const BatchCache& c, double threshold) {
    auto over = [&](const Matrix& m) { return max_abs(m.a) > threshold; };
    if (over(c.h1) || over(c.psi) || over(c.h3)) return true;
    for (const auto& m : c.h3i)
        if (over(m)) return true;
    return max_abs(c.f) > threshold;
}

} // namespace

uint64_t run_weights_seed(uint64_t seed) { return rng::derive(seed, 0x77656967); }
uint64_t run_data_seed(uint64_t seed) { return rng::derive(seed, 0x64617461); }
uint64_t run_probe_seed(uint64_t seed) { return rng::derive(seed, 0x70726f62); }

RunRecord run_training(const RunConfig& cfg, double width_multiplier, uint64_t seed) {
    const ScaleVector scale = scale_trajectory(cfg.trajectory, width_multiplier);
    const GateSpec gate = gate_for_scale(cfg, scale);
    RuleSet rules = rules_for(cfg.regime, cfg.param, cfg.optimizer, scale, cfg.eta, cfg.eps,
                              cfg.sp_lr_exponent);
    rules.multipliers = cfg.multipliers;

    RunRecord rec;
    rec.width = scale.n;
    rec.scale = scale;
    rec.seed = seed;
    rec.width_multiplier = width_multiplier;

    MoEWeights weights = build_weights(scale, rules.init_stds(), rules.shared_experts,
                                       rules.readout_zero, run_weights_seed(seed));
    Dataset data = make_dataset(cfg.task, run_data_seed(seed));

    // Fixed probe input, same distribution as the task inputs.
    Vector x_probe(scale.d);
    fill_gaussian(x_probe, 1.0 / std::sqrt(static_cast<double>(scale.d)), run_probe_seed(seed));

    ProbeRecorder recorder;
    recorder.width = scale.n;
    recorder.seed = seed;
    std::set<int> schedule(cfg.probe_schedule.begin(), cfg.probe_schedule.end());
    auto fire_probe = [&](int step) {
        if (cfg.nonlinearity != Nonlinearity::identity) return; // probes are linear identities
        if (schedule.count(step)) recorder.record(step, probe_all(weights, gate, x_probe));
    };

    AdamState adam;
    if (cfg.optimizer == OptimizerKind::Adam) adam = AdamState(scale, cfg.adam_beta1, cfg.adam_beta2);

    DenseWeights dense;
    dense.refresh(weights);
    GradientCache grad(scale);
    BatchCache bcache;
    Matrix xb;
    Vector yb, chi(cfg.batch);

    fire_probe(0);
    for (int t = 0; t < cfg.steps; ++t) {
        data.batch(static_cast<std::size_t>(t), cfg.batch, xb, yb);
        forward_batch(dense, scale, xb, gate, bcache, cfg.nonlinearity);
        if (bcache.diverged || batch_exceeds_threshold(bcache, cfg.divergence_threshold)) {
            rec.diverged = true;
            rec.diverged_step = t;
            rec.diverged_at = bcache.diverged_at.empty() ? "threshold" : bcache.diverged_at;
            break;
        }
        double loss = 0.0;
        for (std::size_t b = 0; b < cfg.batch; ++b) {
            const double e = bcache.f[b] - yb[b];
            loss += e * e;
            chi[b] = 2.0 * e / static_cast<double>(cfg.batch);
        }
        loss /= static_cast<double>(cfg.batch);
        rec.loss.push_back(loss);

        grad.zero_weight_grads();
        backward_batch(dense, scale, bcache, chi, gate, grad, cfg.nonlinearity);
        if (cfg.grad_clip) clip_global_norm(grad, cfg.grad_clip_norm);
        try {
            if (cfg.optimizer == OptimizerKind::SGD)
                sgd_step(weights, grad, rules);
            else
                adam_step(weights, grad, rules, adam);
        } catch (const DivergenceError& e) {
            rec.diverged = true;
            rec.diverged_step = t;
            rec.diverged_at = e.what();
            break;
        }
        dense.refresh(weights);
        fire_probe(t + 1);
    }

    if (!rec.loss.empty()) {
        const std::size_t tail = std::max<std::size_t>(1, rec.loss.size() / 10);
        double s = 0.0;
        for (std::size_t i = rec.loss.size() - tail; i < rec.loss.size(); ++i) s += rec.loss[i];
        rec.final_loss = s / static_cast<double>(tail);
    } else {
        rec.final_loss = std::numeric_limits<double>::infinity();
    }
    if (rec.diverged) rec.final_loss = std::numeric_limits<double>::infinity();
    rec.series = std::move(recorder.series);
    return rec;
}

namespace {

// Runs one job per (index) over [0, n) on `jobs` threads; results are written
// to caller-owned slots, so scheduling cannot affect the output.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(jobs);
    for (std::size_t w = 0; w < jobs; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= n) return;
                    fn(i);
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

int class_step(TClass tc, const std::vector<int>& schedule, int steps) {
    switch (tc) {
        case TClass::t0: return 0;
        case TClass::t1: return 1;
        case TClass::t2p: {
            int best = -1;
            for (int s : schedule)
                if (s >= 2 && s <= steps && s > best) best = s;
            return best;
        }
    }
    return -1;
}

// value at a probe step, if that step was recorded before divergence
bool series_value_at(const TermSeries& ts, int step, double& value, bool& exact_zero) {
    for (std::size_t i = 0; i < ts.steps.size(); ++i) {
        if (ts.steps[i] == step) {
            value = ts.values[i];
            exact_zero = ts.exact_zero[i] != 0;
            return true;
        }
    }
    return false;
}

} // namespace

CoordCheckResult run_coord_check(const RunConfig& cfg, std::size_t jobs) {
    cfg.validate(true);
    CoordCheckResult result;
    const std::size_t n_cells = cfg.width_multipliers.size() * cfg.seeds.size();
    result.runs.resize(n_cells);
    parallel_for(n_cells, jobs, [&](std::size_t i) {
        const std::size_t wi = i / cfg.seeds.size();
        const std::size_t si = i % cfg.seeds.size();
        result.runs[i] = run_training(cfg, cfg.width_multipliers[wi], cfg.seeds[si]);
    });

    // Adam sub-term exponents are not cataloged; emit raw series only.
    if (cfg.optimizer != OptimizerKind::SGD) {
        result.all_pass = true;
        return result;
    }

    const std::size_t n_widths = cfg.width_multipliers.size();
    const std::size_t n_seeds = cfg.seeds.size();
    for (const std::string& term : catalog_terms(cfg.regime, cfg.param)) {
        for (TClass tc : {TClass::t0, TClass::t1, TClass::t2p}) {
            const Prediction pred = predict(cfg.regime, cfg.param, term, tc);
            if (pred.kind == Prediction::Kind::unspecified) continue;
            const int step = class_step(tc, cfg.probe_schedule, cfg.steps);

            Verdict v;
            v.term = term;
            v.tclass = tc;

            std::vector<std::pair<double, double>> pts;
            bool all_zero = true;
            bool missing = false;
            for (std::size_t wi = 0; wi < n_widths; ++wi) {
                double sum = 0.0;
                std::size_t n_live = 0;
                for (std::size_t si = 0; si < n_seeds; ++si) {
                    const RunRecord& rec = result.runs[wi * n_seeds + si];
                    auto it = rec.series.find(term);
                    double val = 0.0;
                    bool ez = false;
                    if (it == rec.series.end() || !series_value_at(it->second, step, val, ez)) {
                        missing = true;
                        continue;
                    }
                    if (ez) {
                        ++v.dropped_zeros;
                        continue;
                    }
                    all_zero = false;
                    sum += val;
                    ++n_live;
                }
                if (n_live > 0)
                    pts.push_back({static_cast<double>(result.runs[wi * n_seeds].width),
                                   sum / static_cast<double>(n_live)});
            }

            if (pred.kind == Prediction::Kind::zero) {
                v.structural_zero = true;
                v.predicted_is_zero = true;
                v.predicted = 0.0;
                v.pass = all_zero && !missing;
                if (missing) v.note = "missing probe data";
                else if (!all_zero) v.note = "expected structural zero, found nonzero values";
            } else {
                v.predicted = pred.exponent;
                if (all_zero) {
                    v.structural_zero = true;
                    v.pass = false;
                    v.note = "structural zero where an exponent was predicted";
                } else if (pts.size() < 3) {
                    v.pass = false;
                    v.note = "fewer than 3 usable widths";
                } else {
                    v.fit = ols_loglog_fit(pts);
                    v.abs_error = std::abs(v.fit.slope - v.predicted);
                    const bool r2_ok = v.predicted == 0.0 || v.fit.r_squared >= cfg.r2_floor;
                    v.pass = v.abs_error <= cfg.exponent_tol && r2_ok;
                    if (!r2_ok) v.note = "r2 below floor";
                }
            }
            result.all_pass = result.all_pass && v.pass;
            result.verdicts.push_back(std::move(v));
        }
    }
    return result;
}

int SweepResult::argmin_drift_steps() const {
    int first = -1, last = -1;
    for (std::size_t w = 0; w < widths.size(); ++w) {
        if (argmin_lr_index[w] < 0) continue;
        if (first < 0) first = argmin_lr_index[w];
        last = argmin_lr_index[w];
    }
    if (first < 0) return -1;
    return std::abs(last - first);
}

SweepResult run_lr_sweep(const RunConfig& cfg, const std::vector<double>& lr_grid, std::size_t jobs) {
    cfg.validate(false);
    if (lr_grid.empty()) throw std::invalid_argument("run_lr_sweep: empty lr grid");
    for (std::size_t i = 1; i < lr_grid.size(); ++i)
        if (lr_grid[i] <= lr_grid[i - 1])
            throw std::invalid_argument("run_lr_sweep: lr grid must be increasing");

    SweepResult res;
    res.lr_grid = lr_grid;
    const std::size_t n_w = cfg.width_multipliers.size();
    const std::size_t n_lr = lr_grid.size();
    const std::size_t n_s = cfg.seeds.size();
    res.cells.resize(n_w * n_lr * n_s);
    parallel_for(res.cells.size(), jobs, [&](std::size_t i) {
        const std::size_t wi = i / (n_lr * n_s);
        const std::size_t li = (i / n_s) % n_lr;
        const std::size_t si = i % n_s;
        RunConfig c = cfg;
        c.eta = lr_grid[li];
        c.probe_schedule = {0}; // sweeps measure loss only
        RunRecord rec = run_training(c, cfg.width_multipliers[wi], cfg.seeds[si]);
        res.cells[i] = SweepCell{rec.width, lr_grid[li], cfg.seeds[si], rec.final_loss, rec.diverged};
    });

    res.widths.resize(n_w);
    res.argmin_lr_index.assign(n_w, -1);
    for (std::size_t wi = 0; wi < n_w; ++wi) {
        res.widths[wi] = res.cells[wi * n_lr * n_s].width;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t li = 0; li < n_lr; ++li) {
            double sum = 0.0;
            bool any_diverged = false;
            for (std::size_t si = 0; si < n_s; ++si) {
                const SweepCell& c = res.cells[(wi * n_lr + li) * n_s + si];
                any_diverged = any_diverged || c.diverged;
                sum += c.final_loss;
            }
            if (any_diverged) continue; // flagged, never averaged
            const double mean = sum / static_cast<double>(n_s);
            if (mean < best) {
                best = mean;
                res.argmin_lr_index[wi] = static_cast<int>(li);
            }
        }
    }
    return res;
}

TuneResult tune_multipliers(const RunConfig& cfg, const MultiplierGrid& grid, std::size_t jobs) {
    cfg.validate(false);
    for (const auto* axis : {&grid.init_global, &grid.lr_global, &grid.lr_embed, &grid.lr_router,
                             &grid.lr_expert_in, &grid.lr_expert_out, &grid.lr_readout})
        if (axis->empty()) throw std::invalid_argument("tune_multipliers: empty grid axis");

    std::vector<Multipliers> points;
    for (double ig : grid.init_global)
        for (double lg : grid.lr_global)
            for (double le : grid.lr_embed)
                for (double lr : grid.lr_router)
                    for (double li : grid.lr_expert_in)
                        for (double lo : grid.lr_expert_out)
                            for (double lro : grid.lr_readout) {
                                Multipliers m;
                                m.init_global = ig;
                                m.lr_global = lg;
                                m.lr_layer = {le, lr, li, lo, lro};
                                points.push_back(m);
                            }

    TuneResult res;
    res.table.resize(points.size());
    parallel_for(points.size(), jobs, [&](std::size_t i) {
        RunConfig c = cfg;
        c.multipliers = points[i];
        c.probe_schedule = {0};
        double sum = 0.0;
        bool any_diverged = false;
        for (uint64_t seed : cfg.seeds) {
            RunRecord rec = run_training(c, 1.0, seed);
            any_diverged = any_diverged || rec.diverged;
            sum += rec.final_loss;
        }
        res.table[i] = TunePoint{points[i], sum / static_cast<double>(cfg.seeds.size()), any_diverged};
    });

    res.best_loss = std::numeric_limits<double>::infinity();
    for (const TunePoint& p : res.table) {
        if (!p.any_diverged && p.mean_final_loss < res.best_loss) {
            res.best_loss = p.mean_final_loss;
            res.best = p.mults;
        }
    }
    return res;
}

GramReport gram_concentration_check(std::size_t m, std::size_t n, double sigma, std::size_t n_seeds,
                                    uint64_t seed0) {
    if (m < 2 || n < 2) throw std::invalid_argument("gram_concentration_check: m, n >= 2");
    if (n_seeds == 0) throw std::invalid_argument("gram_concentration_check: needs seeds");
    GramReport rep;
    rep.m = m;
    rep.n = n;
    rep.sigma = sigma;
    rep.n_seeds = n_seeds;

    double diag_in = 0.0, off_in_sq = 0.0, diag_out = 0.0, off_out_sq = 0.0;
    std::size_t n_diag_in = 0, n_off_in = 0, n_diag_out = 0, n_off_out = 0;
    bool all_zero = true;
    for (std::size_t s = 0; s < n_seeds; ++s) {
        Matrix w = gaussian_matrix(m, n, sigma, rng::derive(seed0, 0x6772616d, s));
        if (max_abs(w.a) != 0.0) all_zero = false;
        Matrix inner(n, n);
        gemm_tn(inner, w, w); // W^T W
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) {
                    diag_in += inner(i, j);
                    ++n_diag_in;
                } else {
                    off_in_sq += inner(i, j) * inner(i, j);
                    ++n_off_in;
                }
            }
        Matrix outer(m, m);
        gemm_nt(outer, w, w); // W W^T
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                if (i == j) {
                    diag_out += outer(i, j);
                    ++n_diag_out;
                } else {
                    off_out_sq += outer(i, j) * outer(i, j);
                    ++n_off_out;
                }
            }
    }
    rep.all_zero = all_zero;
    if (sigma == 0.0) return rep; // ratios undefined; all_zero carries the result

    const double s2 = sigma * sigma;
    rep.inner_diag_ratio = (diag_in / static_cast<double>(n_diag_in)) / (static_cast<double>(m) * s2);
    rep.inner_offdiag_ratio = std::sqrt(off_in_sq / static_cast<double>(n_off_in)) /
                              (s2 * std::sqrt(static_cast<double>(m)));
    rep.outer_diag_ratio = (diag_out / static_cast<double>(n_diag_out)) / (static_cast<double>(n) * s2);
    rep.outer_offdiag_ratio = std::sqrt(off_out_sq / static_cast<double>(n_off_out)) /
                              (s2 * std::sqrt(static_cast<double>(n)));
    return rep;
}

CrossLayerReport cross_layer_sum_check(const ScaleVector& base, const std::vector<double>& width_multipliers,
                                       std::size_t n_seeds, uint64_t seed0) {
    if (width_multipliers.empty() || n_seeds == 0)
        throw std::invalid_argument("cross_layer_sum_check: empty ladder or seeds");
    CrossLayerReport rep;
    std::vector<std::pair<double, double>> gv_pts;
    RegimeTrajectory traj{Regime::III, base};
    for (double mult : width_multipliers) {
        const ScaleVector s = scale_trajectory(traj, mult);
        const double sigma2 = 1.0 / std::sqrt(static_cast<double>(s.n));
        const double sigma3 = 1.0 / std::sqrt(static_cast<double>(s.ne));
        CrossLayerRung rung;
        rung.scale = s;
        rung.entry_rms_predicted = std::sqrt(static_cast<double>(s.ne) * sigma2 * sigma2 * sigma3 *
                                             sigma3 / static_cast<double>(s.m));
        double entry_acc = 0.0, ratio_acc = 0.0, var_acc = 0.0;
        for (std::size_t sd = 0; sd < n_seeds; ++sd) {
            Matrix g(s.n, s.n);
            for (std::size_t i = 0; i < s.m; ++i) {
                Matrix w2 = gaussian_matrix(s.ne, s.n, sigma2, rng::derive(seed0, 2 * i + 10, sd));
                Matrix w3 = gaussian_matrix(s.n, s.ne, sigma3, rng::derive(seed0, 2 * i + 11, sd));
                // (W2)^T (W3)^T = (W3 W2)^T; accumulate via gemm on transposes
                gemm_tn(g, w2, w3, 1.0 / static_cast<double>(s.m), true);
            }
            const double erms = rms_norm(g);
            entry_acc += erms;
            var_acc += erms * erms; // mean of G_ab^2 = empirical Var (mean is 0)
            Vector v(s.n);
            fill_gaussian(v, 1.0, rng::derive(seed0, 0x76656331, sd));
            Vector gv(s.n, 0.0);
            matvec(g, v, gv);
            ratio_acc += rms_norm(gv) / rms_norm(v);
        }
        rung.entry_rms = entry_acc / static_cast<double>(n_seeds);
        rung.gv_ratio = ratio_acc / static_cast<double>(n_seeds);
        gv_pts.push_back({static_cast<double>(s.n), rung.gv_ratio});
        if (mult == width_multipliers.back()) {
            const double pred_var = rung.entry_rms_predicted * rung.entry_rms_predicted;
            rep.variance_ratio = (var_acc / static_cast<double>(n_seeds)) / pred_var;
        }
        rep.rungs.push_back(rung);
    }
    if (gv_pts.size() >= 2) rep.gv_exponent = ols_loglog_fit(gv_pts);
    return rep;
}

RouterCollapseReport router_collapse_check(const RunConfig& cfg, std::size_t jobs) {
    cfg.validate(false);
    RouterCollapseReport rep;
    const std::size_t n_w = cfg.width_multipliers.size();
    const std::size_t n_s = cfg.seeds.size();
    rep.runs.resize(n_w * n_s);
    parallel_for(n_w * n_s, jobs, [&](std::size_t i) {
        rep.runs[i] = run_training(cfg, cfg.width_multipliers[i / n_s], cfg.seeds[i % n_s]);
    });

    const int last_step = class_step(TClass::t2p, cfg.probe_schedule, cfg.steps);
    std::vector<std::pair<double, double>> pts0, ptsf;
    bool zero0 = true;
    for (std::size_t wi = 0; wi < n_w; ++wi) {
        double s0 = 0.0, sf = 0.0;
        std::size_t c0 = 0, cf = 0;
        for (std::size_t si = 0; si < n_s; ++si) {
            const RunRecord& rec = rep.runs[wi * n_s + si];
            auto it = rec.series.find("fwd/psi/total");
            if (it == rec.series.end()) continue;
            double v = 0.0;
            bool ez = false;
            if (series_value_at(it->second, 0, v, ez)) {
                if (!ez) {
                    zero0 = false;
                    s0 += v;
                    ++c0;
                }
            }
            if (series_value_at(it->second, last_step, v, ez) && !ez) {
                sf += v;
                ++cf;
            }
        }
        const std::size_t width = rep.runs[wi * n_s].width;
        rep.widths.push_back(width);
        rep.psi_rms_t0.push_back(c0 ? s0 / static_cast<double>(c0) : 0.0);
        rep.psi_rms_final.push_back(cf ? sf / static_cast<double>(cf) : 0.0);
        if (c0) pts0.push_back({static_cast<double>(width), s0 / static_cast<double>(c0)});
        if (cf) ptsf.push_back({static_cast<double>(width), sf / static_cast<double>(cf)});
    }
    rep.psi0_exact_zero = zero0;
    if (pts0.size() >= 2) rep.exponent_t0 = ols_loglog_fit(pts0);
    if (ptsf.size() >= 2) {
        rep.exponent_final = ols_loglog_fit(ptsf);
        rep.decays = rep.exponent_final.slope < -0.25;
    }
    return rep;
}

std::pair<ExponentFit, ExponentFit> alignment_exponents_from_runs(const std::vector<RunRecord>& runs,
                                                                  LayerId layer, int step) {
    const std::string prefix = std::string("aln/") + layer_name(layer);
    const char* prop_term = nullptr;
    switch (layer) {
        case LayerId::embed: prop_term = "fwd/h1/prop"; break;
        case LayerId::router: prop_term = "fwd/psi/prop"; break;
        case LayerId::expert_in: prop_term = "fwd/h2i/prop"; break;
        case LayerId::expert_out: prop_term = "fwd/h3i/prop"; break;
        case LayerId::readout: prop_term = "fwd/f/prop"; break;
    }
    auto fan_in = [&](const ScaleVector& s) -> double {
        switch (layer) {
            case LayerId::embed: return static_cast<double>(s.d);
            case LayerId::router: return static_cast<double>(s.n);
            case LayerId::expert_in: return static_cast<double>(s.n);
            case LayerId::expert_out: return static_cast<double>(s.ne);
            case LayerId::readout: return static_cast<double>(s.n);
        }
        return 0.0;
    };

    struct Acc {
        std::array<double, 6> sums = {0, 0, 0, 0, 0, 0};
        double fan_in = 0.0;
        std::size_t count = 0;
    };
    std::map<std::size_t, Acc> acc; // width -> mean inputs over seeds
    for (const RunRecord& rec : runs) {
        auto val = [&](const std::string& term, double& out) {
            auto it = rec.series.find(term);
            double v = 0.0;
            bool ez = false;
            if (it != rec.series.end() && series_value_at(it->second, step, v, ez)) {
                out = v;
                return true;
            }
            return false;
        };
        double eff = 0, dw = 0, in = 0, prop = 0, w0 = 0, din = 0;
        if (!val(prefix + "/eff_cur", eff) || !val(prefix + "/dw", dw) || !val(prefix + "/in", in) ||
            !val(prefix + "/w0", w0) || !val(prefix + "/din", din) || !val(prop_term, prop))
            continue;
        Acc& a = acc[rec.width];
        a.sums[0] += eff;
        a.sums[1] += dw;
        a.sums[2] += in;
        a.sums[3] += prop;
        a.sums[4] += w0;
        a.sums[5] += din;
        a.fan_in = fan_in(rec.scale);
        a.count += 1;
    }
    std::vector<AlignmentSample> effs, props;
    for (auto& [width, a] : acc) {
        const double c = static_cast<double>(a.count);
        effs.push_back({a.fan_in, a.sums[0] / c, a.sums[1] / c, a.sums[2] / c});
        props.push_back({a.fan_in, a.sums[3] / c, a.sums[4] / c, a.sums[5] / c});
    }
    return measure_alignment_exponent(effs, props);
}

} // namespace moelab
