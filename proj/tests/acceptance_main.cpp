// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Campaign artifacts (series, verdicts, reports) land in ./acceptance_artifacts.

#include "moelab/harness.hpp"
#include "moelab/io.hpp"
#include "moelab/rng.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

using namespace moelab;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;
std::string g_outdir = "acceptance_artifacts";

void report(const std::string& id, bool pass, const std::string& detail) {
    std::printf("%-4s %s  %s\n", id.c_str(), pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

const Verdict* find_verdict(const CoordCheckResult& res, const std::string& term, TClass tc) {
    for (const Verdict& v : res.verdicts)
        if (v.term == term && v.tclass == tc) return &v;
    return nullptr;
}

struct SlopeCheck {
    std::string term;
    TClass tclass;
    double target;
    double tol;
};

bool check_slopes(const CoordCheckResult& res, const std::vector<SlopeCheck>& checks,
                  std::string& detail) {
    bool ok = true;
    std::ostringstream o;
    for (const SlopeCheck& c : checks) {
        const Verdict* v = find_verdict(res, c.term, c.tclass);
        if (!v || v->structural_zero) {
            ok = false;
            o << c.term << "@" << tclass_name(c.tclass) << "=missing ";
            continue;
        }
        const double err = std::abs(v->fit.slope - c.target);
        if (err > c.tol) ok = false;
        o << c.term << "@" << tclass_name(c.tclass) << "=" << fmt(v->fit.slope) << "(want "
          << fmt(c.target) << "±" << fmt(c.tol) << ") ";
    }
    detail = o.str();
    return ok;
}

RunConfig base_config(Regime regime, Parameterization param) {
    RunConfig cfg;
    cfg.regime = regime;
    cfg.param = param;
    cfg.optimizer = OptimizerKind::SGD;
    cfg.gate = GateSpec::sigmoid_soft();
    cfg.trajectory.regime = regime;
    cfg.seeds = {1, 2, 3, 4};
    cfg.steps = 200;
    cfg.batch = 32;
    cfg.eps = 1e-8;
    cfg.task.input_dim = 8;
    cfg.task.dataset_size = 6400;
    cfg.probe_schedule = {0, 1, 2, 3, 5, 10, 20, 50, 100, 200};
    return cfg;
}

bool relclose(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), 1e-6});
}

// ---------------------------------------------------------------------------

CoordCheckResult run_campaign(const RunConfig& cfg, const std::string& tag, std::size_t jobs) {
    CoordCheckResult res = run_coord_check(cfg, jobs);
    const std::string dir = g_outdir + "/" + tag;
    fs::create_directories(dir);
    write_series_csv(dir + "/series.csv", res.runs);
    write_verdicts_csv(dir + "/verdicts.csv", res.verdicts);
    write_text_file(dir + "/summary.json", coord_check_summary_json(cfg, res));
    return res;
}

void criterion_1_and_4a(std::size_t jobs, bool& identities_ok) {
    const auto start = std::chrono::steady_clock::now();

    RunConfig mup = base_config(Regime::II, Parameterization::muP);
    mup.trajectory.base = ScaleVector{64, 16, 4, 4, 8};
    mup.width_multipliers = {1, 2, 4, 8, 16};
    mup.eta = 0.15;

    RunConfig mssp = mup;
    mssp.param = Parameterization::MSSP;

    bool threw = false;
    std::string detail_a, detail_b;
    bool ok_a = false, ok_b = false;
    std::size_t diverged = 0;
    try {
        CoordCheckResult res_mup = run_campaign(mup, "c1_regime2_mup", jobs);
        CoordCheckResult res_mssp = run_campaign(mssp, "c1_regime2_mssp", jobs);
        for (const auto& r : res_mup.runs) diverged += r.diverged;
        for (const auto& r : res_mssp.runs) diverged += r.diverged;

        ok_a = check_slopes(res_mup,
                            {{"agg/A1", TClass::t2p, -0.5, 0.15},
                             {"fwd/h3/total", TClass::t0, -0.5, 0.15},
                             {"bwd/h2i/init_init", TClass::t0, -1.5, 0.2},
                             {"bwd/h2i/init_init", TClass::t1, -1.5, 0.2},
                             {"bwd/h2i/init_init", TClass::t2p, -1.5, 0.2}},
                            detail_a);
        ok_b = check_slopes(res_mssp,
                            {{"agg/A1", TClass::t2p, 0.0, 0.15},
                             {"agg/A21", TClass::t2p, 0.0, 0.15},
                             {"agg/A22", TClass::t2p, 0.0, 0.15},
                             {"agg/A3", TClass::t2p, 0.0, 0.15},
                             {"agg/D", TClass::t2p, 0.0, 0.15},
                             {"fwd/h3i/total", TClass::t0, 0.5, 0.15},
                             {"bwd/h3/total", TClass::t2p, -1.0, 0.15}},
                            detail_b);
    } catch (const ProbeIdentityError& e) {
        threw = true;
        identities_ok = false;
        detail_a = std::string("identity violation: ") + e.what();
    }
    const double secs =
        std::chrono::duration_cast<std::chrono::seconds>(std::chrono::steady_clock::now() - start)
            .count();
    const bool budget_ok = secs <= 900.0;
    report("C1a", !threw && ok_a && budget_ok && diverged == 0,
           "regime II muP exponents: " + detail_a + "runtime " + fmt(secs) + "s");
    report("C1b", !threw && ok_b && budget_ok && diverged == 0,
           "regime II MSSP exponents: " + detail_b);
}

void criterion_2(std::size_t jobs, bool& identities_ok) {
    // A shorter window than Regime II: the sub-leading aggregation pieces
    // equilibrate by t ~ 50 and then random-walk drift at the loss floor
    // slowly steepens the A21 fit at these expert counts.
    RunConfig mup = base_config(Regime::III, Parameterization::muP);
    mup.trajectory.base = ScaleVector{64, 64, 4, 4, 8};
    mup.width_multipliers = {1, 2, 4, 8};
    mup.eta = 0.05;
    mup.steps = 100;
    mup.probe_schedule = {0, 1, 2, 3, 5, 10, 20, 50, 100};

    RunConfig mssp = mup;
    mssp.param = Parameterization::MSSP;

    bool threw = false;
    std::string detail_a, detail_b;
    bool ok_a = false, ok_b = false;
    try {
        CoordCheckResult res_mup = run_campaign(mup, "c2_regime3_mup", jobs);
        CoordCheckResult res_mssp = run_campaign(mssp, "c2_regime3_mssp", jobs);
        ok_a = check_slopes(res_mup,
                            {{"agg/A1", TClass::t2p, -0.5, 0.15},
                             {"agg/A21", TClass::t2p, -0.5, 0.15},
                             {"agg/A22", TClass::t2p, 0.0, 0.15},
                             {"agg/A3", TClass::t2p, 0.0, 0.15}},
                            detail_a);
        ok_b = check_slopes(res_mssp,
                            {{"agg/A1", TClass::t2p, 0.0, 0.15},
                             {"agg/A21", TClass::t2p, 0.0, 0.15},
                             {"agg/A22", TClass::t2p, 0.0, 0.15},
                             {"agg/A3", TClass::t2p, 0.0, 0.15},
                             {"agg/D", TClass::t2p, 0.0, 0.15}},
                            detail_b);
    } catch (const ProbeIdentityError& e) {
        threw = true;
        identities_ok = false;
        detail_a = std::string("identity violation: ") + e.what();
    }
    report("C2a", !threw && ok_a, "regime III muP exponents: " + detail_a);
    report("C2b", !threw && ok_b, "regime III MSSP (shared init) exponents: " + detail_b);
}

void criterion_3(std::size_t jobs, bool& identities_ok) {
    RunConfig mup = base_config(Regime::I, Parameterization::muP);
    mup.gate = GateSpec::softmax_soft();
    mup.trajectory.base = ScaleVector{64, 64, 8, 8, 8};
    mup.width_multipliers = {1, 2, 4, 8, 16};
    mup.seeds = {1, 2, 3, 4, 5, 6, 7, 8};
    mup.steps = 50;
    mup.eta = 0.35;
    mup.probe_schedule = {0, 1, 2, 5, 10, 20, 50};

    bool threw = false;
    RouterCollapseReport rep_mup, rep_mssp;
    try {
        rep_mup = router_collapse_check(mup, jobs);
        RunConfig mssp = mup;
        mssp.param = Parameterization::MSSP;
        rep_mssp = router_collapse_check(mssp, jobs);
        fs::create_directories(g_outdir + "/c3_regime1");
        write_text_file(g_outdir + "/c3_regime1/mup_report.json", router_collapse_report_json(rep_mup));
        write_text_file(g_outdir + "/c3_regime1/mssp_report.json",
                        router_collapse_report_json(rep_mssp));
        write_series_csv(g_outdir + "/c3_regime1/mup_series.csv", rep_mup.runs);
    } catch (const ProbeIdentityError& e) {
        threw = true;
        identities_ok = false;
    }
    const bool ok = !threw && rep_mup.exponent_final.slope < -0.25 && rep_mssp.psi0_exact_zero;
    report("C3", ok,
           "regime I router: muP psi exponent " + fmt(rep_mup.exponent_final.slope) +
               " (< -0.25 wanted), MSSP psi0 exact zero = " + (rep_mssp.psi0_exact_zero ? "yes" : "no"));
}

void criterion_4(bool identities_ok_from_campaigns) {
    // Direct randomized identity checks on trained states, all gate kinds.
    bool ok = identities_ok_from_campaigns;
    std::size_t checked = 0;
    try {
        for (uint64_t seed : {1ull, 2ull}) {
            for (Parameterization p : {Parameterization::muP, Parameterization::MSSP}) {
                RunConfig cfg = base_config(Regime::II, p);
                cfg.trajectory.base = ScaleVector{32, 8, 4, 2, 8};
                cfg.width_multipliers = {1};
                cfg.seeds = {seed};
                cfg.steps = 7;
                cfg.probe_schedule = {0, 1, 2, 3, 5, 7};
                cfg.eta = 0.3;
                cfg.gate = seed == 1 ? GateSpec::sigmoid_topk(2) : GateSpec::softmax_soft();
                RunRecord rec = run_training(cfg, 1.0, seed); // probes assert internally
                checked += rec.series.empty() ? 0 : rec.series.begin()->second.steps.size();
            }
        }
    } catch (const ProbeIdentityError&) {
        ok = false;
    }
    report("C4", ok,
           "exact decomposition identities at every probed step (1e-10 relative), " +
               std::to_string(checked) + " extra probe steps checked");
}

void criterion_5() {
    bool ok = true;
    std::string worst_note = "max rel err ";
    double worst = 0.0;
    for (int variant = 0; variant < 4; ++variant) {
        const GateSpec gate = variant == 0   ? GateSpec::sigmoid_soft(1.1)
                              : variant == 1 ? GateSpec::softmax_soft(0.9)
                              : variant == 2 ? GateSpec::sigmoid_topk(2, 1.1)
                                             : GateSpec::softmax_topk(2, 0.9);
        ScaleVector s{8, 4, 4, 4, 4};
        LayerStds stds{0.5, 0.4, 0.4, 0.5, 0.15};
        MoEWeights w = build_weights(s, stds, false, false, 97 + variant);
        // trained-state deltas
        rng::SplitMix64 r(7 + variant);
        for (Matrix* m : {&w.w1.delta, &w.q.delta, &w.w4.delta})
            for (double& v : m->a) v += 0.1 * r.next_gaussian();
        for (std::size_t i = 0; i < s.m; ++i) {
            for (double& v : w.w2[i].delta.a) v += 0.1 * r.next_gaussian();
            for (double& v : w.w3[i].delta.a) v += 0.1 * r.next_gaussian();
        }
        Vector x = {0.5, -0.8, 1.2, 0.3};
        ActivationCache cache = forward(w, x, gate);
        GradientCache g = backward(w, cache, 1.0, gate);
        const double h = 1e-6;
        auto fd_check = [&](Matrix& delta, const Matrix& grad) {
            for (std::size_t idx = 0; idx < delta.a.size(); ++idx) {
                const double saved = delta.a[idx];
                delta.a[idx] = saved + h;
                const double fp = forward(w, x, gate).f;
                delta.a[idx] = saved - h;
                const double fm = forward(w, x, gate).f;
                delta.a[idx] = saved;
                const double fd = (fp - fm) / (2.0 * h);
                const double denom = std::max({std::abs(fd), std::abs(grad.a[idx]), 1e-6});
                const double rel = std::abs(grad.a[idx] - fd) / denom;
                worst = std::max(worst, rel);
                if (rel > 1e-5) ok = false;
            }
        };
        fd_check(w.w1.delta, g.gw1);
        fd_check(w.q.delta, g.gq);
        for (std::size_t i = 0; i < s.m; ++i) {
            fd_check(w.w2[i].delta, g.gw2[i]);
            fd_check(w.w3[i].delta, g.gw3[i]);
        }
        fd_check(w.w4.delta, g.gw4);
    }
    std::ostringstream o;
    o << "analytic vs central differences on (D,N,Ne,M)=(4,8,4,4), all gates: " << worst_note
      << worst;
    report("C5", ok, o.str());
}

void criterion_6() {
    ScaleVector s{12, 6, 4, 4, 6};
    RuleSet rules = rules_for(Regime::II, Parameterization::muP, OptimizerKind::Adam, s, 0.01, 1e-4);
    RuleSet rules_scaled = rules;
    const double c = 321.0;
    for (auto& r : rules_scaled.rules) r.adam_eps *= c;
    MoEWeights wa = build_weights(s, rules.init_stds(), false, false, 5);
    MoEWeights wb = build_weights(s, rules.init_stds(), false, false, 5);
    AdamState sa(s), sb(s);
    GateSpec gate = GateSpec::sigmoid_soft();
    Vector x(s.d);
    fill_gaussian(x, 1.0, 33);
    bool ok = true;
    double worst = 0.0;
    for (int t = 0; t < 10; ++t) {
        ActivationCache ca = forward(wa, x, gate);
        GradientCache ga = backward(wa, ca, 2.0 * (ca.f - 0.9), gate);
        adam_step(wa, ga, rules, sa);
        ActivationCache cb = forward(wb, x, gate);
        GradientCache gb = backward(wb, cb, c * 2.0 * (cb.f - 0.9), gate);
        adam_step(wb, gb, rules_scaled, sb);
        // the two runs must stay identical, so the dynamics never branch
        for (std::size_t i = 0; i < wa.w4.delta.a.size(); ++i)
            worst = std::max(worst, std::abs(wa.w4.delta.a[i] - wb.w4.delta.a[i]));
    }
    auto cmp = [&](const Matrix& a, const Matrix& b) {
        for (std::size_t i = 0; i < a.a.size(); ++i) {
            worst = std::max(worst, std::abs(a.a[i] - b.a[i]));
            if (!relclose(a.a[i], b.a[i], 1e-12) && std::abs(a.a[i] - b.a[i]) > 1e-15) ok = false;
        }
    };
    cmp(wa.w1.delta, wb.w1.delta);
    cmp(wa.q.delta, wb.q.delta);
    cmp(wa.w4.delta, wb.w4.delta);
    for (std::size_t i = 0; i < s.m; ++i) {
        cmp(wa.w2[i].delta, wb.w2[i].delta);
        cmp(wa.w3[i].delta, wb.w3[i].delta);
    }
    std::ostringstream o;
    o << "scaled-gradient run equals eps-scaled run over 10 Adam steps, max abs gap " << worst;
    report("C6", ok, o.str());
}

void criterion_7() {
    GramReport rep = gram_concentration_check(256, 256, 1.0 / 16.0, 16);
    const bool diag_ok = std::abs(rep.inner_diag_ratio - 1.0) <= 0.05 &&
                         std::abs(rep.outer_diag_ratio - 1.0) <= 0.05;
    const bool off_ok = std::abs(rep.inner_offdiag_ratio - 1.0) <= 0.15 &&
                        std::abs(rep.outer_offdiag_ratio - 1.0) <= 0.15;
    CrossLayerReport cross = cross_layer_sum_check(ScaleVector{64, 64, 4, 4, 4}, {1, 2, 4, 8}, 4);
    const bool exp_ok = std::abs(cross.gv_exponent.slope + 0.5) <= 0.1;
    const bool var_ok = std::abs(cross.variance_ratio - 1.0) <= 0.10;
    fs::create_directories(g_outdir + "/c7_lemmas");
    write_text_file(g_outdir + "/c7_lemmas/gram.json", gram_report_json(rep));
    write_text_file(g_outdir + "/c7_lemmas/cross_layer.json", cross_layer_report_json(cross));
    report("C7", diag_ok && off_ok && exp_ok && var_ok,
           "gram diag " + fmt(rep.inner_diag_ratio) + "/" + fmt(rep.outer_diag_ratio) + ", offdiag " +
               fmt(rep.inner_offdiag_ratio) + "/" + fmt(rep.outer_offdiag_ratio) + ", Gv exponent " +
               fmt(cross.gv_exponent.slope) + ", variance ratio " + fmt(cross.variance_ratio));
}

void criterion_8() {
    // First nonzero expert-out update: rank-one closed form, entrywise.
    bool ok = true;
    double worst = 0.0;
    auto entry_close = [&](double a, double b) {
        const double gap = std::abs(a - b);
        worst = std::max(worst, gap / std::max({std::abs(a), std::abs(b), 1e-12}));
        if (gap > 1e-12 * std::max({std::abs(a), std::abs(b), 1.0})) ok = false;
    };

    // muP: first update happens at step 1
    {
        ScaleVector s{32, 16, 4, 4, 8};
        RuleSet rules = rules_for(Regime::II, Parameterization::muP, OptimizerKind::SGD, s, 0.2, 1e-8);
        MoEWeights w = build_weights(s, rules.init_stds(), false, false, 11);
        GateSpec gate = GateSpec::sigmoid_soft();
        Vector x(s.d);
        fill_gaussian(x, 0.5, 21);
        ActivationCache c = forward(w, x, gate);
        const double y = 1.1;
        const double chi = 2.0 * (c.f - y);
        GradientCache g = backward(w, c, chi, gate);
        MoEWeights w_before = w;
        sgd_step(w, g, rules);
        const double eta3 = rules.lr(LayerId::expert_out, OptimizerKind::SGD);
        for (std::size_t i = 0; i < s.m; ++i) {
            const double pref = -eta3 * chi * c.phi[i] / static_cast<double>(s.m);
            for (std::size_t a = 0; a < s.n; ++a)
                for (std::size_t b = 0; b < s.ne; ++b)
                    entry_close(w.w3[i].delta(a, b),
                                pref * w_before.w4.base(0, a) * c.h2[i][b]);
        }
    }

    // MSSP: readout moves at step 1, the expert-out update first appears at
    // step 2 through the step-1 readout delta.
    {
        ScaleVector s{32, 16, 4, 4, 8};
        RuleSet rules = rules_for(Regime::II, Parameterization::MSSP, OptimizerKind::SGD, s, 0.2, 1e-8);
        MoEWeights w = build_weights(s, rules.init_stds(), rules.shared_experts, rules.readout_zero, 13);
        GateSpec gate = GateSpec::sigmoid_soft();
        Vector x(s.d);
        fill_gaussian(x, 0.5, 23);
        const double y = 0.8;

        ActivationCache c0 = forward(w, x, gate);
        const double chi0 = 2.0 * (c0.f - y);
        GradientCache g0 = backward(w, c0, chi0, gate);
        sgd_step(w, g0, rules);
        for (std::size_t i = 0; i < s.m; ++i)
            for (double v : w.w3[i].delta.a) ok = ok && v == 0.0; // still frozen after step 1

        ActivationCache c1 = forward(w, x, gate);
        const double chi1 = 2.0 * (c1.f - y);
        GradientCache g1 = backward(w, c1, chi1, gate);
        Matrix w4_at_step1 = w.w4.delta; // W4 = 0 + Delta1 W4
        sgd_step(w, g1, rules);
        const double eta3 = rules.lr(LayerId::expert_out, OptimizerKind::SGD);
        for (std::size_t i = 0; i < s.m; ++i) {
            const double pref = -eta3 * chi1 * c1.phi[i] / static_cast<double>(s.m);
            for (std::size_t a = 0; a < s.n; ++a)
                for (std::size_t b = 0; b < s.ne; ++b)
                    entry_close(w.w3[i].delta(a, b), pref * w4_at_step1(0, a) * c1.h2[i][b]);
        }
    }
    std::ostringstream o;
    o << "rank-one first expert-out updates (muP step 1, MSSP step 2), worst rel gap " << worst;
    report("C8", ok, o.str());
}

void criterion_9() {
    bool ok = true;
    std::ostringstream o;
    struct Case {
        ScaleVector s;
        std::size_t L;
    };
    for (const Case& tc : {Case{{2048, 16, 128, 64, 512}, 12}, Case{{512, 16, 32, 16, 128}, 4},
                           Case{{128, 16, 8, 4, 64}, 1}}) {
        MixtralConfig mc = emit_mixtral_config(Regime::II, tc.s, tc.L, 1.0, 1e-8);
        const double N = double(tc.s.n), Ne = double(tc.s.ne), M = double(tc.s.m), L = double(tc.L);
        for (const ConfigRow& row : mc.rows) {
            if (row.layer == "expert_layer2") {
                ok = ok && relclose(row.init_std, std::sqrt(M / Ne), 1e-12);
                ok = ok && relclose(row.adam_lr, 1.0 / Ne, 1e-12);
                ok = ok && relclose(row.adam_eps, 1e-8 / (N * M * L), 1e-12);
            }
            if (row.layer == "router") ok = ok && relclose(row.adam_eps, 1e-8 / (M * L), 1e-12);
            if (row.layer == "hidden") ok = ok && relclose(row.init_std, 1.0 / std::sqrt(N), 1e-12);
            if (row.layer == "unembedding") ok = ok && relclose(row.init_std, 1.0 / N, 1e-12);
        }
    }
    // Regime III: tied experts, expert eps N^-1 M^-1 L^-1
    MixtralConfig r3 = emit_mixtral_config(Regime::III, ScaleVector{1024, 512, 64, 32, 256}, 8, 1.0, 1e-8);
    bool tied = false;
    for (const ConfigRow& row : r3.rows) {
        if (row.layer == "expert_layer1") {
            tied = row.notes.find("tied") != std::string::npos;
            ok = ok && relclose(row.adam_eps, 1e-8 / (1024.0 * 64.0 * 8.0), 1e-12);
        }
        if (row.layer == "expert_layer2")
            ok = ok && relclose(row.init_std, 1.0 / std::sqrt(512.0), 1e-12);
    }
    ok = ok && tied;
    fs::create_directories(g_outdir + "/c9_emitter");
    write_text_file(g_outdir + "/c9_emitter/regime2_large.json",
                    emit_mixtral_config(Regime::II, ScaleVector{2048, 16, 128, 64, 512}, 12, 1.0, 1e-8)
                        .to_json());
    report("C9", ok, "prescription rows reproduce the table formulas at three scales");
}

void criterion_10(std::size_t jobs) {
    RunConfig cfg = base_config(Regime::II, Parameterization::MSSP);
    cfg.trajectory.base = ScaleVector{64, 16, 4, 4, 8};
    cfg.width_multipliers = {1, 2, 4, 8};
    cfg.seeds = {1, 2};
    cfg.steps = 150;
    cfg.eta = 0.1;
    cfg.probe_schedule = {0};
    const std::vector<double> grid = {0.02, 0.08, 0.32, 1.28, 5.12};
    SweepResult res = run_lr_sweep(cfg, grid, jobs);
    fs::create_directories(g_outdir + "/c10_lr_transfer");
    write_sweep_csv(g_outdir + "/c10_lr_transfer/sweep.csv", res);
    write_text_file(g_outdir + "/c10_lr_transfer/summary.json", sweep_summary_json(cfg, res));
    const int drift = res.argmin_drift_steps();
    std::ostringstream o;
    o << "MSSP per-width argmin lr drift " << drift << " grid steps (x4 grid, <= 1 wanted); argmins:";
    for (std::size_t w = 0; w < res.widths.size(); ++w) {
        o << " N=" << res.widths[w] << "->";
        if (res.argmin_lr_index[w] >= 0)
            o << res.lr_grid[res.argmin_lr_index[w]];
        else
            o << "diverged";
    }
    report("C10", drift >= 0 && drift <= 1, o.str());
}

} // namespace

int main(int argc, char** argv) {
    std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
    if (argc > 1) jobs = static_cast<std::size_t>(std::stoul(argv[1]));
    if (argc > 2) g_outdir = argv[2];
    fs::create_directories(g_outdir);

    bool identities_ok = true;
    criterion_1_and_4a(jobs, identities_ok);
    criterion_2(jobs, identities_ok);
    criterion_3(jobs, identities_ok);
    criterion_4(identities_ok);
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10(jobs);

    std::printf("%d criterion(s) failed\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
