#include "moelab/io.hpp"

#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <sstream>

namespace moelab {

using nlohmann::json;

std::string format_double(double v) {
    std::ostringstream o;
    o << std::setprecision(17) << v;
    return o.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + path);
    f << content;
    if (!f) throw ConfigError("write failed for " + path);
}

namespace {

json load_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config file " + path);
    json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return j;
}

ScaleVector parse_scale(const json& j) {
    ScaleVector s;
    s.n = j.value("N", 0u);
    s.ne = j.value("Ne", 0u);
    s.m = j.value("M", 0u);
    s.k = j.value("K", s.m);
    s.d = j.value("D", 8u);
    try {
        s.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("bad base_scale: ") + e.what());
    }
    return s;
}

GateSpec parse_gate(const json& j, const ScaleVector& base) {
    GateSpec g;
    const std::string kind = j.value("kind", "sigmoid");
    if (kind == "sigmoid")
        g.kind = GateKind::sigmoid;
    else if (kind == "softmax")
        g.kind = GateKind::softmax;
    else
        throw ConfigError("gate.kind must be sigmoid or softmax");
    g.beta = j.value("beta", 1.0);
    g.agg_exponent = j.value("agg_exponent", g.kind == GateKind::sigmoid ? 1.0 : 0.0);
    if (j.value("topk", false)) g.topk = base.k;
    return g;
}

} // namespace

CampaignConfig load_campaign_config(const std::string& path) {
    const json j = load_json(path);
    CampaignConfig cfg;
    RunConfig& r = cfg.run;
    try {
        if (j.contains("regime")) r.regime = regime_from_string(j["regime"].get<std::string>());
        if (j.contains("parameterization"))
            r.param = param_from_string(j["parameterization"].get<std::string>());
        if (j.contains("optimizer")) r.optimizer = optimizer_from_string(j["optimizer"].get<std::string>());
        if (!j.contains("base_scale")) throw ConfigError("config: base_scale required");
        r.trajectory.regime = r.regime;
        r.trajectory.base = parse_scale(j["base_scale"]);
        if (j.contains("gate")) r.gate = parse_gate(j["gate"], r.trajectory.base);
        if (j.contains("width_multipliers"))
            r.width_multipliers = j["width_multipliers"].get<std::vector<double>>();
        else
            r.width_multipliers = {1, 2, 4, 8, 16};
        if (j.contains("seeds"))
            r.seeds = j["seeds"].get<std::vector<uint64_t>>();
        else
            r.seeds = {1, 2, 3, 4};
        r.steps = j.value("steps", 200);
        r.batch = j.value("batch", 32u);
        r.eta = j.value("eta", 0.5);
        r.eps = j.value("eps", 1e-8);
        r.sp_lr_exponent = j.value("sp_lr_exponent", 0.0);
        r.adam_beta1 = j.value("adam_beta1", 0.9);
        r.adam_beta2 = j.value("adam_beta2", 0.95);
        r.exponent_tol = j.value("exponent_tol", 0.15);
        r.r2_floor = j.value("r2_floor", 0.8);
        r.divergence_threshold = j.value("divergence_threshold", 1e12);
        r.grad_clip = j.value("grad_clip", false);
        r.grad_clip_norm = j.value("grad_clip_norm", 1.0);
        if (j.value("nonlinearity", "identity") == std::string("gelu"))
            r.nonlinearity = Nonlinearity::gelu;
        if (j.contains("probe_schedule")) r.probe_schedule = j["probe_schedule"].get<std::vector<int>>();
        if (j.contains("multipliers")) {
            const json& m = j["multipliers"];
            r.multipliers.init_global = m.value("init_global", 1.0);
            r.multipliers.lr_global = m.value("lr_global", 1.0);
            if (m.contains("lr")) {
                const json& lr = m["lr"];
                r.multipliers.lr_layer = {lr.value("embed", 1.0), lr.value("router", 1.0),
                                          lr.value("expert_in", 1.0), lr.value("expert_out", 1.0),
                                          lr.value("readout", 1.0)};
            }
        }
        if (j.contains("task")) {
            const json& t = j["task"];
            r.task.kind = task_kind_from_string(t.value("kind", "gaussian_teacher"));
            r.task.input_dim = t.value("input_dim", r.trajectory.base.d);
            r.task.dataset_size = t.value("dataset_size",
                                          static_cast<std::size_t>(r.steps) * r.batch);
            r.task.label_noise_std = t.value("label_noise_std", 0.1);
            r.task.label_clip = t.value("label_clip", 3.0);
        } else {
            r.task.input_dim = r.trajectory.base.d;
            r.task.dataset_size = static_cast<std::size_t>(r.steps) * r.batch;
        }

        if (j.contains("lr_grid")) cfg.lr_grid = j["lr_grid"].get<std::vector<double>>();
        if (j.contains("tune_grid")) {
            const json& g = j["tune_grid"];
            auto axis = [&](const char* key, std::vector<double>& out) {
                if (g.contains(key)) out = g[key].get<std::vector<double>>();
            };
            axis("init_global", cfg.tune_grid.init_global);
            axis("lr_global", cfg.tune_grid.lr_global);
            axis("lr_embed", cfg.tune_grid.lr_embed);
            axis("lr_router", cfg.tune_grid.lr_router);
            axis("lr_expert_in", cfg.tune_grid.lr_expert_in);
            axis("lr_expert_out", cfg.tune_grid.lr_expert_out);
            axis("lr_readout", cfg.tune_grid.lr_readout);
        }
        if (j.contains("gram")) {
            const json& g = j["gram"];
            cfg.gram_m = g.value("m", cfg.gram_m);
            cfg.gram_n = g.value("n", cfg.gram_n);
            cfg.gram_sigma = g.value("sigma", cfg.gram_sigma);
            cfg.gram_seeds = g.value("seeds", cfg.gram_seeds);
        }
        if (j.contains("cross_layer")) {
            const json& c = j["cross_layer"];
            if (c.contains("width_multipliers"))
                cfg.cross_layer_multipliers = c["width_multipliers"].get<std::vector<double>>();
            cfg.cross_layer_seeds = c.value("seeds", cfg.cross_layer_seeds);
        }
        cfg.depth = j.value("depth", 1u);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config error: ") + e.what());
    }
    return cfg;
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + path);
    return f;
}

} // namespace

void write_series_csv(const std::string& path, const std::vector<RunRecord>& runs) {
    std::ofstream f = open_out(path);
    f << "term,width,seed,step,rms,exact_zero\n";
    for (const RunRecord& rec : runs) {
        for (const auto& [name, ts] : rec.series) {
            for (std::size_t i = 0; i < ts.steps.size(); ++i) {
                f << name << ',' << ts.width << ',' << ts.seed << ',' << ts.steps[i] << ','
                  << format_double(ts.values[i]) << ',' << (ts.exact_zero[i] ? 1 : 0) << '\n';
            }
        }
    }
}

void write_verdicts_csv(const std::string& path, const std::vector<Verdict>& verdicts) {
    std::ofstream f = open_out(path);
    f << "term,tclass,predicted,slope,r2,pass\n";
    for (const Verdict& v : verdicts) {
        f << v.term << ',' << tclass_name(v.tclass) << ','
          << (v.predicted_is_zero ? std::string("zero") : format_double(v.predicted)) << ','
          << format_double(v.fit.slope) << ',' << format_double(v.fit.r_squared) << ','
          << (v.pass ? 1 : 0) << '\n';
    }
}

void write_sweep_csv(const std::string& path, const SweepResult& sweep) {
    std::ofstream f = open_out(path);
    f << "width,lr,seed,final_loss,diverged\n";
    for (const SweepCell& c : sweep.cells) {
        f << c.width << ',' << format_double(c.lr) << ',' << c.seed << ','
          << format_double(c.final_loss) << ',' << (c.diverged ? 1 : 0) << '\n';
    }
}

void write_loss_csv(const std::string& path, const std::vector<RunRecord>& runs) {
    std::ofstream f = open_out(path);
    f << "width,seed,step,loss\n";
    for (const RunRecord& rec : runs)
        for (std::size_t t = 0; t < rec.loss.size(); ++t)
            f << rec.width << ',' << rec.seed << ',' << t << ',' << format_double(rec.loss[t]) << '\n';
}

void write_tune_csv(const std::string& path, const TuneResult& tune) {
    std::ofstream f = open_out(path);
    f << "init_global,lr_global,lr_embed,lr_router,lr_expert_in,lr_expert_out,lr_readout,"
         "mean_final_loss,any_diverged\n";
    for (const TunePoint& p : tune.table) {
        f << format_double(p.mults.init_global) << ',' << format_double(p.mults.lr_global);
        for (double v : p.mults.lr_layer) f << ',' << format_double(v);
        f << ',' << format_double(p.mean_final_loss) << ',' << (p.any_diverged ? 1 : 0) << '\n';
    }
}

std::string coord_check_summary_json(const RunConfig& cfg, const CoordCheckResult& res) {
    json j;
    j["regime"] = regime_name(cfg.regime);
    j["parameterization"] = param_name(cfg.param);
    j["optimizer"] = optimizer_name(cfg.optimizer);
    j["n_runs"] = res.runs.size();
    std::size_t diverged = 0;
    for (const auto& r : res.runs) diverged += r.diverged ? 1 : 0;
    j["n_diverged"] = diverged;
    j["n_verdicts"] = res.verdicts.size();
    std::size_t passed = 0;
    for (const auto& v : res.verdicts) passed += v.pass ? 1 : 0;
    j["n_passed"] = passed;
    j["all_pass"] = res.all_pass;
    json fails = json::array();
    for (const auto& v : res.verdicts)
        if (!v.pass)
            fails.push_back({{"term", v.term},
                             {"tclass", tclass_name(v.tclass)},
                             {"predicted", v.predicted},
                             {"slope", v.fit.slope},
                             {"r2", v.fit.r_squared},
                             {"note", v.note}});
    j["failures"] = fails;
    return j.dump(2) + "\n";
}

std::string sweep_summary_json(const RunConfig& cfg, const SweepResult& res) {
    json j;
    j["regime"] = regime_name(cfg.regime);
    j["parameterization"] = param_name(cfg.param);
    j["optimizer"] = optimizer_name(cfg.optimizer);
    j["lr_grid"] = res.lr_grid;
    json per_width = json::array();
    for (std::size_t w = 0; w < res.widths.size(); ++w) {
        json e;
        e["width"] = res.widths[w];
        e["argmin_lr_index"] = res.argmin_lr_index[w];
        e["argmin_lr"] = res.argmin_lr_index[w] >= 0 ? json(res.lr_grid[res.argmin_lr_index[w]]) : json();
        per_width.push_back(e);
    }
    j["per_width"] = per_width;
    j["argmin_drift_steps"] = res.argmin_drift_steps();
    return j.dump(2) + "\n";
}

std::string tune_summary_json(const TuneResult& res) {
    json j;
    j["best_loss"] = res.best_loss;
    j["best"] = {{"init_global", res.best.init_global},
                 {"lr_global", res.best.lr_global},
                 {"lr_embed", res.best.lr_layer[0]},
                 {"lr_router", res.best.lr_layer[1]},
                 {"lr_expert_in", res.best.lr_layer[2]},
                 {"lr_expert_out", res.best.lr_layer[3]},
                 {"lr_readout", res.best.lr_layer[4]}};
    j["grid_points"] = res.table.size();
    return j.dump(2) + "\n";
}

std::string gram_report_json(const GramReport& rep) {
    json j;
    j["m"] = rep.m;
    j["n"] = rep.n;
    j["sigma"] = rep.sigma;
    j["seeds"] = rep.n_seeds;
    j["all_zero"] = rep.all_zero;
    j["inner_diag_ratio"] = rep.inner_diag_ratio;
    j["inner_offdiag_ratio"] = rep.inner_offdiag_ratio;
    j["outer_diag_ratio"] = rep.outer_diag_ratio;
    j["outer_offdiag_ratio"] = rep.outer_offdiag_ratio;
    return j.dump(2) + "\n";
}

std::string cross_layer_report_json(const CrossLayerReport& rep) {
    json j;
    json rungs = json::array();
    for (const CrossLayerRung& r : rep.rungs)
        rungs.push_back({{"N", r.scale.n},
                         {"Ne", r.scale.ne},
                         {"M", r.scale.m},
                         {"entry_rms", r.entry_rms},
                         {"entry_rms_predicted", r.entry_rms_predicted},
                         {"gv_ratio", r.gv_ratio}});
    j["rungs"] = rungs;
    j["gv_exponent"] = rep.gv_exponent.slope;
    j["gv_exponent_r2"] = rep.gv_exponent.r_squared;
    j["variance_ratio"] = rep.variance_ratio;
    return j.dump(2) + "\n";
}

std::string router_collapse_report_json(const RouterCollapseReport& rep) {
    json j;
    j["widths"] = rep.widths;
    j["psi_rms_t0"] = rep.psi_rms_t0;
    j["psi_rms_final"] = rep.psi_rms_final;
    j["exponent_t0"] = rep.exponent_t0.slope;
    j["exponent_final"] = rep.exponent_final.slope;
    j["decays"] = rep.decays;
    j["psi0_exact_zero"] = rep.psi0_exact_zero;
    return j.dump(2) + "\n";
}

} // namespace moelab
