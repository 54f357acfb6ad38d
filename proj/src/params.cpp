#include "moelab/params.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace moelab {

const char* layer_name(LayerId l) {
    switch (l) {
        case LayerId::embed: return "embed";
        case LayerId::router: return "router";
        case LayerId::expert_in: return "expert_in";
        case LayerId::expert_out: return "expert_out";
        case LayerId::readout: return "readout";
    }
    return "?";
}

const char* regime_name(Regime r) {
    switch (r) {
        case Regime::I: return "I";
        case Regime::II: return "II";
        case Regime::III: return "III";
    }
    return "?";
}

const char* param_name(Parameterization p) {
    switch (p) {
        case Parameterization::SP: return "SP";
        case Parameterization::muP: return "muP";
        case Parameterization::MSSP: return "MSSP";
    }
    return "?";
}

const char* optimizer_name(OptimizerKind o) { return o == OptimizerKind::SGD ? "sgd" : "adam"; }

Regime regime_from_string(const std::string& s) {
    if (s == "I" || s == "1") return Regime::I;
    if (s == "II" || s == "2") return Regime::II;
    if (s == "III" || s == "3") return Regime::III;
    throw std::invalid_argument("unknown regime: " + s);
}

Parameterization param_from_string(const std::string& s) {
    if (s == "SP" || s == "sp") return Parameterization::SP;
    if (s == "muP" || s == "mup" || s == "MUP") return Parameterization::muP;
    if (s == "MSSP" || s == "mssp") return Parameterization::MSSP;
    throw std::invalid_argument("unknown parameterization: " + s);
}

OptimizerKind optimizer_from_string(const std::string& s) {
    if (s == "sgd" || s == "SGD") return OptimizerKind::SGD;
    if (s == "adam" || s == "Adam") return OptimizerKind::Adam;
    throw std::invalid_argument("unknown optimizer: " + s);
}

namespace {

std::size_t scaled_dim(std::size_t base, double n) {
    double v = std::round(static_cast<double>(base) * n);
    return v < 1.0 ? 1 : static_cast<std::size_t>(v);
}

} // namespace

ScaleVector scale_trajectory(const RegimeTrajectory& traj, double n) {
    if (n <= 0.0) throw std::invalid_argument("scale_trajectory: multiplier must be positive");
    traj.base.validate();
    ScaleVector s = traj.base;
    switch (traj.regime) {
        case Regime::I:
            s.n = scaled_dim(s.n, n);
            s.ne = scaled_dim(s.ne, n);
            break;
        case Regime::II:
            s.n = scaled_dim(s.n, n);
            s.m = scaled_dim(s.m, n);
            s.k = scaled_dim(s.k, n);
            break;
        case Regime::III:
            s.n = scaled_dim(s.n, n);
            s.ne = scaled_dim(s.ne, n);
            s.m = scaled_dim(s.m, n);
            s.k = scaled_dim(s.k, n);
            break;
    }
    if (s.k > s.m) s.k = s.m;
    s.validate();
    return s;
}

RuleSet rules_for(Regime regime, Parameterization param, OptimizerKind optimizer,
                  const ScaleVector& scale, double eta, double eps, double sp_lr_exponent) {
    scale.validate();
    if (eta <= 0.0 || eps <= 0.0) throw std::invalid_argument("rules_for: eta and eps must be positive");
    if (optimizer != OptimizerKind::SGD && optimizer != OptimizerKind::Adam)
        throw std::invalid_argument("rules_for: unsupported optimizer");

    const double N = static_cast<double>(scale.n);
    const double Ne = static_cast<double>(scale.ne);
    const double M = static_cast<double>(scale.m);
    const double D = static_cast<double>(scale.d);

    RuleSet rs;
    rs.regime = regime;
    rs.param = param;
    rs.base_lr = eta;
    rs.base_eps = eps;

    auto& embed = rs.rule(LayerId::embed);
    auto& router = rs.rule(LayerId::router);
    auto& e_in = rs.rule(LayerId::expert_in);
    auto& e_out = rs.rule(LayerId::expert_out);
    auto& readout = rs.rule(LayerId::readout);

    if (param == Parameterization::SP) {
        // Fan-in init everywhere, one global lr eta * N^-c, one global eps.
        const double lr = eta * std::pow(N, -sp_lr_exponent);
        embed = {1.0 / std::sqrt(D), lr, lr, eps};
        router = {1.0 / std::sqrt(N), lr, lr, eps};
        e_in = {1.0 / std::sqrt(N), lr, lr, eps};
        e_out = {1.0 / std::sqrt(Ne), lr, lr, eps};
        readout = {1.0 / std::sqrt(N), lr, lr, eps};
        return rs;
    }
    if (param != Parameterization::muP && param != Parameterization::MSSP)
        throw std::invalid_argument("rules_for: unsupported parameterization");

    switch (regime) {
        case Regime::I:
            embed = {1.0 / std::sqrt(D), eta * N, eta / D, eps / N};
            router = {1.0 / N, eta / N, eta / N, eps};
            e_in = {1.0 / std::sqrt(N), eta, eta / N, eps / N};
            e_out = {1.0 / std::sqrt(Ne), eta, eta / Ne, eps / N};
            readout = {1.0 / N, eta / N, eta / N, eps};
            if (param == Parameterization::MSSP) router.init_std = 0.0;
            break;
        case Regime::II:
            embed = {1.0 / std::sqrt(D), eta * N, eta, eps / N};
            router = {1.0 / std::sqrt(N), eta * M / N, eta / N, eps / M};
            e_in = {1.0 / std::sqrt(N), eta * M / N, eta / N, eps / M};
            e_out = {1.0 / std::sqrt(Ne), eta * M * N, eta / Ne, eps / (N * M)};
            readout = {1.0 / N, eta / N, eta / N, eps};
            if (param == Parameterization::MSSP) {
                e_out.init_std = std::sqrt(M / Ne);
                rs.readout_zero = true;
            }
            break;
        case Regime::III:
            embed = {1.0 / std::sqrt(D), eta * N, eta, eps / N};
            router = {1.0 / std::sqrt(N), eta, eta / N, eps / M};
            e_in = {1.0 / std::sqrt(N), eta * M, eta / N, eps / (N * M)};
            e_out = {1.0 / std::sqrt(Ne), eta * M, eta / N, eps / (N * M)};
            readout = {1.0 / N, eta / N, eta / N, eps};
            if (param == Parameterization::MSSP) {
                rs.shared_experts = true;
                rs.readout_zero = true;
            }
            break;
    }
    return rs;
}

namespace {

std::string fmt(double v) {
    std::ostringstream o;
    o.precision(12);
    o << v;
    return o.str();
}

} // namespace

MixtralConfig emit_mixtral_config(Regime regime, const ScaleVector& scale, std::size_t depth,
                                  double base_lr, double base_eps) {
    scale.validate();
    if (depth == 0) throw std::invalid_argument("emit_mixtral_config: depth must be positive");
    const double N = static_cast<double>(scale.n);
    const double Ne = static_cast<double>(scale.ne);
    const double M = static_cast<double>(scale.m);
    const double K = static_cast<double>(scale.k);
    const double D = static_cast<double>(scale.d);
    const double L = static_cast<double>(depth);
    const double eta = base_lr, eps = base_eps;

    MixtralConfig cfg;
    cfg.regime = regime;
    cfg.scale = scale;
    cfg.depth = depth;
    cfg.base_lr = base_lr;
    cfg.base_eps = base_eps;

    auto row = [&](std::string layer, double std_, double lr, double eps_, std::string notes = "") {
        cfg.rows.push_back(ConfigRow{std::move(layer), std_, lr, eps_, std::move(notes)});
    };

    row("embedding", 1.0 / std::sqrt(D), eta / D, eps / N);
    row("pre_layernorm_gain", 1.0, eta, eps / (N * L));
    row("hidden", 1.0 / std::sqrt(N), eta / N, eps / (N * L));
    row("hidden_bias", -1.0, eta, -1.0);

    const bool r1 = regime == Regime::I;
    const bool r2 = regime == Regime::II;
    const bool r3 = regime == Regime::III;

    row("router", r1 ? 0.0 : 1.0 / std::sqrt(N), eta / N, r1 ? eps / L : eps / (M * L),
        r1 ? "zero init requires initial randomness in the routing mechanism" : "");
    row("expert_layer1", 1.0 / std::sqrt(N), eta / N,
        r1 ? eps / (N * L) : (r2 ? eps / (M * L) : eps / (N * M * L)),
        r3 ? "tied: shared across experts at initialization" : "");
    row("expert_layer2", r2 ? std::sqrt(M / Ne) : 1.0 / std::sqrt(Ne), eta / Ne,
        r1 ? eps / (N * L) : eps / (N * M * L),
        r3 ? "tied: shared across experts at initialization" : "");
    row("aggregation_multiplier", -1.0, -1.0, -1.0, "forward multiplier 1/K = " + fmt(1.0 / K));
    row("aux_load_balancing_loss_multiplier", -1.0, -1.0, -1.0, "1");
    row("router_z_loss_multiplier", -1.0, -1.0, -1.0, "1");
    row("mha_residual", -1.0, -1.0, -1.0, "X + (1/L) * MHA(LN(X)), 1/L = " + fmt(1.0 / L));
    row("moe_ffn_residual", -1.0, -1.0, -1.0, "X + (1/L) * MoE(LN(X)), 1/L = " + fmt(1.0 / L));
    row("final_layernorm_gain", -1.0, eta, eps / N);
    row("unembedding", 1.0 / N, eta / N, eps);
    row("weight_decay", -1.0, -1.0, -1.0,
        "keep the effective decoupled weight decay lr*wd scale-independent: hold wd fixed across "
        "scales, or set the wd multiplier to the inverse of the lr multiplier in couplings that "
        "multiply them; beta1, beta2 stay scale-independent");
    return cfg;
}

std::string MixtralConfig::to_json() const {
    std::ostringstream o;
    o.precision(12);
    o << "{\n";
    o << "  \"regime\": \"" << regime_name(regime) << "\",\n";
    o << "  \"scale\": {\"N\": " << scale.n << ", \"Ne\": " << scale.ne << ", \"M\": " << scale.m
      << ", \"K\": " << scale.k << ", \"D\": " << scale.d << "},\n";
    o << "  \"depth\": " << depth << ",\n";
    o << "  \"base_lr\": " << base_lr << ",\n";
    o << "  \"base_eps\": " << base_eps << ",\n";
    o << "  \"rows\": [\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const ConfigRow& r = rows[i];
        o << "    {\"layer\": \"" << r.layer << "\", ";
        auto num = [&](const char* key, double v) {
            o << "\"" << key << "\": ";
            if (v < 0.0)
                o << "null";
            else
                o << v;
        };
        num("init_std", r.init_std);
        o << ", ";
        num("adam_lr", r.adam_lr);
        o << ", ";
        num("adam_eps", r.adam_eps);
        o << ", \"notes\": \"" << r.notes << "\"}";
        o << (i + 1 < rows.size() ? ",\n" : "\n");
    }
    o << "  ]\n}\n";
    return o.str();
}

} // namespace moelab
