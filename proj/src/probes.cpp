#include "moelab/probes.hpp"

#include <cmath>
#include <sstream>

namespace moelab {

namespace {

// RMS over a list of equally sized blocks treated as one stacked vector.
struct Stack {
    double sumsq = 0.0;
    std::size_t count = 0;
    bool all_zero = true;

    void add(std::span<const double> v) {
        for (double x : v) {
            sumsq += x * x;
            if (x != 0.0) all_zero = false;
        }
        count += v.size();
    }
    void add_zeros(std::size_t n) { count += n; }
    TermValue value() const {
        TermValue t;
        t.rms = count == 0 ? 0.0 : std::sqrt(sumsq / static_cast<double>(count));
        t.exact_zero = all_zero;
        return t;
    }
};

TermValue term_of(std::span<const double> v) {
    Stack s;
    s.add(v);
    return s.value();
}

TermValue term_of(double x) {
    TermValue t;
    t.rms = std::abs(x);
    t.exact_zero = x == 0.0;
    return t;
}

Vector vsub(const Vector& a, const Vector& b) {
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

Vector vadd(const Vector& a, const Vector& b) {
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

void check_identity(const char* what, const Vector& sum, const Vector& reference, double piece_scale) {
    double errsq = 0.0, refsq = 0.0;
    for (std::size_t i = 0; i < sum.size(); ++i) {
        const double e = sum[i] - reference[i];
        errsq += e * e;
        refsq += reference[i] * reference[i];
    }
    const double err = std::sqrt(errsq / static_cast<double>(sum.size()));
    const double ref = std::sqrt(refsq / static_cast<double>(sum.size()));
    const double scale = std::max({ref, piece_scale, 1e-30});
    if (err > kIdentityTol * scale) {
        std::ostringstream o;
        o << "decomposition identity violated for " << what << ": |sum-ref|_rms=" << err
          << " scale=" << scale;
        throw ProbeIdentityError(o.str());
    }
}

struct FourWay {
    Vector init, prop, eff, cross;
};

// Exact split of h_t = W_t x_t into W0 x0 + W0 dx + dW x0 + dW dx.
FourWay split_linear(const SplitWeight& w, const Vector& x0, const Vector& xt) {
    FourWay f;
    const Vector dx = vsub(xt, x0);
    f.init.assign(w.base.rows, 0.0);
    f.prop.assign(w.base.rows, 0.0);
    f.eff.assign(w.base.rows, 0.0);
    f.cross.assign(w.base.rows, 0.0);
    matvec(w.base, x0, f.init);
    matvec(w.base, dx, f.prop);
    matvec(w.delta, x0, f.eff);
    matvec(w.delta, dx, f.cross);
    return f;
}

void require_identity_model(const ActivationCache& cache) {
    // probe decompositions are linear identities; the gelu mode breaks them
    if (cache.h1_pre != cache.h1)
        throw std::invalid_argument("probes require the identity (linear) model");
}

} // namespace

TermMap decompose_forward_aggregation(const MoEWeights& w, const GateSpec& gate,
                                      const ActivationCache& cache, const ActivationCache& cache0) {
    require_identity_model(cache);
    const ScaleVector& s = w.scale;
    if (cache.x != cache0.x) throw std::invalid_argument("decompose_forward_aggregation: caches disagree on input");
    const double coeff = gate.agg_coeff(s);
    const Vector dh1 = vsub(cache.h1, cache0.h1);

    Vector A1(s.n, 0.0), A21(s.n, 0.0), A22(s.n, 0.0), A3(s.n, 0.0), D(s.n, 0.0);
    Vector tmp_ne(s.ne), tmp_n(s.n);
    for (std::size_t i : cache.active) {
        const double g = coeff * cache.phi[i];
        // A1: frozen chain on the frozen input
        axpy(g, cache0.h3i[i], A1);
        // A21: frozen chain on the embed change
        std::fill(tmp_ne.begin(), tmp_ne.end(), 0.0);
        matvec(w.w2[i].base, dh1, tmp_ne);
        std::fill(tmp_n.begin(), tmp_n.end(), 0.0);
        matvec(w.w3[i].base, tmp_ne, tmp_n);
        axpy(g, tmp_n, A21);
        // A22: W2 update on the current embed state, through the frozen W3
        std::fill(tmp_ne.begin(), tmp_ne.end(), 0.0);
        matvec(w.w2[i].delta, cache.h1, tmp_ne);
        std::fill(tmp_n.begin(), tmp_n.end(), 0.0);
        matvec(w.w3[i].base, tmp_ne, tmp_n);
        axpy(g, tmp_n, A22);
        // A3: W3 update on the frozen expert input
        std::fill(tmp_n.begin(), tmp_n.end(), 0.0);
        matvec(w.w3[i].delta, cache0.h2[i], tmp_n);
        axpy(g, tmp_n, A3);
        // D: W3 update on the expert-input change
        const Vector dh2 = vsub(cache.h2[i], cache0.h2[i]);
        std::fill(tmp_n.begin(), tmp_n.end(), 0.0);
        matvec(w.w3[i].delta, dh2, tmp_n);
        axpy(g, tmp_n, D);
    }

    Vector sum(s.n, 0.0);
    double piece_scale = 0.0;
    for (const Vector* p : {&A1, &A21, &A22, &A3, &D}) {
        for (std::size_t j = 0; j < s.n; ++j) sum[j] += (*p)[j];
        piece_scale = std::max(piece_scale, rms_norm(*p));
    }
    check_identity("forward aggregation", sum, cache.h3, piece_scale);

    TermMap out;
    out["agg/A1"] = term_of(A1);
    out["agg/A21"] = term_of(A21);
    out["agg/A22"] = term_of(A22);
    out["agg/A3"] = term_of(A3);
    out["agg/D"] = term_of(D);
    out["agg/total"] = term_of(cache.h3);
    return out;
}

TermMap decompose_backward_input_grad(const MoEWeights& w, const GateSpec& gate,
                                      const ActivationCache& cache) {
    require_identity_model(cache);
    const ScaleVector& s = w.scale;
    const double coeff = gate.agg_coeff(s);
    TermMap out;

    // readout gradient d f/d h3 = (W4_t)^T, split by init/update
    Vector v4b(s.n), v4d(s.n), v4t(s.n);
    for (std::size_t j = 0; j < s.n; ++j) {
        v4b[j] = w.w4.base(0, j);
        v4d[j] = w.w4.delta(0, j);
        v4t[j] = v4b[j] + v4d[j];
    }
    out["bwd/h3/init"] = term_of(v4b);
    out["bwd/h3/update"] = term_of(v4d);
    out["bwd/h3/total"] = term_of(v4t);

    Stack h3i_total;
    Stack h2i_ii, h2i_iu, h2i_ui, h2i_uu, h2i_total;
    Vector phi_ii(s.m, 0.0), phi_iu(s.m, 0.0), phi_ui(s.m, 0.0), phi_uu(s.m, 0.0), phi_total(s.m, 0.0);
    Vector exp_pieces[8];
    for (auto& v : exp_pieces) v.assign(s.n, 0.0);
    Vector exp_total(s.n, 0.0);
    Vector gphi_I(s.m, 0.0), gphi_U(s.m, 0.0);

    Vector t_bb(s.ne), t_bd(s.ne), t_db(s.ne), t_dd(s.ne), t_sum(s.ne);
    Vector u(s.n), chain(s.ne);
    std::vector<uint8_t> is_active(s.m, 0);
    for (std::size_t i : cache.active) is_active[i] = 1;

    for (std::size_t i = 0; i < s.m; ++i) {
        if (!is_active[i]) {
            h3i_total.add_zeros(s.n);
            h2i_ii.add_zeros(s.ne);
            h2i_iu.add_zeros(s.ne);
            h2i_ui.add_zeros(s.ne);
            h2i_uu.add_zeros(s.ne);
            h2i_total.add_zeros(s.ne);
            continue;
        }
        const double si = coeff * cache.phi[i];

        Vector g3i(s.n);
        for (std::size_t j = 0; j < s.n; ++j) g3i[j] = si * v4t[j];
        h3i_total.add(g3i);

        matvec_t(w.w3[i].base, v4b, t_bb);
        matvec_t(w.w3[i].base, v4d, t_bd);
        matvec_t(w.w3[i].delta, v4b, t_db);
        matvec_t(w.w3[i].delta, v4d, t_dd);

        auto scaled = [&](const Vector& t) {
            Vector r(s.ne);
            for (std::size_t j = 0; j < s.ne; ++j) r[j] = si * t[j];
            return r;
        };
        const Vector g_ii = scaled(t_bb), g_iu = scaled(t_bd), g_ui = scaled(t_db), g_uu = scaled(t_dd);
        h2i_ii.add(g_ii);
        h2i_iu.add(g_iu);
        h2i_ui.add(g_ui);
        h2i_uu.add(g_uu);
        for (std::size_t j = 0; j < s.ne; ++j) t_sum[j] = g_ii[j] + g_iu[j] + g_ui[j] + g_uu[j];
        h2i_total.add(t_sum);

        // gate-gradient grid: coeff * <W3_a h2_t, W4_c>
        phi_ii[i] = coeff * dot(cache.h2[i], t_bb);
        phi_iu[i] = coeff * dot(cache.h2[i], t_bd);
        phi_ui[i] = coeff * dot(cache.h2[i], t_db);
        phi_uu[i] = coeff * dot(cache.h2[i], t_dd);
        phi_total[i] = phi_ii[i] + phi_iu[i] + phi_ui[i] + phi_uu[i];
        gphi_I[i] = phi_ii[i] + phi_iu[i]; // W3 init route, full W4
        gphi_U[i] = phi_ui[i] + phi_uu[i]; // W3 update route, full W4

        // eight expert-pathway pieces: (W2 a)^T (W3 c)^T (W4 e)^T
        const Vector* t_ce[4] = {&t_bb, &t_bd, &t_db, &t_dd};
        for (int a = 0; a < 2; ++a) {
            const Matrix& w2 = a == 0 ? w.w2[i].base : w.w2[i].delta;
            for (int ce = 0; ce < 4; ++ce) {
                matvec_t(w2, *t_ce[ce], u);
                axpy(si, u, exp_pieces[a * 4 + ce]);
            }
        }
        // full chain for the identity check
        for (std::size_t j = 0; j < s.ne; ++j) chain[j] = t_bb[j] + t_bd[j] + t_db[j] + t_dd[j];
        w.w2[i].apply_t(chain, u);
        axpy(si, u, exp_total);
    }

    out["bwd/h3i/total"] = h3i_total.value();
    out["bwd/h2i/init_init"] = h2i_ii.value();
    out["bwd/h2i/init_upd"] = h2i_iu.value();
    out["bwd/h2i/upd_init"] = h2i_ui.value();
    out["bwd/h2i/upd_upd"] = h2i_uu.value();
    out["bwd/h2i/total"] = h2i_total.value();
    out["bwd/phi/init_init"] = term_of(phi_ii);
    out["bwd/phi/init_upd"] = term_of(phi_iu);
    out["bwd/phi/upd_init"] = term_of(phi_ui);
    out["bwd/phi/upd_upd"] = term_of(phi_uu);
    out["bwd/phi/total"] = term_of(phi_total);

    static const char* exp_names[8] = {"A41", "A42", "A51", "A52", "A61", "A62", "E1", "E2"};
    Vector exp_sum(s.n, 0.0);
    double piece_scale = 0.0;
    for (int p = 0; p < 8; ++p) {
        out[std::string("bwd/h1exp/") + exp_names[p]] = term_of(exp_pieces[p]);
        for (std::size_t j = 0; j < s.n; ++j) exp_sum[j] += exp_pieces[p][j];
        piece_scale = std::max(piece_scale, rms_norm(exp_pieces[p]));
    }
    check_identity("backward expert pathway", exp_sum, exp_total, piece_scale);
    out["bwd/h1exp/total"] = term_of(exp_total);

    // router pathway: v-split through the gate Jacobian, then Q base/delta
    Vector vI(s.m), vU(s.m), v_total(s.m);
    gate_jacobian_apply(gate, cache.phi, cache.active, gphi_I, vI);
    gate_jacobian_apply(gate, cache.phi, cache.active, gphi_U, vU);
    gate_jacobian_apply(gate, cache.phi, cache.active, phi_total, v_total);

    Vector q0vI(s.n), q0vU(s.n), dqvI(s.n), dqvU(s.n), router_total(s.n);
    matvec_t(w.q.base, vI, q0vI);
    matvec_t(w.q.base, vU, q0vU);
    matvec_t(w.q.delta, vI, dqvI);
    matvec_t(w.q.delta, vU, dqvU);
    w.q.apply_t(v_total, router_total);

    Vector router_sum(s.n, 0.0);
    piece_scale = 0.0;
    for (const Vector* p : {&q0vI, &q0vU, &dqvI, &dqvU}) {
        for (std::size_t j = 0; j < s.n; ++j) router_sum[j] += (*p)[j];
        piece_scale = std::max(piece_scale, rms_norm(*p));
    }
    check_identity("backward router pathway", router_sum, router_total, piece_scale);

    out["bwd/router/Q0vI"] = term_of(q0vI);
    out["bwd/router/Q0vU"] = term_of(q0vU);
    out["bwd/router/dQvI"] = term_of(dqvI);
    out["bwd/router/dQvU"] = term_of(dqvU);
    out["bwd/router/total"] = term_of(router_total);
    out["bwd/h1/total"] = term_of(vadd(exp_total, router_total));
    return out;
}

LayerUpdateSplit decompose_layer_update(LayerId layer, const MoEWeights& w,
                                        const ActivationCache& cache, const ActivationCache& cache0) {
    require_identity_model(cache);
    const ScaleVector& s = w.scale;
    LayerUpdateSplit r;
    auto fill = [&](const FourWay& f, const Vector& total) {
        Vector sum(f.init.size());
        for (std::size_t j = 0; j < sum.size(); ++j)
            sum[j] = f.init[j] + f.prop[j] + f.eff[j] + f.cross[j];
        const double piece_scale = std::max({rms_norm(f.init), rms_norm(f.prop), rms_norm(f.eff), rms_norm(f.cross)});
        check_identity(layer_name(layer), sum, total, piece_scale);
        r.init = rms_norm(f.init);
        r.propagating = rms_norm(f.prop);
        r.effective = rms_norm(f.eff);
        r.cross = rms_norm(f.cross);
        r.total = rms_norm(total);
    };
    switch (layer) {
        case LayerId::embed:
            fill(split_linear(w.w1, cache.x, cache.x), cache.h1);
            break;
        case LayerId::router:
            fill(split_linear(w.q, cache0.h1, cache.h1), cache.psi);
            break;
        case LayerId::expert_in: {
            Stack init, prop, eff, cross, total;
            for (std::size_t i = 0; i < s.m; ++i) {
                FourWay f = split_linear(w.w2[i], cache0.h1, cache.h1);
                init.add(f.init);
                prop.add(f.prop);
                eff.add(f.eff);
                cross.add(f.cross);
                total.add(cache.h2[i]);
            }
            r.init = init.value().rms;
            r.propagating = prop.value().rms;
            r.effective = eff.value().rms;
            r.cross = cross.value().rms;
            r.total = total.value().rms;
            break;
        }
        case LayerId::expert_out: {
            Stack init, prop, eff, cross, total;
            for (std::size_t i = 0; i < s.m; ++i) {
                FourWay f = split_linear(w.w3[i], cache0.h2[i], cache.h2[i]);
                init.add(f.init);
                prop.add(f.prop);
                eff.add(f.eff);
                cross.add(f.cross);
                total.add(cache.h3i[i]);
            }
            r.init = init.value().rms;
            r.propagating = prop.value().rms;
            r.effective = eff.value().rms;
            r.cross = cross.value().rms;
            r.total = total.value().rms;
            break;
        }
        case LayerId::readout:
            fill(split_linear(w.w4, cache0.h3, cache.h3), Vector{cache.f});
            break;
    }
    return r;
}

namespace {

void put_fourway(TermMap& out, const std::string& prefix, const FourWay& f, const Vector& total) {
    out[prefix + "/init"] = term_of(f.init);
    out[prefix + "/prop"] = term_of(f.prop);
    out[prefix + "/eff"] = term_of(f.eff);
    out[prefix + "/cross"] = term_of(f.cross);
    out[prefix + "/total"] = term_of(total);
}

} // namespace

TermMap probe_all(const MoEWeights& w, const GateSpec& gate, const Vector& x) {
    const ScaleVector& s = w.scale;
    ActivationCache cache = forward(w, x, gate);
    ActivationCache cache0 = forward_base(w, x, gate);
    require_identity_model(cache);

    TermMap out;

    // h1: the probe input never changes, so prop and cross are structural zeros
    {
        FourWay f = split_linear(w.w1, x, x);
        f.prop.assign(s.n, 0.0);
        f.cross.assign(s.n, 0.0);
        put_fourway(out, "fwd/h1", f, cache.h1);
    }
    {
        FourWay f = split_linear(w.q, cache0.h1, cache.h1);
        put_fourway(out, "fwd/psi", f, cache.psi);
    }
    {
        Stack init, prop, eff, cross, total;
        for (std::size_t i = 0; i < s.m; ++i) {
            FourWay f = split_linear(w.w2[i], cache0.h1, cache.h1);
            init.add(f.init), prop.add(f.prop), eff.add(f.eff), cross.add(f.cross);
            total.add(cache.h2[i]);
        }
        out["fwd/h2i/init"] = init.value();
        out["fwd/h2i/prop"] = prop.value();
        out["fwd/h2i/eff"] = eff.value();
        out["fwd/h2i/cross"] = cross.value();
        out["fwd/h2i/total"] = total.value();
    }
    {
        Stack init, prop, eff, cross, total;
        for (std::size_t i = 0; i < s.m; ++i) {
            FourWay f = split_linear(w.w3[i], cache0.h2[i], cache.h2[i]);
            init.add(f.init), prop.add(f.prop), eff.add(f.eff), cross.add(f.cross);
            total.add(cache.h3i[i]);
        }
        out["fwd/h3i/init"] = init.value();
        out["fwd/h3i/prop"] = prop.value();
        out["fwd/h3i/eff"] = eff.value();
        out["fwd/h3i/cross"] = cross.value();
        out["fwd/h3i/total"] = total.value();
    }

    TermMap agg = decompose_forward_aggregation(w, gate, cache, cache0);
    out.insert(agg.begin(), agg.end());
    out["fwd/h3/init"] = agg["agg/A1"];
    {
        // propagating part of the aggregation, A21 + A22 = c sum phi W3b dh2
        Vector acc(s.n, 0.0), tmp_n(s.n);
        const double coeff = gate.agg_coeff(s);
        for (std::size_t i : cache.active) {
            const Vector dh2 = vsub(cache.h2[i], cache0.h2[i]);
            std::fill(tmp_n.begin(), tmp_n.end(), 0.0);
            matvec(w.w3[i].base, dh2, tmp_n);
            axpy(coeff * cache.phi[i], tmp_n, acc);
        }
        out["fwd/h3/prop"] = term_of(acc);
    }
    out["fwd/h3/eff"] = agg["agg/A3"];
    out["fwd/h3/cross"] = agg["agg/D"];
    out["fwd/h3/total"] = agg["agg/total"];

    {
        FourWay f = split_linear(w.w4, cache0.h3, cache.h3);
        out["fwd/f/init"] = term_of(f.init[0]);
        out["fwd/f/prop"] = term_of(f.prop[0]);
        out["fwd/f/eff"] = term_of(f.eff[0]);
        out["fwd/f/cross"] = term_of(f.cross[0]);
        out["fwd/f/total"] = term_of(cache.f);
    }

    TermMap bwd = decompose_backward_input_grad(w, gate, cache);
    out.insert(bwd.begin(), bwd.end());

    // raw RMS inputs for alignment-ratio fits: weight norms, layer inputs,
    // their training change, and the effective update on the current input
    auto aln = [&](const char* name, const SplitWeight& sw, const Vector& in0, const Vector& in_t) {
        const std::string p = std::string("aln/") + name;
        out[p + "/w0"] = term_of(std::span<const double>(sw.base.a));
        out[p + "/dw"] = term_of(std::span<const double>(sw.delta.a));
        out[p + "/in"] = term_of(in_t);
        out[p + "/din"] = term_of(vsub(in_t, in0));
        Vector e(sw.base.rows, 0.0);
        matvec(sw.delta, in_t, e);
        out[p + "/eff_cur"] = term_of(e);
    };
    aln("embed", w.w1, x, x);
    aln("router", w.q, cache0.h1, cache.h1);
    aln("readout", w.w4, cache0.h3, cache.h3);
    {
        Stack w0, dw, in, din, eff;
        for (std::size_t i = 0; i < s.m; ++i) {
            w0.add(w.w2[i].base.a);
            dw.add(w.w2[i].delta.a);
            Vector e(s.ne, 0.0);
            matvec(w.w2[i].delta, cache.h1, e);
            eff.add(e);
        }
        in.add(cache.h1);
        din.add(vsub(cache.h1, cache0.h1));
        out["aln/expert_in/w0"] = w0.value();
        out["aln/expert_in/dw"] = dw.value();
        out["aln/expert_in/in"] = in.value();
        out["aln/expert_in/din"] = din.value();
        out["aln/expert_in/eff_cur"] = eff.value();
    }
    {
        Stack w0, dw, in, din, eff;
        for (std::size_t i = 0; i < s.m; ++i) {
            w0.add(w.w3[i].base.a);
            dw.add(w.w3[i].delta.a);
            in.add(cache.h2[i]);
            din.add(vsub(cache.h2[i], cache0.h2[i]));
            Vector e(s.n, 0.0);
            matvec(w.w3[i].delta, cache.h2[i], e);
            eff.add(e);
        }
        out["aln/expert_out/w0"] = w0.value();
        out["aln/expert_out/dw"] = dw.value();
        out["aln/expert_out/in"] = in.value();
        out["aln/expert_out/din"] = din.value();
        out["aln/expert_out/eff_cur"] = eff.value();
    }
    return out;
}

std::vector<std::string> all_term_names() {
    // Generated from a reference probe on a tiny model so the list can never
    // drift from probe_all.
    ScaleVector s{6, 3, 3, 3, 2};
    LayerStds stds{1.0, 0.5, 0.5, 0.5, 0.2};
    MoEWeights w = build_weights(s, stds, false, false, 7);
    Vector x = {0.3, -1.1};
    TermMap m = probe_all(w, GateSpec::sigmoid_soft(), x);
    std::vector<std::string> names;
    names.reserve(m.size());
    for (const auto& kv : m) names.push_back(kv.first);
    return names;
}

ExponentFit fit_alignment_exponent(const std::vector<AlignmentSample>& samples) {
    std::vector<std::pair<double, double>> pts;
    for (const AlignmentSample& a : samples) {
        const double denom = a.w_rms * a.x_rms;
        if (denom <= 0.0 || a.product_rms <= 0.0) continue; // structural zeros drop out
        pts.push_back({a.fan_in, a.product_rms / denom});
    }
    if (pts.size() < 2) throw std::invalid_argument("fit_alignment_exponent: insufficient nonzero samples");
    return ols_loglog_fit(pts);
}

std::pair<ExponentFit, ExponentFit> measure_alignment_exponent(
    const std::vector<AlignmentSample>& effective_samples,
    const std::vector<AlignmentSample>& propagating_samples) {
    return {fit_alignment_exponent(effective_samples), fit_alignment_exponent(propagating_samples)};
}

void ProbeRecorder::record(int step, const TermMap& terms) {
    for (const auto& [name, value] : terms) {
        TermSeries& ts = series[name];
        if (ts.term.empty()) {
            ts.term = name;
            ts.width = width;
            ts.seed = seed;
        }
        ts.steps.push_back(step);
        ts.values.push_back(value.rms);
        ts.exact_zero.push_back(value.exact_zero ? 1 : 0);
    }
}

} // namespace moelab
