#include "moelab/catalog.hpp"

#include <map>
#include <vector>

namespace moelab {

const char* tclass_name(TClass t) {
    switch (t) {
        case TClass::t0: return "t0";
        case TClass::t1: return "t1";
        case TClass::t2p: return "t2+";
    }
    return "?";
}

namespace {

struct Row {
    const char* term;
    Prediction t0, t1, t2p;
};

constexpr double kUnspec = -1e9;

Prediction P(double e) { return e == kUnspec ? Prediction::none() : Prediction::exp(e); }
Prediction Z() { return Prediction::zero(); }

// Transcribed per-step width exponents of every tracked sub-term. "Z" marks
// structural exact zeros (e.g. any delta-carrying piece before its weight
// first moves), kUnspec marks cells without a clean catalog value.
const std::vector<Row>& mup_r2() {
    static const std::vector<Row> rows = {
        {"fwd/h1/init", P(0), P(0), P(0)},
        {"fwd/h1/eff", Z(), P(-0.5), P(0)},
        {"fwd/h1/total", P(0), P(0), P(0)},
        {"fwd/psi/total", P(0), P(0), P(0)},
        {"fwd/h2i/init", P(0), P(0), P(0)},
        {"fwd/h2i/prop", Z(), P(-0.5), P(0)},
        {"fwd/h2i/eff", Z(), P(-0.5), P(0)},
        {"fwd/h2i/cross", Z(), P(-1.5), P(0)},
        {"fwd/h2i/total", P(0), P(0), P(0)},
        {"fwd/h3i/init", P(0), P(0), P(0)},
        {"fwd/h3i/prop", Z(), P(-0.5), P(0)},
        {"fwd/h3i/eff", Z(), P(0), P(0)},
        {"fwd/h3i/cross", Z(), P(-0.5), P(0)},
        {"fwd/h3i/total", P(0), P(0), P(0)},
        {"agg/A1", P(-0.5), P(-0.5), P(-0.5)},
        {"agg/A21", Z(), P(-1), P(-0.5)},
        {"agg/A22", Z(), P(-1), P(-0.5)},
        {"agg/A3", Z(), P(0), P(0)},
        {"agg/D", Z(), P(-1), P(0)},
        {"agg/total", P(-0.5), P(0), P(0)},
        {"fwd/h3/init", P(-0.5), P(-0.5), P(-0.5)},
        {"fwd/h3/prop", Z(), P(-1), P(-0.5)},
        {"fwd/h3/eff", Z(), P(0), P(0)},
        {"fwd/h3/cross", Z(), P(-1), P(0)},
        {"fwd/h3/total", P(-0.5), P(0), P(0)},
        {"fwd/f/total", P(-1), P(0), P(0)},
        {"bwd/h3/init", P(-1), P(-1), P(-1)},
        {"bwd/h3/update", Z(), P(-1.5), P(-1)},
        {"bwd/h3/total", P(-1), P(-1), P(-1)},
        {"bwd/h3i/total", P(-2), P(-2), P(-2)},
        {"bwd/h2i/init_init", P(-1.5), P(-1.5), P(-1.5)},
        {"bwd/h2i/init_upd", Z(), P(-2), P(-1.5)},
        {"bwd/h2i/upd_init", Z(), P(-1), P(-1)},
        {"bwd/h2i/upd_upd", Z(), P(-2), P(-1)},
        {"bwd/h2i/total", P(-1.5), P(-1), P(-1)},
        {"bwd/phi/init_init", P(-1.5), P(-1.5), P(-1.5)},
        {"bwd/phi/init_upd", Z(), P(-2), P(-1.5)},
        {"bwd/phi/upd_init", Z(), P(-1), P(-1)},
        {"bwd/phi/upd_upd", Z(), P(-2), P(-1)},
        {"bwd/phi/total", P(-1.5), P(-1), P(-1)},
        {"bwd/h1exp/A41", P(-1.5), P(-1.5), P(-1.5)},
        {"bwd/h1exp/A42", Z(), P(-2), P(-1.5)},
        {"bwd/h1exp/A51", Z(), P(-1), P(-1)},
        {"bwd/h1exp/A52", Z(), P(-2), P(-1)},
        {"bwd/h1exp/A61", Z(), P(-2), P(-2)},
        {"bwd/h1exp/A62", Z(), P(kUnspec), P(-2)},
        {"bwd/h1exp/E1", Z(), P(-2), P(-1)},
        {"bwd/h1exp/E2", Z(), P(kUnspec), P(-1)},
        {"bwd/h1exp/total", P(-1.5), P(-1), P(-1)},
        {"bwd/router/Q0vI", P(-1.5), P(-1.5), P(-1.5)},
        {"bwd/router/Q0vU", Z(), P(-1), P(-1)},
        {"bwd/router/dQvI", Z(), P(-2), P(-2)},
        {"bwd/router/dQvU", Z(), P(-2), P(-1)},
        {"bwd/router/total", P(-1.5), P(-1), P(-1)},
        {"bwd/h1/total", P(-1.5), P(-1), P(-1)},
    };
    return rows;
}

const std::vector<Row>& mssp_r2() {
    static const std::vector<Row> rows = {
        {"fwd/h1/init", P(0), P(0), P(0)},
        {"fwd/h1/eff", Z(), Z(), P(0)},
        {"fwd/h1/total", P(0), P(0), P(0)},
        {"fwd/psi/total", P(0), P(0), P(0)},
        {"fwd/h2i/init", P(0), P(0), P(0)},
        {"fwd/h2i/prop", Z(), Z(), P(0)},
        {"fwd/h2i/eff", Z(), Z(), P(0)},
        {"fwd/h2i/cross", Z(), Z(), P(0)},
        {"fwd/h2i/total", P(0), P(0), P(0)},
        {"fwd/h3i/init", P(0.5), P(0.5), P(0.5)},
        {"fwd/h3i/prop", Z(), Z(), P(0.5)},
        {"fwd/h3i/eff", Z(), Z(), P(0)},
        {"fwd/h3i/total", P(0.5), P(0.5), P(0.5)},
        {"agg/A1", P(0), P(0), P(0)},
        {"agg/A21", Z(), Z(), P(0)},
        {"agg/A22", Z(), Z(), P(0)},
        {"agg/A3", Z(), Z(), P(0)},
        {"agg/D", Z(), Z(), P(0)},
        {"agg/total", P(0), P(0), P(0)},
        {"fwd/h3/init", P(0), P(0), P(0)},
        {"fwd/h3/prop", Z(), Z(), P(0)},
        {"fwd/h3/eff", Z(), Z(), P(0)},
        {"fwd/h3/cross", Z(), Z(), P(0)},
        {"fwd/h3/total", P(0), P(0), P(0)},
        {"fwd/f/total", Z(), P(0), P(0)},
        {"bwd/h3/init", Z(), Z(), Z()},
        {"bwd/h3/update", Z(), P(-1), P(-1)},
        {"bwd/h3/total", Z(), P(-1), P(-1)},
        {"bwd/h3i/total", Z(), P(-2), P(-2)},
        {"bwd/h2i/init_init", Z(), Z(), Z()},
        {"bwd/h2i/init_upd", Z(), P(-1), P(-1)},
        {"bwd/h2i/upd_init", Z(), Z(), Z()},
        {"bwd/h2i/upd_upd", Z(), Z(), P(-1)},
        {"bwd/h2i/total", Z(), P(-1), P(-1)},
        {"bwd/phi/init_init", Z(), Z(), Z()},
        {"bwd/phi/init_upd", Z(), P(-1), P(-1)},
        {"bwd/phi/upd_init", Z(), Z(), Z()},
        {"bwd/phi/upd_upd", Z(), Z(), P(-1)},
        {"bwd/phi/total", Z(), P(-1), P(-1)},
        {"bwd/h1exp/A41", Z(), Z(), Z()},
        {"bwd/h1exp/A42", Z(), P(-1), P(-1)},
        {"bwd/h1exp/A51", Z(), Z(), Z()},
        {"bwd/h1exp/A52", Z(), Z(), P(-1)},
        {"bwd/h1exp/A61", Z(), Z(), Z()},
        {"bwd/h1exp/A62", Z(), Z(), P(-1)},
        {"bwd/h1exp/E1", Z(), Z(), Z()},
        {"bwd/h1exp/E2", Z(), Z(), P(-1)},
        {"bwd/h1exp/total", Z(), P(-1), P(-1)},
        {"bwd/router/Q0vI", Z(), P(-1), P(-1)},
        {"bwd/router/Q0vU", Z(), Z(), P(-1)},
        {"bwd/router/dQvI", Z(), Z(), P(-1)},
        {"bwd/router/dQvU", Z(), Z(), P(-1)},
        {"bwd/router/total", Z(), P(-1), P(-1)},
        {"bwd/h1/total", Z(), P(-1), P(-1)},
    };
    return rows;
}

const std::vector<Row>& mup_r3() {
    static const std::vector<Row> rows = {
        {"fwd/h1/init", P(0), P(0), P(0)},
        {"fwd/h1/eff", Z(), P(-0.5), P(0)},
        {"fwd/h1/total", P(0), P(0), P(0)},
        {"fwd/psi/total", P(0), P(0), P(0)},
        {"fwd/h2i/init", P(0), P(0), P(0)},
        {"fwd/h2i/prop", Z(), P(-0.5), P(0)},
        {"fwd/h2i/eff", Z(), P(0), P(0)},
        {"fwd/h2i/cross", Z(), P(-1), P(0)},
        {"fwd/h2i/total", P(0), P(0), P(0)},
        {"fwd/h3i/init", P(0), P(0), P(0)},
        {"fwd/h3i/prop", Z(), P(0), P(0)},
        {"fwd/h3i/eff", Z(), P(0), P(0)},
        {"fwd/h3i/cross", Z(), P(-1.5), P(0)},
        {"fwd/h3i/total", P(0), P(0), P(0)},
        {"agg/A1", P(-0.5), P(-0.5), P(-0.5)},
        {"agg/A21", Z(), P(-1), P(-0.5)},
        {"agg/A22", Z(), P(0), P(0)},
        {"agg/A3", Z(), P(0), P(0)},
        {"agg/D", Z(), P(-1), P(0)},
        {"agg/total", P(-0.5), P(0), P(0)},
        {"fwd/h3/init", P(-0.5), P(-0.5), P(-0.5)},
        {"fwd/h3/prop", Z(), P(0), P(0)},
        {"fwd/h3/eff", Z(), P(0), P(0)},
        {"fwd/h3/cross", Z(), P(-1), P(0)},
        {"fwd/h3/total", P(-0.5), P(0), P(0)},
        {"fwd/f/init", P(-1), P(-1), P(-1)},
        {"fwd/f/prop", Z(), P(0), P(0)},
        {"fwd/f/eff", Z(), P(-1), P(-1)},
        {"fwd/f/cross", Z(), P(-1), P(0)},
        {"fwd/f/total", P(-1), P(0), P(0)},
        {"bwd/h3/init", P(-1), P(-1), P(-1)},
        {"bwd/h3/update", Z(), P(-1.5), P(-1)},
        {"bwd/h3/total", P(-1), P(-1), P(-1)},
        {"bwd/h3i/total", P(-2), P(-2), P(-2)},
        {"bwd/h2i/init_init", P(-2), P(-2), P(-2)},
        {"bwd/h2i/init_upd", Z(), P(kUnspec), P(-2)},
        {"bwd/h2i/upd_init", Z(), P(-2), P(-2)},
        {"bwd/h2i/upd_upd", Z(), P(kUnspec), P(-2)},
        {"bwd/h2i/total", P(-2), P(-2), P(-2)},
        {"bwd/phi/total", P(-1.5), P(-1), P(-1)},
        {"bwd/h1exp/A41", P(-1.5), P(-1.5), P(-1.5)},
        {"bwd/h1exp/A42", Z(), P(-2), P(-1.5)},
        {"bwd/h1exp/A51", Z(), P(-1), P(-1)},
        {"bwd/h1exp/A52", Z(), P(-2), P(-1)},
        {"bwd/h1exp/A61", Z(), P(-1), P(-1)},
        {"bwd/h1exp/A62", Z(), P(-2), P(-1)},
        {"bwd/h1exp/E1", Z(), P(-2), P(-1)},
        {"bwd/h1exp/E2", Z(), P(-2), P(-1)},
        {"bwd/h1exp/total", P(-1.5), P(-1), P(-1)},
        {"bwd/router/total", P(-1.5), P(-1), P(-1)},
        {"bwd/h1/total", P(-1.5), P(-1), P(-1)},
    };
    return rows;
}

const std::vector<Row>& mssp_r3() {
    static const std::vector<Row> rows = {
        {"fwd/h1/init", P(0), P(0), P(0)},
        {"fwd/h1/eff", Z(), Z(), P(0)},
        {"fwd/h1/total", P(0), P(0), P(0)},
        {"fwd/psi/total", P(0), P(0), P(0)},
        {"fwd/h2i/init", P(0), P(0), P(0)},
        {"fwd/h2i/prop", Z(), Z(), P(0)},
        {"fwd/h2i/eff", Z(), Z(), P(0)},
        {"fwd/h2i/cross", Z(), Z(), P(0)},
        {"fwd/h2i/total", P(0), P(0), P(0)},
        {"fwd/h3i/init", P(0), P(0), P(0)},
        {"fwd/h3i/prop", Z(), Z(), P(0)},
        {"fwd/h3i/eff", Z(), Z(), P(0)},
        {"fwd/h3i/cross", Z(), Z(), P(0)},
        {"fwd/h3i/total", P(0), P(0), P(0)},
        {"agg/A1", P(0), P(0), P(0)},
        {"agg/A21", Z(), Z(), P(0)},
        {"agg/A22", Z(), Z(), P(0)},
        {"agg/A3", Z(), Z(), P(0)},
        {"agg/D", Z(), Z(), P(0)},
        {"agg/total", P(0), P(0), P(0)},
        {"fwd/h3/init", P(0), P(0), P(0)},
        {"fwd/h3/prop", Z(), Z(), P(0)},
        {"fwd/h3/eff", Z(), Z(), P(0)},
        {"fwd/h3/cross", Z(), Z(), P(0)},
        {"fwd/h3/total", P(0), P(0), P(0)},
        {"fwd/f/init", Z(), Z(), Z()},
        {"fwd/f/prop", Z(), Z(), Z()},
        {"fwd/f/eff", Z(), P(0), P(0)},
        {"fwd/f/cross", Z(), Z(), P(0)},
        {"fwd/f/total", Z(), P(0), P(0)},
        {"bwd/h3/init", Z(), Z(), Z()},
        {"bwd/h3/update", Z(), P(-1), P(-1)},
        {"bwd/h3/total", Z(), P(-1), P(-1)},
        {"bwd/h3i/total", Z(), P(-2), P(-2)},
        {"bwd/h2i/init_init", Z(), Z(), Z()},
        {"bwd/h2i/init_upd", Z(), P(-2), P(-2)},
        {"bwd/h2i/upd_init", Z(), Z(), Z()},
        {"bwd/h2i/upd_upd", Z(), Z(), P(-2)},
        {"bwd/h2i/total", Z(), P(-2), P(-2)},
        {"bwd/phi/init_init", Z(), Z(), Z()},
        {"bwd/phi/init_upd", Z(), P(-1), P(-1)},
        {"bwd/phi/upd_init", Z(), Z(), Z()},
        {"bwd/phi/upd_upd", Z(), Z(), P(-1)},
        {"bwd/phi/total", Z(), P(-1), P(-1)},
        {"bwd/h1exp/A41", Z(), Z(), Z()},
        {"bwd/h1exp/A42", Z(), P(-1), P(-1)},
        {"bwd/h1exp/A51", Z(), Z(), Z()},
        {"bwd/h1exp/A52", Z(), Z(), P(-1)},
        {"bwd/h1exp/A61", Z(), Z(), Z()},
        {"bwd/h1exp/A62", Z(), Z(), P(-1)},
        {"bwd/h1exp/E1", Z(), Z(), Z()},
        {"bwd/h1exp/E2", Z(), Z(), P(-1)},
        {"bwd/h1exp/total", Z(), P(-1), P(-1)},
        {"bwd/router/Q0vI", Z(), P(-1), P(-1)},
        {"bwd/router/Q0vU", Z(), Z(), P(-1)},
        {"bwd/router/dQvI", Z(), Z(), P(-1)},
        {"bwd/router/dQvU", Z(), Z(), P(-1)},
        {"bwd/router/total", Z(), P(-1), P(-1)},
        {"bwd/h1/total", Z(), P(-1), P(-1)},
    };
    return rows;
}

const std::vector<Row>* table_for(Regime regime, Parameterization param) {
    if (param == Parameterization::muP && regime == Regime::II) return &mup_r2();
    if (param == Parameterization::MSSP && regime == Regime::II) return &mssp_r2();
    if (param == Parameterization::muP && regime == Regime::III) return &mup_r3();
    if (param == Parameterization::MSSP && regime == Regime::III) return &mssp_r3();
    return nullptr;
}

} // namespace

Prediction predict(Regime regime, Parameterization param, const std::string& term, TClass tclass) {
    const std::vector<Row>* rows = table_for(regime, param);
    if (!rows) return Prediction::none();
    for (const Row& r : *rows) {
        if (term == r.term) {
            switch (tclass) {
                case TClass::t0: return r.t0;
                case TClass::t1: return r.t1;
                case TClass::t2p: return r.t2p;
            }
        }
    }
    return Prediction::none();
}

std::vector<std::string> catalog_terms(Regime regime, Parameterization param) {
    std::vector<std::string> names;
    const std::vector<Row>* rows = table_for(regime, param);
    if (!rows) return names;
    names.reserve(rows->size());
    for (const Row& r : *rows) names.push_back(r.term);
    return names;
}

} // namespace moelab
