#pragma once

#include "moelab/params.hpp"

#include <optional>
#include <string>

namespace moelab {

// Probe-step classes the predictions are stated for: step 0, step 1, and the
// late-training regime (steps >= 2, evaluated at the last probed step).
enum class TClass { t0, t1, t2p };
const char* tclass_name(TClass t);

// A predicted width exponent for one dynamics sub-term, an exact structural
// zero, or no claim.
struct Prediction {
    enum class Kind { exponent, zero, unspecified };
    Kind kind = Kind::unspecified;
    double exponent = 0.0;

    static Prediction exp(double e) { return {Kind::exponent, e}; }
    static Prediction zero() { return {Kind::zero, 0.0}; }
    static Prediction none() { return {Kind::unspecified, 0.0}; }
};

// Width-exponent predictions for SGD training dynamics, by (regime,
// parameterization, term, step class). Regimes II and III only; Regime I
// carries no sub-term catalog (its router behaviour is checked separately).
// Adam runs are out of catalog.
Prediction predict(Regime regime, Parameterization param, const std::string& term, TClass tclass);

// Terms with at least one specified entry for the pair, in output order.
std::vector<std::string> catalog_terms(Regime regime, Parameterization param);

} // namespace moelab
