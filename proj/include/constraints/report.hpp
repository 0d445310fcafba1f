// JSON serialization of run reports.  One schema-versioned document per
// invocation; every asserted quantity lands here so reports are the
// ground truth for downstream comparisons.

#pragma once

#include <json.hpp>

#include "constraints/continuation.hpp"
#include "constraints/coupled.hpp"
#include "constraints/diagnostics.hpp"
#include "constraints/lichnerowicz.hpp"

namespace constraints {

using Json = nlohmann::ordered_json;

inline constexpr int kReportSchemaVersion = 1;

inline Json to_json(const ConstraintResiduals& r) {
    return Json{{"hamiltonian_norm", r.hamiltonian_norm},
                {"momentum_norm", r.momentum_norm},
                {"conformal_form", r.conformal_form}};
}

inline Json to_json(const StabilityReport& r) {
    return Json{{"x", r.x},
                {"A0", r.A0},
                {"A1", r.A1},
                {"lambda_prime", r.lambda_prime},
                {"lambda_prime_is_estimate", true},
                {"lambda_pp", r.lambda_pp},
                {"grad_tau_t0_norm", r.grad_tau_t0},
                {"sobolev_estimate", r.sobolev},
                {"sobolev_is_estimate", true},
                {"c1", r.c1},
                {"c2", r.c2},
                {"a0", r.a0},
                {"b0", r.b0},
                {"a", r.a},
                {"b", r.b},
                {"c_max", r.c_max},
                {"r", r.r},
                {"p0", std::isfinite(r.p0) ? Json(r.p0) : Json("inf")},
                {"p0_clamped", r.p0_clamped},
                {"t0", r.t0},
                {"feasible", r.feasible},
                {"reason", r.reason}};
}

inline Json to_json(const FixedPointIterationRecord& r) {
    return Json{{"iteration", r.iteration},
                {"diff_norm", r.diff_norm},
                {"c", r.c},
                {"psi_norm", r.psi_norm},
                {"obstruction_max", r.obstruction_max},
                {"energy_margin", r.energy_margin},
                {"cross_term", r.cross_term},
                {"in_set", r.in_set}};
}

inline Json to_json(const Bracket& b) {
    return Json{{"lambda_minus", b.lambda_minus},
                {"c_minus", b.c_minus},
                {"c_plus", b.c_plus},
                {"phi_minus_min", min_value(b.phi_minus)},
                {"phi_plus_max", max_value(b.phi_plus)}};
}

inline Json to_json(const QuadraticC0& q) {
    return Json{{"a2", q.a2},
                {"a1", q.a1},
                {"a0", q.a0},
                {"positive_roots", q.positive_roots},
                {"unique_positive", q.unique_positive},
                {"two_positive", q.two_positive}};
}

inline Json to_json(const ContinuationRecord& r) {
    return Json{{"lambda", r.lambda},
                {"c", r.c},
                {"psi_norm", r.psi_norm},
                {"residual", r.residual},
                {"newton_steps", r.newton_steps}};
}

inline Json to_json(const BootstrapTable& t) {
    Json rows = Json::array();
    for (const auto& row : t.rows)
        rows.push_back(Json{{"i", row.i},
                            {"q", row.q},
                            {"k", row.k},
                            {"c", row.c},
                            {"r", std::isfinite(row.r) ? Json(row.r) : Json("inf")}});
    Json j{{"t", t.t},
           {"t0", t.t0},
           {"qbar", std::isfinite(t.qbar) ? Json(t.qbar) : Json(nullptr)},
           {"ratio", t.ratio},
           {"p0", std::isfinite(t.p0) ? Json(t.p0) : Json("inf")},
           {"escaping", t.escaping},
           {"rows", rows}};
    j["escape_index"] = t.escape_index ? Json(*t.escape_index) : Json(nullptr);
    return j;
}

}  // namespace constraints
