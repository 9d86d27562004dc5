#include "fhk/check_report.hpp"

#include <cmath>

namespace fhk {

const char* status_name(Status s) {
    switch (s) {
    case Status::pass: return "pass";
    case Status::fail: return "fail";
    case Status::not_applicable: return "not_applicable";
    }
    return "fail";
}

namespace {

// JSON has no inf/nan; keep them readable instead of silently emitting null.
nlohmann::json num(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

} // namespace

nlohmann::json to_json(const CheckReport& r) {
    nlohmann::json j;
    j["check_name"] = r.check_name;
    j["property"] = r.property;
    j["params"] = r.params;
    j["lhs"] = num(r.lhs);
    j["rhs"] = num(r.rhs);
    j["fitted_constant"] = num(r.fitted_constant);
    j["pass"] = r.pass();
    j["status"] = status_name(r.status);
    j["quadrature_error"] = num(r.quadrature_error);
    if (!r.notes.empty()) j["notes"] = r.notes;
    return j;
}

nlohmann::json to_json(const std::vector<CheckReport>& rs) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rs) arr.push_back(to_json(r));
    return arr;
}

} // namespace fhk
