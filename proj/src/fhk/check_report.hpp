#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace fhk {

enum class Status { pass, fail, not_applicable };

/// Outcome of one property check. `property` is a stable identifier of the mathematical
/// statement being tested (e.g. "three-point-inequality"); `fitted_constant` is the constant
/// that makes lhs <= fitted_constant * rhs hold on the sampled corpus.
struct CheckReport {
    std::string check_name;
    std::string property;
    nlohmann::json params = nlohmann::json::object();
    double lhs = 0.0;
    double rhs = 0.0;
    double fitted_constant = 0.0;
    Status status = Status::fail;
    double quadrature_error = 0.0;
    std::string notes;

    bool pass() const { return status == Status::pass; }
    bool failed() const { return status == Status::fail; }
};

const char* status_name(Status s);
nlohmann::json to_json(const CheckReport& r);
nlohmann::json to_json(const std::vector<CheckReport>& rs);

/// Version tag written next to every JSON bundle.
inline constexpr int report_schema_version = 1;

} // namespace fhk
