#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fhk/check_report.hpp"

namespace fhk::exp {

struct RunOptions {
    std::optional<std::uint64_t> seed;
    std::optional<double> tol; // replaces the experiment's primary tolerance
    int threads = 0;               // 0: keep the configured value
    std::string artifacts_dir;     // where large optional artifacts (ensembles) go
};

/// CSV table emitted next to the report.
struct Table {
    std::string name;
    std::vector<std::string> header;
    std::vector<std::vector<nlohmann::json>> rows;
};

struct ExperimentResult {
    std::string name;
    std::string property;
    nlohmann::json config;
    std::vector<CheckReport> checks;
    std::vector<Table> tables;

    bool failed() const;
    nlohmann::json report() const;
};

struct Experiment {
    std::string name;
    std::string description;
    std::string property;     // identifier of the statement the experiment tests
    std::string tol_key;      // params entry replaced by --tol
    nlohmann::json defaults;  // full default configuration
    std::function<ExperimentResult(const nlohmann::json& cfg, const RunOptions& opt)> run;
};

const std::vector<Experiment>& registry();
const Experiment& find_experiment(const std::string& name);

/// Defaults merged with the user config (RFC 7386 merge patch), then seed / threads / tol applied
/// and every section validated. Throws Error(config) naming the first failing constraint.
nlohmann::json resolve_config(const Experiment& e, const nlohmann::json& user, const RunOptions& opt);

ExperimentResult run_experiment(const std::string& name, const nlohmann::json& user, const RunOptions& opt);

/// report.json, checks.csv and one CSV per table under dir/<experiment>/.
void write_artifacts(const ExperimentResult& r, const std::string& dir);

/// RFC 4180 field quoting.
std::string csv_field(const std::string& s);
std::string csv_value(const nlohmann::json& v);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<nlohmann::json>>& rows);

} // namespace fhk::exp
