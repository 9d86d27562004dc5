// Batch driver over the fhk C API.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fhk/fhk.h"

namespace {

enum Exit { ok = 0, check_failed = 1, config_error = 2, non_convergence = 3, other_error = 4 };

int exit_for(fhk_status s) {
    switch (s) {
    case FHK_OK: return ok;
    case FHK_ERR_CONFIG:
    case FHK_ERR_DATA: return config_error;
    case FHK_ERR_NON_CONVERGENCE: return non_convergence;
    default: return other_error;
    }
}

const char* status_label(fhk_status s) {
    switch (s) {
    case FHK_ERR_DOMAIN: return "domain error";
    case FHK_ERR_DATA: return "data error";
    case FHK_ERR_CONFIG: return "config error";
    case FHK_ERR_NON_CONVERGENCE: return "non-convergence";
    case FHK_ERR_CONSISTENCY: return "consistency error";
    case FHK_ERR_ARGUMENT: return "argument error";
    default: return "internal error";
    }
}

std::string number(const nlohmann::json& v) {
    if (v.is_number()) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.5g", v.get<double>());
        return buf;
    }
    return v.is_string() ? v.get<std::string>() : "-";
}

void list() {
    const int n = fhk_experiment_count();
    for (int i = 0; i < n; ++i) {
        const char *name, *desc, *prop;
        fhk_experiment_info(i, &name, &desc, &prop);
        std::printf("%-26s %s [%s]\n", name, desc, prop);
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Run kernel construction and verification experiments"};
    std::string config_path, experiment, out_dir = "results";
    std::uint64_t seed = 0;
    double tol = 0.0;
    int threads = 0;
    bool list_only = false, print_config = false;
    app.add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
    app.add_option("--experiment", experiment, "experiment name (overrides \"experiment\" in the config)");
    app.add_option("--out", out_dir, "artifact directory")->capture_default_str();
    auto* seed_opt = app.add_option("--seed", seed, "root seed");
    auto* tol_opt = app.add_option("--tol", tol, "replaces the experiment's primary tolerance")
                        ->check(CLI::PositiveNumber);
    app.add_option("--threads", threads, "worker threads (0 keeps the configured value)")->check(CLI::NonNegativeNumber);
    app.add_flag("--list", list_only, "print the experiment registry and exit");
    app.add_flag("--print-config", print_config, "print the resolved configuration and exit");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? ok : config_error;
    }

    if (list_only) {
        list();
        return ok;
    }

    nlohmann::json cfg = nlohmann::json::object();
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        try {
            cfg = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            std::cerr << "config error: " << config_path << ": " << e.what() << "\n";
            return config_error;
        }
        if (!cfg.is_object()) {
            std::cerr << "config error: " << config_path << ": top level must be an object\n";
            return config_error;
        }
        if (cfg.contains("experiment")) {
            if (experiment.empty()) experiment = cfg["experiment"].get<std::string>();
            cfg.erase("experiment");
        }
    }
    if (experiment.empty()) {
        std::cerr << "config error: no experiment given (use --experiment or --list)\n";
        return config_error;
    }

    fhk_run_options opt{};
    opt.has_seed = seed_opt->count() > 0;
    opt.seed = seed;
    opt.has_tol = tol_opt->count() > 0;
    opt.tol = tol;
    opt.threads = threads;
    const std::string cfg_text = cfg.dump();

    if (print_config) {
        char* resolved = nullptr;
        const fhk_status s = fhk_resolve_config(experiment.c_str(), cfg_text.c_str(), &opt, &resolved);
        if (s != FHK_OK) {
            std::cerr << status_label(s) << ": " << fhk_last_error() << "\n";
            return exit_for(s);
        }
        std::cout << resolved << "\n";
        fhk_free_string(resolved);
        return ok;
    }

    opt.out_dir = out_dir.c_str();
    char* report = nullptr;
    int failed = 0;
    const fhk_status s = fhk_run_experiment(experiment.c_str(), cfg_text.c_str(), &opt, &report, &failed);
    if (s != FHK_OK) {
        std::cerr << status_label(s) << ": " << fhk_last_error() << "\n";
        return exit_for(s);
    }
    const auto r = nlohmann::json::parse(report);
    fhk_free_string(report);
    for (const auto& c : r.at("checks")) {
        const std::string st = c.at("status").get<std::string>();
        std::printf("%-4s %-44s lhs=%-12s rhs=%-12s %s\n", st == "pass" ? "PASS" : st == "fail" ? "FAIL" : "n/a",
                    c.at("check_name").get<std::string>().c_str(), number(c.at("lhs")).c_str(),
                    number(c.at("rhs")).c_str(), c.value("notes", std::string()).c_str());
    }
    const auto& sm = r.at("summary");
    std::printf("%s: %d pass, %d fail, %d not applicable; artifacts in %s/%s\n", experiment.c_str(),
                sm.at("pass").get<int>(), sm.at("fail").get<int>(), sm.at("not_applicable").get<int>(),
                out_dir.c_str(), experiment.c_str());
    return failed ? check_failed : ok;
}
