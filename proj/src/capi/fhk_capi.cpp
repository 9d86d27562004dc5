#include "fhk/fhk.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include <json.hpp>

#include "fhk/duhamel.hpp"
#include "fhk/error.hpp"
#include "fhk/experiments.hpp"
#include "fhk/levi.hpp"
#include "fhk/poisson.hpp"

struct fhk_kernel {
    std::shared_ptr<const fhk::levi::Kernel> k;
};

struct fhk_full_kernel {
    std::unique_ptr<fhk::duhamel::FullKernel> k;
};

namespace {

thread_local std::string last_error;

fhk_status code(fhk::ErrorKind k) {
    switch (k) {
    case fhk::ErrorKind::domain: return FHK_ERR_DOMAIN;
    case fhk::ErrorKind::data: return FHK_ERR_DATA;
    case fhk::ErrorKind::config: return FHK_ERR_CONFIG;
    case fhk::ErrorKind::non_convergence: return FHK_ERR_NON_CONVERGENCE;
    case fhk::ErrorKind::consistency: return FHK_ERR_CONSISTENCY;
    default: return FHK_ERR_INTERNAL;
    }
}

template <class F>
fhk_status guarded(F&& f) {
    last_error.clear();
    try {
        f();
        return FHK_OK;
    } catch (const fhk::Error& e) {
        last_error = e.what();
        return code(e.kind());
    } catch (const nlohmann::json::exception& e) {
        last_error = std::string("json: ") + e.what();
        return FHK_ERR_CONFIG;
    } catch (const std::exception& e) {
        last_error = e.what();
        return FHK_ERR_INTERNAL;
    } catch (...) {
        last_error = "unknown exception";
        return FHK_ERR_INTERNAL;
    }
}

fhk_status bad_argument(const char* what) {
    last_error = what;
    return FHK_ERR_ARGUMENT;
}

char* dup(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (p) std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

nlohmann::json parse_or_empty(const char* s) {
    if (!s || !*s) return nlohmann::json::object();
    return nlohmann::json::parse(s);
}

fhk::exp::RunOptions options(const fhk_run_options* o) {
    fhk::exp::RunOptions r;
    if (!o) return r;
    if (o->has_seed) r.seed = o->seed;
    if (o->has_tol) r.tol = o->tol;
    r.threads = o->threads;
    if (o->out_dir) r.artifacts_dir = o->out_dir;
    return r;
}

} // namespace

extern "C" {

const char* fhk_version(void) { return "1.0.0"; }

const char* fhk_last_error(void) { return last_error.c_str(); }

void fhk_free_string(char* s) { std::free(s); }

int fhk_experiment_count(void) { return static_cast<int>(fhk::exp::registry().size()); }

fhk_status fhk_experiment_info(int index, const char** name, const char** description, const char** property) {
    const auto& reg = fhk::exp::registry();
    if (index < 0 || index >= static_cast<int>(reg.size())) return bad_argument("experiment index out of range");
    if (name) *name = reg[index].name.c_str();
    if (description) *description = reg[index].description.c_str();
    if (property) *property = reg[index].property.c_str();
    last_error.clear();
    return FHK_OK;
}

fhk_status fhk_resolve_config(const char* name, const char* config_json, const fhk_run_options* opt,
                              char** resolved_json) {
    if (!name || !resolved_json) return bad_argument("null argument");
    return guarded([&] {
        const auto& e = fhk::exp::find_experiment(name);
        *resolved_json = dup(fhk::exp::resolve_config(e, parse_or_empty(config_json), options(opt)).dump(2));
    });
}

fhk_status fhk_run_experiment(const char* name, const char* config_json, const fhk_run_options* opt,
                              char** report_json, int* failed) {
    if (!name) return bad_argument("null experiment name");
    return guarded([&] {
        auto r = fhk::exp::run_experiment(name, parse_or_empty(config_json), options(opt));
        if (opt && opt->out_dir) fhk::exp::write_artifacts(r, opt->out_dir);
        if (report_json) *report_json = dup(r.report().dump(2));
        if (failed) *failed = r.failed() ? 1 : 0;
    });
}

fhk_status fhk_poisson_density(double t, const double* x, int dim, double* out) {
    if (!x || !out || dim < 1) return bad_argument("poisson density needs x, out and dim >= 1");
    return guarded([&] {
        fhk::require(t > 0.0, fhk::ErrorKind::domain, "poisson density: need t > 0");
        *out = fhk::poisson::density(t, std::span<const double>(x, dim));
    });
}

fhk_status fhk_kernel_create(const char* coefficients_json, const char* series_json, const char* quadrature_json,
                             fhk_kernel** out) {
    if (!coefficients_json || !out) return bad_argument("null argument");
    *out = nullptr;
    return guarded([&] {
        auto co = fhk::fields::Coefficients::from_json(nlohmann::json::parse(coefficients_json), 1);
        fhk::fields::validate(co);
        auto ss = parse_or_empty(series_json).get<fhk::levi::SeriesSpec>();
        auto qs = parse_or_empty(quadrature_json).get<fhk::quad::QuadratureSpec>();
        auto h = std::make_unique<fhk_kernel>();
        h->k = std::make_shared<const fhk::levi::Kernel>(co, ss, qs);
        *out = h.release();
    });
}

void fhk_kernel_destroy(fhk_kernel* k) { delete k; }

#define FHK_KERNEL_EVAL(fn, method)                                                                     \
    fhk_status fn(const fhk_kernel* k, double t, double x, double s, double y, double* out) {          \
        if (!k || !out) return bad_argument("null argument");                                           \
        return guarded([&] { *out = k->k->method(t, x, s, y); });                                       \
    }

FHK_KERNEL_EVAL(fhk_kernel_p, p)
FHK_KERNEL_EVAL(fhk_kernel_p0, p0)
FHK_KERNEL_EVAL(fhk_kernel_phi, phi)

fhk_status fhk_full_kernel_create(const fhk_kernel* k, const char* duhamel_json, fhk_full_kernel** out) {
    if (!k || !out) return bad_argument("null argument");
    *out = nullptr;
    return guarded([&] {
        auto spec = parse_or_empty(duhamel_json).get<fhk::duhamel::DuhamelSpec>();
        auto h = std::make_unique<fhk_full_kernel>();
        h->k = std::make_unique<fhk::duhamel::FullKernel>(k->k, spec);
        *out = h.release();
    });
}

void fhk_full_kernel_destroy(fhk_full_kernel* k) { delete k; }

fhk_status fhk_full_kernel_p(const fhk_full_kernel* k, double t, double x, double s, double y, double* out) {
    if (!k || !out) return bad_argument("null argument");
    return guarded([&] { *out = k->k->p(t, x, s, y); });
}

} // extern "C"
