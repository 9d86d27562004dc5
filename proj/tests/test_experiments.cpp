#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "fhk/error.hpp"
#include "fhk/experiments.hpp"

using namespace fhk;
using nlohmann::json;

namespace {
ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::internal;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}
} // namespace

TEST_CASE("registry entries are unique and resolvable") {
    std::set<std::string> names;
    for (const auto& e : exp::registry()) {
        CHECK(names.insert(e.name).second);
        CHECK(!e.property.empty());
        CHECK(!e.description.empty());
        CHECK(e.defaults.contains("params"));
        // every default configuration validates
        CHECK_NOTHROW(exp::resolve_config(e, json::object(), {}));
        CHECK(&exp::find_experiment(e.name) == &e);
    }
    CHECK(names.size() >= 13);
    CHECK(kind_of([] { exp::find_experiment("no_such_experiment"); }) == ErrorKind::config);
}

TEST_CASE("configuration errors name the offending entry") {
    const auto& e = exp::find_experiment("lemma23_fuzz");
    CHECK(kind_of([&] { exp::resolve_config(e, json::parse(R"({"bogus":1})"), {}); }) == ErrorKind::config);
    CHECK(kind_of([&] { exp::resolve_config(e, json::parse(R"({"params":{"bogus":1}})"), {}); }) ==
          ErrorKind::config);
    CHECK(kind_of([&] { exp::resolve_config(e, json::parse(R"({"seed":-3})"), {}); }) == ErrorKind::config);
    CHECK(kind_of([&] { exp::resolve_config(e, json::parse(R"({"schema_version":99})"), {}); }) ==
          ErrorKind::config);
    CHECK(kind_of([&] { exp::resolve_config(e, json::array(), {}); }) == ErrorKind::config);
    try {
        exp::resolve_config(e, json::parse(R"({"params":{"bogus":1}})"), {});
    } catch (const Error& err) {
        CHECK(std::string(err.what()).find("bogus") != std::string::npos);
    }

    // --tol needs a primary tolerance
    exp::RunOptions o;
    o.tol = 1e-3;
    CHECK(kind_of([&] { exp::resolve_config(e, json::object(), o); }) == ErrorKind::config);
    const auto cfg = exp::resolve_config(exp::find_experiment("constant_exact"), json::object(), o);
    CHECK(cfg.at("params").at("tol").get<double>() == 1e-3);

    o.tol.reset();
    o.seed = 42;
    CHECK(exp::resolve_config(e, json::object(), o).at("seed").get<std::uint64_t>() == 42);
}

TEST_CASE("user coefficients replace the default block") {
    const auto& e = exp::find_experiment("constant_exact");
    const auto cfg = exp::resolve_config(
        e, json::parse(R"({"coefficients":{"a":{"kind":"constant","params":{"value":2}}}})"), {});
    CHECK(cfg.at("coefficients").at("a").at("params").at("value").get<double>() == 2.0);
    CHECK(!cfg.at("coefficients").contains("b"));
}

TEST_CASE("CSV quoting") {
    CHECK(exp::csv_field("plain") == "plain");
    CHECK(exp::csv_field("a,b") == "\"a,b\"");
    CHECK(exp::csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(exp::csv_field("two\nlines") == "\"two\nlines\"");
    CHECK(exp::csv_value(json(0.1)) == "0.10000000000000001");
    CHECK(exp::csv_value(json(3)) == "3");
    CHECK(exp::csv_value(json()) == "");
    CHECK(exp::csv_value(json::array({1, 2})) == "\"[1,2]\"");
}

TEST_CASE("fuzz experiment with a fixed seed is byte-reproducible") {
    namespace fs = std::filesystem;
    const auto root = fs::temp_directory_path() / "fhk_test_experiments";
    fs::remove_all(root);
    exp::RunOptions o;
    o.seed = 7;
    const json user = json::parse(R"({"params":{"n":5000}})");
    for (const char* sub : {"a", "b"}) {
        const auto r = exp::run_experiment("lemma23_fuzz", user, o);
        CHECK(!r.failed());
        exp::write_artifacts(r, (root / sub).string());
    }
    const auto ra = slurp(root / "a" / "lemma23_fuzz" / "report.json");
    CHECK(!ra.empty());
    CHECK(ra == slurp(root / "b" / "lemma23_fuzz" / "report.json"));
    CHECK(slurp(root / "a" / "lemma23_fuzz" / "checks.csv") == slurp(root / "b" / "lemma23_fuzz" / "checks.csv"));
    const auto rep = json::parse(ra);
    CHECK(rep.at("config").at("seed") == 7);
    CHECK(rep.at("schema_version") == report_schema_version);

    // a different seed draws different tuples
    o.seed = 8;
    exp::write_artifacts(exp::run_experiment("lemma23_fuzz", user, o), (root / "c").string());
    CHECK(slurp(root / "c" / "lemma23_fuzz" / "report.json") != ra);
    fs::remove_all(root);
}

TEST_CASE("constant-coefficient experiment passes end to end") {
    const auto r = exp::run_experiment("constant_exact", json::object(), {});
    CHECK(!r.failed());
    CHECK(!r.checks.empty());
    const auto rep = r.report();
    CHECK(rep.at("experiment") == "constant_exact");
    CHECK(rep.at("checks").is_array());
}
