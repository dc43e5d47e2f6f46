#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "spinmix/scenario.hpp"

namespace {

using nlohmann::json;

int fail_usage(const std::string& message) {
    std::cerr << "spinmix: " << message << "\n";
    return 2;
}

std::string load_target(const std::string& target) {
    for (const std::string& name : spinmix::builtin_names()) {
        if (name == target) {
            return spinmix::builtin_text(name);
        }
    }
    std::ifstream in(target);
    if (!in) {
        throw std::runtime_error("no builtin scenario or readable file named \"" + target +
                                 "\" (try `spinmix list`)");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void collect_failures(const spinmix::ScenarioReport& report, json& failures) {
    for (const std::string& failure : report.failures) {
        json entry = json::parse(failure);
        entry["scenario"] = report.scenario;
        failures.push_back(std::move(entry));
    }
    for (const spinmix::ScenarioReport& child : report.children) {
        collect_failures(child, failures);
    }
}

std::filesystem::path resolve_output_path(const std::string& out_path) {
    std::filesystem::path path(out_path);
    if (path.is_relative()) {
        if (const char* dir = std::getenv("SPINMIX_OUT_DIR")) {
            path = std::filesystem::path(dir) / path;
        }
    }
    return path;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spinmix: spin-1/2 assembly moments by independent routes"};
    app.require_subcommand(1);

    CLI::App* list_cmd = app.add_subcommand("list", "list builtin scenarios");

    CLI::App* run_cmd = app.add_subcommand("run", "run a scenario file or builtin");
    std::string target;
    run_cmd->add_option("scenario", target, "scenario file path or builtin name")->required();
    std::optional<int> n_override;
    run_cmd->add_option("--n", n_override, "override the site count");
    std::optional<std::string> axis_override;
    run_cmd->add_option("--axis", axis_override,
                        "override the state axis (drops pinned expectations)");
    std::optional<std::string> routes_override;
    run_cmd->add_option("--routes", routes_override,
                        "comma-separated routes (dense,trace,product-fast,monte-carlo)");
    std::optional<std::int64_t> shots_override;
    run_cmd->add_option("--shots", shots_override, "Monte Carlo shot count");
    std::optional<std::uint64_t> seed_override;
    run_cmd->add_option("--seed", seed_override, "Monte Carlo seed");
    std::string format = "text";
    run_cmd->add_option("--format", format, "output format")
        ->check(CLI::IsMember({"text", "csv", "structured"}));
    std::string out_path;
    run_cmd->add_option("--out", out_path,
                        "write the report to this path (relative paths resolve against "
                        "$SPINMIX_OUT_DIR when set) instead of stdout");
    bool strict = false;
    run_cmd->add_flag("--strict", strict,
                      "fail on any cross-route disagreement, including Monte Carlo");

    CLI11_PARSE(app, argc, argv);

    if (list_cmd->parsed()) {
        for (const std::string& name : spinmix::builtin_names()) {
            std::cout << name << "  -  " << spinmix::builtin_summary(name) << "\n";
        }
        return 0;
    }

    if (!run_cmd->parsed()) {
        return fail_usage("expected a subcommand (run or list)");
    }

    json document;
    try {
        document = json::parse(load_target(target));
    } catch (const json::parse_error& e) {
        return fail_usage(std::string("scenario syntax error: ") + e.what());
    } catch (const std::exception& e) {
        return fail_usage(e.what());
    }

    const bool has_overrides = n_override || axis_override || routes_override ||
                               shots_override || seed_override;
    if (document.contains("comparison") && has_overrides) {
        return fail_usage("--n/--axis/--routes/--shots/--seed do not apply to comparison "
                          "scenarios; edit the document instead");
    }
    if (n_override) {
        document["n_sites"] = *n_override;
    }
    if (axis_override) {
        if (!document.contains("state") || !document["state"].is_object()) {
            return fail_usage("--axis needs a scenario with a state block");
        }
        document["state"]["axis"] = *axis_override;
        if (document.contains("expected")) {
            document.erase("expected");
            json annotations = document.value("annotations", json::array());
            annotations.push_back("pinned expectations dropped: state axis overridden from "
                                  "the command line");
            document["annotations"] = annotations;
        }
    }
    if (routes_override) {
        json routes = json::array();
        std::stringstream stream(*routes_override);
        std::string route;
        while (std::getline(stream, route, ',')) {
            if (!route.empty()) {
                routes.push_back(route);
            }
        }
        document["routes"] = routes;
    }
    if (shots_override) {
        document["shots"] = *shots_override;
    }
    if (seed_override) {
        document["seed"] = *seed_override;
    }

    spinmix::ScenarioReport report;
    try {
        const spinmix::ScenarioSpec spec = spinmix::parse_scenario(document.dump());
        report = spinmix::run_scenario(spec);
    } catch (const spinmix::ScenarioError& e) {
        return fail_usage(e.what());
    } catch (const std::exception& e) {
        return fail_usage(std::string("scenario failed: ") + e.what());
    }

    const std::string rendered =
        spinmix::emit_report(report, spinmix::report_format_from_name(format));
    if (!out_path.empty()) {
        const std::filesystem::path path = resolve_output_path(out_path);
        std::ofstream out(path);
        if (!out) {
            return fail_usage("cannot write report to " + path.string());
        }
        out << rendered;
    } else {
        std::cout << rendered;
    }

    const bool ok = strict ? report.strict_passed : report.passed;
    if (!ok) {
        json failures = json::array();
        collect_failures(report, failures);
        std::cerr << failures.dump() << "\n";
        return 1;
    }
    return 0;
}
