#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "spinmix/core.hpp"
#include "spinmix/observables.hpp"
#include "spinmix/sampler.hpp"
#include "spinmix/states.hpp"

// Declarative scenario runner: JSON scenario documents select a state, a
// set of collective observables, and the evaluation routes to run; reports
// carry every route side by side together with cross-route agreement
// checks and optional pinned expectations.
//
// The schema is documented in the README; scenarios/*.json hold the
// built-in documents, which are also compiled into the library.

namespace spinmix {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kScenarioSchemaVersion = 1;
inline constexpr std::int64_t kDefaultShots = 100000;
inline constexpr std::uint64_t kDefaultSeed = 12345;

enum class StateKind {
    PsiDelta,         // product of axis eigenkets with a sign pattern
    BalancedMixture,  // uniform mixture of all balanced orderings
    MaximallyMixed,   // I/2^N
    CustomSingleSpin, // one explicit ket
    CustomEnsemble,   // explicit weighted product states
    Comparison,       // two sub-scenarios reported side by side
};

enum class Route { Dense, Trace, ProductFast, MonteCarlo };

std::string route_name(Route route);
Route route_from_name(const std::string& name);

std::string state_kind_name(StateKind kind);

/// Parse or validation failure; `semantic` distinguishes well-formed
/// documents with invalid content from syntax errors (which carry the
/// parser's position report).
class ScenarioError : public std::runtime_error {
  public:
    ScenarioError(bool semantic, const std::string& message)
        : std::runtime_error(message), semantic_(semantic) {}

    bool semantic() const { return semantic_; }

  private:
    bool semantic_;
};

/// One observable to evaluate: a collective axis component, or an inline
/// dense matrix (dense/trace routes only).
struct ObservableSpec {
    std::optional<Axis> axis;
    std::optional<Matrix> dense;
    std::string label;
};

/// Pinned expected values for one observable. Exact routes are checked at
/// `tolerance`; the Monte Carlo route is checked statistically instead.
struct Expectation {
    std::string observable;
    std::optional<double> mean;
    std::optional<double> variance;
    double tolerance = 1e-10;
    std::string note;
};

struct ScenarioSpec {
    std::string name;
    StateKind state_kind = StateKind::PsiDelta;
    int n_sites = 0;

    Axis state_axis = Axis::X;                       // psi-delta, balanced-mixture
    std::optional<std::vector<int>> pattern;         // psi-delta; nullopt = first balanced
    std::optional<std::pair<Complex, Complex>> amplitudes;  // custom-single-spin
    struct MemberSpec {
        double weight;
        std::vector<std::pair<Complex, Complex>> kets;
    };
    std::vector<MemberSpec> members;                 // custom-ensemble

    std::vector<ObservableSpec> observables;
    std::vector<Route> routes;
    std::int64_t shots = kDefaultShots;
    std::uint64_t seed = kDefaultSeed;
    std::vector<Expectation> expected;
    std::vector<std::string> annotations;            // copied into the report
    bool annotate_diagonal_shortcut = false;

    std::vector<ScenarioSpec> children;              // comparison only, size 2
    std::string comparison_note;

    bool is_comparison() const { return state_kind == StateKind::Comparison; }
};

/// Result of one (observable, route) cell. Skipped cells carry the reason
/// (e.g. a dense-cap violation with its remediation hint).
struct RouteResult {
    std::string observable;
    Route route;
    bool evaluated = false;
    std::string skip_reason;
    double mean = 0.0;
    double variance = 0.0;
    std::optional<double> stderr_mean;   // monte-carlo only
    std::optional<std::int64_t> shots;   // monte-carlo only
    std::string status;                  // "pass" | "fail" | "skip"
};

/// One cross-route agreement check for an observable: "exact" compares all
/// exact routes pairwise at 1e-10; "monte-carlo" compares sampled moments
/// against an exact reference at the 5-sigma statistical bounds.
struct AgreementCheck {
    std::string observable;
    std::string kind;
    double mean_delta = 0.0;
    double mean_bound = 0.0;
    double variance_delta = 0.0;
    double variance_bound = 0.0;
    bool pass = true;
};

struct ScenarioReport {
    std::string scenario;
    std::string state_summary;
    int n_sites = 0;
    std::vector<RouteResult> results;
    std::vector<AgreementCheck> agreements;
    std::vector<std::string> annotations;
    std::vector<std::string> failures;   // machine-readable failure list

    std::uint64_t seed = kDefaultSeed;
    std::string rng_id;
    std::string version;
    int schema_version = kScenarioSchemaVersion;

    bool passed = true;         // expectations + exact-route agreement
    bool strict_passed = true;  // additionally Monte Carlo agreement

    std::vector<ScenarioReport> children;  // comparison only
    std::string comparison_note;
};

enum class ReportFormat { Text, Csv, Structured };

ReportFormat report_format_from_name(const std::string& name);

/// Parses and validates a scenario document. Throws ScenarioError; unknown
/// fields are rejected.
ScenarioSpec parse_scenario(const std::string& text);

/// Evaluates every requested route, fills agreement checks, expectation
/// statuses and annotations.
ScenarioReport run_scenario(const ScenarioSpec& spec);

/// Renders a report. The same numbers appear in all formats (15
/// significant digits in text/csv; full precision in structured output).
std::string emit_report(const ScenarioReport& report, ReportFormat format);

/// Re-parses a structured-format document back into a report.
ScenarioReport report_from_structured(const std::string& text);

/// Built-in scenario documents, in listing order.
std::vector<std::string> builtin_names();
const std::string& builtin_text(const std::string& name);
std::string builtin_summary(const std::string& name);

}  // namespace spinmix
