#include "spinmix/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "builtin_scenarios.hpp"

namespace spinmix {

using nlohmann::json;

namespace {

constexpr double kRouteAgreementTol = 1e-10;

std::string fmt15(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof buffer, "%.15g", value);
    return buffer;
}

[[noreturn]] void semantic_error(const std::string& message) {
    throw ScenarioError(true, "scenario error: " + message);
}

void reject_unknown(const json& object, std::initializer_list<const char*> allowed,
                    const std::string& where) {
    for (const auto& item : object.items()) {
        bool known = false;
        for (const char* key : allowed) {
            if (item.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) {
            semantic_error("unknown field \"" + item.key() + "\" in " + where);
        }
    }
}

const json& require_field(const json& object, const char* key, const std::string& where) {
    auto it = object.find(key);
    if (it == object.end()) {
        semantic_error("missing field \"" + std::string(key) + "\" in " + where);
    }
    return *it;
}

double number_field(const json& value, const std::string& where) {
    if (!value.is_number()) {
        semantic_error(where + " must be a number");
    }
    return value.get<double>();
}

Complex parse_complex(const json& value, const std::string& where) {
    if (!value.is_array() || value.size() != 2) {
        semantic_error(where + " must be a [re, im] pair");
    }
    return {number_field(value[0], where), number_field(value[1], where)};
}

std::pair<Complex, Complex> parse_ket(const json& value, const std::string& where) {
    if (value.is_string()) {
        const std::string token = value.get<std::string>();
        if (token.size() != 2 || (token[0] != '+' && token[0] != '-')) {
            semantic_error(where + ": unknown ket token \"" + token +
                           "\" (expected e.g. \"+x\" or amplitude pairs)");
        }
        Axis axis = Axis::X;
        try {
            axis = axis_from_name(token[1]);
        } catch (const std::invalid_argument&) {
            semantic_error(where + ": unknown ket token \"" + token + "\"");
        }
        const SingleSpinKet ket = axis_eigenket(axis, token[0] == '+' ? 1 : -1);
        return {ket.up, ket.down};
    }
    if (!value.is_array() || value.size() != 2) {
        semantic_error(where + " must be a ket token or [[re,im],[re,im]]");
    }
    return {parse_complex(value[0], where), parse_complex(value[1], where)};
}

Axis parse_axis(const json& value, const std::string& where) {
    if (!value.is_string() || value.get<std::string>().size() != 1) {
        semantic_error(where + " must be one of \"x\", \"y\", \"z\"");
    }
    try {
        return axis_from_name(value.get<std::string>()[0]);
    } catch (const std::invalid_argument&) {
        semantic_error(where + " must be one of \"x\", \"y\", \"z\"");
    }
}

// "N/4" in an expectation resolves against the scenario's site count.
double parse_pinned_value(const json& value, int n_sites, const std::string& where) {
    if (value.is_string()) {
        if (value.get<std::string>() == "N/4") {
            return n_sites / 4.0;
        }
        semantic_error(where + ": unknown value token \"" + value.get<std::string>() +
                       "\" (only \"N/4\" is supported)");
    }
    return number_field(value, where);
}

std::string observable_label(const ObservableSpec& obs) { return obs.label; }

std::string axis_observable_label(Axis axis, int n_sites) {
    return std::string(n_sites == 1 ? "s_" : "S_") + axis_name(axis);
}

void parse_state_block(const json& state, ScenarioSpec& spec) {
    if (!state.is_object()) {
        semantic_error("\"state\" must be an object");
    }
    const json& kind = require_field(state, "kind", "state");
    const std::string kind_name = kind.is_string() ? kind.get<std::string>() : "";
    if (kind_name == "psi-delta") {
        reject_unknown(state, {"kind", "axis", "pattern"}, "state");
        spec.state_kind = StateKind::PsiDelta;
        spec.state_axis = parse_axis(require_field(state, "axis", "state"), "state.axis");
        const json& pattern = require_field(state, "pattern", "state");
        if (pattern.is_string() && pattern.get<std::string>() == "first-balanced") {
            if (spec.n_sites % 2 != 0) {
                semantic_error("a balanced pattern needs an even site count, got " +
                               std::to_string(spec.n_sites));
            }
            spec.pattern.reset();
        } else if (pattern.is_array()) {
            std::vector<int> signs;
            for (const json& entry : pattern) {
                if (!entry.is_number_integer() ||
                    (entry.get<int>() != 1 && entry.get<int>() != -1)) {
                    semantic_error("state.pattern entries must be +1 or -1");
                }
                signs.push_back(entry.get<int>());
            }
            if (static_cast<int>(signs.size()) != spec.n_sites) {
                semantic_error("state.pattern length " + std::to_string(signs.size()) +
                               " does not match n_sites " + std::to_string(spec.n_sites));
            }
            spec.pattern = std::move(signs);
        } else {
            semantic_error("state.pattern must be \"first-balanced\" or a list of +-1");
        }
    } else if (kind_name == "balanced-mixture") {
        reject_unknown(state, {"kind", "axis"}, "state");
        spec.state_kind = StateKind::BalancedMixture;
        spec.state_axis = parse_axis(require_field(state, "axis", "state"), "state.axis");
        if (spec.n_sites % 2 != 0) {
            semantic_error("a balanced mixture needs an even site count, got " +
                           std::to_string(spec.n_sites));
        }
        if (spec.n_sites > kBalancedEnumerationCap) {
            semantic_error("balanced mixtures are capped at " +
                           std::to_string(kBalancedEnumerationCap) + " sites");
        }
    } else if (kind_name == "maximally-mixed") {
        reject_unknown(state, {"kind"}, "state");
        spec.state_kind = StateKind::MaximallyMixed;
        if (spec.n_sites > dense_site_cap()) {
            semantic_error("maximally-mixed needs a dense density operator; n_sites " +
                           std::to_string(spec.n_sites) + " exceeds the dense cap of " +
                           std::to_string(dense_site_cap()));
        }
    } else if (kind_name == "custom-single-spin") {
        reject_unknown(state, {"kind", "amplitudes"}, "state");
        spec.state_kind = StateKind::CustomSingleSpin;
        if (spec.n_sites != 1) {
            semantic_error("custom-single-spin requires n_sites = 1");
        }
        const json& amplitudes = require_field(state, "amplitudes", "state");
        spec.amplitudes = parse_ket(amplitudes, "state.amplitudes");
    } else if (kind_name == "custom-ensemble") {
        reject_unknown(state, {"kind", "members"}, "state");
        spec.state_kind = StateKind::CustomEnsemble;
        const json& members = require_field(state, "members", "state");
        if (!members.is_array() || members.empty()) {
            semantic_error("state.members must be a non-empty list");
        }
        double total_weight = 0.0;
        for (const json& member : members) {
            reject_unknown(member, {"weight", "kets"}, "state.members[]");
            ScenarioSpec::MemberSpec member_spec;
            member_spec.weight = number_field(require_field(member, "weight", "member"),
                                              "member.weight");
            if (member_spec.weight < 0.0 || member_spec.weight > 1.0) {
                semantic_error("member weights must lie in [0, 1]");
            }
            total_weight += member_spec.weight;
            const json& kets = require_field(member, "kets", "member");
            if (!kets.is_array() || static_cast<int>(kets.size()) != spec.n_sites) {
                semantic_error("each member needs exactly n_sites kets");
            }
            for (const json& ket : kets) {
                member_spec.kets.push_back(parse_ket(ket, "member.kets[]"));
            }
            spec.members.push_back(std::move(member_spec));
        }
        if (std::abs(total_weight - 1.0) > kTol) {
            semantic_error("member weights must sum to 1, got " + fmt15(total_weight));
        }
    } else {
        semantic_error("unknown state kind \"" + kind_name + "\"");
    }
}

void parse_observables(const json& observables, ScenarioSpec& spec) {
    if (!observables.is_array() || observables.empty()) {
        semantic_error("\"observables\" must be a non-empty list");
    }
    for (const json& entry : observables) {
        ObservableSpec obs;
        if (entry.is_string()) {
            obs.axis = parse_axis(entry, "observables[]");
            obs.label = axis_observable_label(*obs.axis, spec.n_sites);
        } else if (entry.is_object()) {
            reject_unknown(entry, {"label", "matrix"}, "observables[]");
            const json& label = require_field(entry, "label", "dense observable");
            if (!label.is_string() || label.get<std::string>().empty()) {
                semantic_error("dense observables need a non-empty string label");
            }
            obs.label = label.get<std::string>();
            const json& rows = require_field(entry, "matrix", "dense observable");
            const Eigen::Index dim = Eigen::Index(1) << spec.n_sites;
            if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != dim) {
                semantic_error("dense observable matrix must be 2^n_sites x 2^n_sites");
            }
            Matrix matrix(dim, dim);
            for (Eigen::Index r = 0; r < dim; ++r) {
                const json& row = rows[static_cast<std::size_t>(r)];
                if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != dim) {
                    semantic_error("dense observable matrix must be 2^n_sites x 2^n_sites");
                }
                for (Eigen::Index c = 0; c < dim; ++c) {
                    matrix(r, c) = parse_complex(row[static_cast<std::size_t>(c)],
                                                 "dense observable entry");
                }
            }
            obs.dense = std::move(matrix);
        } else {
            semantic_error("observables entries must be axis names or dense matrices");
        }
        for (const ObservableSpec& existing : spec.observables) {
            if (existing.label == obs.label) {
                semantic_error("duplicate observable \"" + obs.label + "\"");
            }
        }
        spec.observables.push_back(std::move(obs));
    }
}

void parse_routes(const json& routes, ScenarioSpec& spec) {
    if (!routes.is_array() || routes.empty()) {
        semantic_error("\"routes\" must be a non-empty list");
    }
    for (const json& entry : routes) {
        if (!entry.is_string()) {
            semantic_error("route entries must be strings");
        }
        Route route;
        try {
            route = route_from_name(entry.get<std::string>());
        } catch (const std::invalid_argument& e) {
            semantic_error(e.what());
        }
        if (std::find(spec.routes.begin(), spec.routes.end(), route) != spec.routes.end()) {
            semantic_error("duplicate route \"" + entry.get<std::string>() + "\"");
        }
        spec.routes.push_back(route);
    }
}

void parse_expected(const json& expected, ScenarioSpec& spec) {
    if (!expected.is_array()) {
        semantic_error("\"expected\" must be a list");
    }
    for (const json& entry : expected) {
        reject_unknown(entry, {"observable", "mean", "variance", "tolerance", "note"},
                       "expected[]");
        Expectation expectation;
        const json& label = require_field(entry, "observable", "expected[]");
        if (!label.is_string()) {
            semantic_error("expected[].observable must be a string");
        }
        expectation.observable = label.get<std::string>();
        bool known = false;
        for (const ObservableSpec& obs : spec.observables) {
            known = known || obs.label == expectation.observable;
        }
        if (!known) {
            semantic_error("expectation references unknown observable \"" +
                           expectation.observable + "\"");
        }
        if (entry.contains("mean")) {
            expectation.mean = parse_pinned_value(entry["mean"], spec.n_sites,
                                                  "expected[].mean");
        }
        if (entry.contains("variance")) {
            expectation.variance = parse_pinned_value(entry["variance"], spec.n_sites,
                                                      "expected[].variance");
        }
        if (entry.contains("tolerance")) {
            expectation.tolerance = number_field(entry["tolerance"], "expected[].tolerance");
            if (!(expectation.tolerance > 0.0)) {
                semantic_error("expected[].tolerance must be positive");
            }
        }
        if (entry.contains("note")) {
            if (!entry["note"].is_string()) {
                semantic_error("expected[].note must be a string");
            }
            expectation.note = entry["note"].get<std::string>();
        }
        spec.expected.push_back(std::move(expectation));
    }
}

ScenarioSpec parse_document(const json& document, bool top_level);

void parse_comparison(const json& comparison, ScenarioSpec& spec) {
    if (!comparison.is_object()) {
        semantic_error("\"comparison\" must be an object");
    }
    reject_unknown(comparison, {"note", "left", "right"}, "comparison");
    spec.state_kind = StateKind::Comparison;
    const json& note = require_field(comparison, "note", "comparison");
    if (!note.is_string() || note.get<std::string>().empty()) {
        semantic_error("comparison.note must be a non-empty string");
    }
    spec.comparison_note = note.get<std::string>();
    spec.children.push_back(parse_document(require_field(comparison, "left", "comparison"),
                                           false));
    spec.children.push_back(parse_document(require_field(comparison, "right", "comparison"),
                                           false));
}

ScenarioSpec parse_document(const json& document, bool top_level) {
    if (!document.is_object()) {
        semantic_error("scenario document must be a JSON object");
    }
    ScenarioSpec spec;
    reject_unknown(document,
                   {"schema_version", "name", "n_sites", "state", "observables", "routes",
                    "shots", "seed", "expected", "annotations", "annotate_diagonal_shortcut",
                    "comparison"},
                   "scenario document");

    if (top_level || document.contains("schema_version")) {
        const json& version = require_field(document, "schema_version", "scenario document");
        if (!version.is_number_integer() || version.get<int>() != kScenarioSchemaVersion) {
            semantic_error("unsupported schema_version (expected " +
                           std::to_string(kScenarioSchemaVersion) + ")");
        }
    }

    const json& name = require_field(document, "name", "scenario document");
    if (!name.is_string() || name.get<std::string>().empty()) {
        semantic_error("\"name\" must be a non-empty string");
    }
    spec.name = name.get<std::string>();

    if (document.contains("comparison")) {
        for (const char* key : {"n_sites", "state", "observables", "routes", "shots", "seed",
                                "expected", "annotate_diagonal_shortcut"}) {
            if (document.contains(key)) {
                semantic_error("comparison scenarios cannot carry \"" + std::string(key) +
                               "\"");
            }
        }
        parse_comparison(document["comparison"], spec);
        return spec;
    }

    const json& n_sites = require_field(document, "n_sites", "scenario document");
    if (!n_sites.is_number_integer() || n_sites.get<int>() < 1) {
        semantic_error("\"n_sites\" must be a positive integer");
    }
    spec.n_sites = n_sites.get<int>();

    parse_state_block(require_field(document, "state", "scenario document"), spec);
    parse_observables(require_field(document, "observables", "scenario document"), spec);
    parse_routes(require_field(document, "routes", "scenario document"), spec);

    if (document.contains("shots")) {
        const json& shots = document["shots"];
        if (!shots.is_number_integer() || shots.get<std::int64_t>() < 1) {
            semantic_error("\"shots\" must be a positive integer");
        }
        spec.shots = shots.get<std::int64_t>();
    }
    if (document.contains("seed")) {
        const json& seed = document["seed"];
        if (!seed.is_number_unsigned() && !seed.is_number_integer()) {
            semantic_error("\"seed\" must be a non-negative integer");
        }
        if (seed.is_number_integer() && seed.get<std::int64_t>() < 0) {
            semantic_error("\"seed\" must be a non-negative integer");
        }
        spec.seed = seed.get<std::uint64_t>();
    }
    if (document.contains("expected")) {
        parse_expected(document["expected"], spec);
    }
    if (document.contains("annotations")) {
        const json& annotations = document["annotations"];
        if (!annotations.is_array()) {
            semantic_error("\"annotations\" must be a list of strings");
        }
        for (const json& note : annotations) {
            if (!note.is_string()) {
                semantic_error("\"annotations\" must be a list of strings");
            }
            spec.annotations.push_back(note.get<std::string>());
        }
    }
    if (document.contains("annotate_diagonal_shortcut")) {
        const json& flag = document["annotate_diagonal_shortcut"];
        if (!flag.is_boolean()) {
            semantic_error("\"annotate_diagonal_shortcut\" must be a boolean");
        }
        spec.annotate_diagonal_shortcut = flag.get<bool>();
    }
    return spec;
}

// ----- realization ------------------------------------------------------------

struct Realization {
    std::optional<ProductState> product;
    std::optional<PureState> pure;
    std::optional<Ensemble> ensemble;
    std::optional<DensityOperator> rho;
    std::string pure_skip;
    std::string rho_skip;
    std::string summary;
    bool mixture = false;
};

std::vector<int> first_balanced_pattern(int n_sites) {
    std::vector<int> signs(n_sites, 1);
    std::fill(signs.begin() + n_sites / 2, signs.end(), -1);
    return signs;
}

std::string pattern_text(const std::vector<int>& signs) {
    std::string text;
    for (int sign : signs) {
        text += sign > 0 ? '+' : '-';
    }
    return text;
}

SingleSpinKet ket_from_pair(const std::pair<Complex, Complex>& amplitudes) {
    try {
        return {amplitudes.first, amplitudes.second};
    } catch (const std::invalid_argument& e) {
        semantic_error(e.what());
    }
}

Ensemble unpolarized_product_expansion(int n_sites) {
    const std::size_t count = std::size_t(1) << n_sites;
    const double weight = 1.0 / static_cast<double>(count);
    std::vector<Ensemble::Member> members;
    members.reserve(count);
    for (std::size_t mask = 0; mask < count; ++mask) {
        std::vector<SingleSpinKet> kets;
        kets.reserve(n_sites);
        for (int site = 0; site < n_sites; ++site) {
            const bool down = (mask >> (n_sites - 1 - site)) & 1u;
            kets.push_back(axis_eigenket(Axis::Z, down ? -1 : 1));
        }
        members.push_back({weight, ProductState(std::move(kets))});
    }
    return Ensemble(std::move(members));
}

Realization realize(const ScenarioSpec& spec) {
    Realization real;
    switch (spec.state_kind) {
        case StateKind::PsiDelta: {
            const std::vector<int> signs =
                spec.pattern ? *spec.pattern : first_balanced_pattern(spec.n_sites);
            real.product = pattern_state(spec.state_axis, SignPattern(signs));
            real.summary = "pure product state of " + std::string(1, axis_name(spec.state_axis)) +
                           "-axis eigenkets, pattern " + pattern_text(signs);
            break;
        }
        case StateKind::BalancedMixture: {
            real.ensemble = balanced_mixture(spec.state_axis, spec.n_sites);
            real.mixture = true;
            real.summary = "uniform mixture of all " +
                           std::to_string(real.ensemble->members.size()) +
                           " balanced orderings along " +
                           std::string(1, axis_name(spec.state_axis));
            break;
        }
        case StateKind::MaximallyMixed: {
            real.rho = maximally_mixed(spec.n_sites);
            real.ensemble = unpolarized_product_expansion(spec.n_sites);
            real.mixture = true;
            real.summary = "maximally mixed state I/2^" + std::to_string(spec.n_sites);
            break;
        }
        case StateKind::CustomSingleSpin: {
            real.product = ProductState({ket_from_pair(*spec.amplitudes)});
            real.summary = "single spin in a custom pure ket";
            break;
        }
        case StateKind::CustomEnsemble: {
            std::vector<Ensemble::Member> members;
            for (const ScenarioSpec::MemberSpec& member : spec.members) {
                std::vector<SingleSpinKet> kets;
                for (const auto& amplitudes : member.kets) {
                    kets.push_back(ket_from_pair(amplitudes));
                }
                members.push_back({member.weight, ProductState(std::move(kets))});
            }
            real.ensemble = Ensemble(std::move(members));
            real.mixture = true;
            real.summary = "ensemble of " + std::to_string(real.ensemble->members.size()) +
                           " product states";
            break;
        }
        case StateKind::Comparison:
            throw std::logic_error("comparison scenarios are not realized directly");
    }

    if (real.product) {
        try {
            real.pure = real.product->to_pure();
        } catch (const std::length_error& e) {
            real.pure_skip = e.what();
        }
    }
    if (!real.rho) {
        try {
            if (real.pure) {
                real.rho = density_from_ensemble(
                    Ensemble({Ensemble::Member{1.0, *real.pure}}));
            } else if (real.ensemble) {
                real.rho = density_from_ensemble(*real.ensemble);
            } else {
                real.rho_skip = real.pure_skip;
            }
        } catch (const std::length_error& e) {
            real.rho_skip = e.what();
        }
    }
    return real;
}

// ----- evaluation --------------------------------------------------------------

RouteResult evaluate_cell(const Realization& real, const ScenarioSpec& spec,
                          const ObservableSpec& obs, Route route) {
    RouteResult cell;
    cell.observable = obs.label;
    cell.route = route;

    const auto skip = [&cell](const std::string& reason) {
        cell.evaluated = false;
        cell.skip_reason = reason.empty() ? "not representable for this state" : reason;
        cell.status = "skip";
    };

    const std::optional<CollectiveObservable> axis_obs =
        obs.axis ? std::optional<CollectiveObservable>(collective(*obs.axis, spec.n_sites))
                 : std::nullopt;

    try {
        switch (route) {
            case Route::Dense: {
                if (real.pure) {
                    if (axis_obs) {
                        cell.mean = mean_pure_dense(*real.pure, *axis_obs);
                        cell.variance = variance_pure_dense(*real.pure, *axis_obs);
                    } else {
                        cell.mean = mean_pure_dense(*real.pure, *obs.dense);
                        cell.variance = variance_pure_dense(*real.pure, *obs.dense);
                    }
                } else if (real.ensemble) {
                    if (axis_obs) {
                        cell.mean = mean_ensemble(*real.ensemble, *axis_obs);
                        cell.variance = variance_ensemble(*real.ensemble, *axis_obs);
                    } else {
                        cell.mean = mean_ensemble(*real.ensemble, *obs.dense);
                        cell.variance = variance_ensemble(*real.ensemble, *obs.dense);
                    }
                } else {
                    skip(real.pure_skip);
                    return cell;
                }
                break;
            }
            case Route::Trace: {
                if (!real.rho) {
                    skip(real.rho_skip);
                    return cell;
                }
                if (axis_obs) {
                    cell.mean = mean_trace(*real.rho, *axis_obs);
                    cell.variance = variance_trace(*real.rho, *axis_obs);
                } else {
                    cell.mean = mean_trace(*real.rho, *obs.dense);
                    cell.variance = variance_trace(*real.rho, *obs.dense);
                }
                break;
            }
            case Route::ProductFast: {
                if (!axis_obs) {
                    skip("the product-fast route needs a collective axis observable");
                    return cell;
                }
                MomentReport report{0.0, 0.0, Method::ProductFast};
                if (real.product) {
                    report = moments_product_fast(*real.product, *obs.axis);
                } else if (real.ensemble) {
                    report = moments_product_fast(*real.ensemble, *obs.axis);
                } else {
                    skip("");
                    return cell;
                }
                cell.mean = report.mean;
                cell.variance = report.variance;
                break;
            }
            case Route::MonteCarlo: {
                if (!axis_obs) {
                    skip("Monte Carlo sampling needs a collective axis observable");
                    return cell;
                }
                std::vector<ShotRecord> records;
                if (real.product) {
                    records = sample_shots(*real.product, *obs.axis, spec.shots, spec.seed);
                } else if (real.ensemble) {
                    records = sample_shots(*real.ensemble, *obs.axis, spec.shots, spec.seed);
                } else {
                    skip("");
                    return cell;
                }
                const SampleStats stats = empirical_stats(records);
                cell.mean = stats.empirical_mean;
                cell.variance = stats.empirical_variance;
                cell.stderr_mean = stats.stderr_mean;
                cell.shots = stats.shots;
                break;
            }
        }
    } catch (const std::length_error& e) {
        skip(e.what());
        return cell;
    }
    cell.evaluated = true;
    cell.status = "pass";  // refined by the expectation checks
    return cell;
}

struct FailureJson {
    static json make(const std::string& check, const std::string& observable,
                     const std::string& route, const std::string& field, double actual,
                     double expected, double bound) {
        json failure;
        failure["check"] = check;
        failure["observable"] = observable;
        failure["route"] = route;
        failure["field"] = field;
        failure["actual"] = actual;
        failure["expected"] = expected;
        failure["bound"] = bound;
        return failure;
    }
};

// Statistical bound for comparing a sampled variance against an exact one:
// five times the large-shot standard error of a variance estimator, scaled
// by the exact variance.
double mc_variance_bound(double reference_variance, std::int64_t shots) {
    if (shots < 2) {
        return 0.0;
    }
    return 5.0 * std::sqrt(2.0 / static_cast<double>(shots - 1)) * reference_variance;
}

}  // namespace

std::string route_name(Route route) {
    switch (route) {
        case Route::Dense: return "dense";
        case Route::Trace: return "trace";
        case Route::ProductFast: return "product-fast";
        case Route::MonteCarlo: return "monte-carlo";
    }
    throw std::invalid_argument("invalid route");
}

Route route_from_name(const std::string& name) {
    if (name == "dense") return Route::Dense;
    if (name == "trace") return Route::Trace;
    if (name == "product-fast") return Route::ProductFast;
    if (name == "monte-carlo") return Route::MonteCarlo;
    throw std::invalid_argument("unknown route \"" + name + "\"");
}

std::string state_kind_name(StateKind kind) {
    switch (kind) {
        case StateKind::PsiDelta: return "psi-delta";
        case StateKind::BalancedMixture: return "balanced-mixture";
        case StateKind::MaximallyMixed: return "maximally-mixed";
        case StateKind::CustomSingleSpin: return "custom-single-spin";
        case StateKind::CustomEnsemble: return "custom-ensemble";
        case StateKind::Comparison: return "comparison";
    }
    throw std::invalid_argument("invalid state kind");
}

ReportFormat report_format_from_name(const std::string& name) {
    if (name == "text") return ReportFormat::Text;
    if (name == "csv") return ReportFormat::Csv;
    if (name == "structured") return ReportFormat::Structured;
    throw std::invalid_argument("unknown report format \"" + name + "\"");
}

ScenarioSpec parse_scenario(const std::string& text) {
    json document;
    try {
        document = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ScenarioError(false, std::string("scenario syntax error: ") + e.what());
    }
    return parse_document(document, true);
}

ScenarioReport run_scenario(const ScenarioSpec& spec) {
    ScenarioReport report;
    report.scenario = spec.name;
    report.seed = spec.seed;
    report.rng_id = kRngId;
    report.version = kToolVersion;
    report.schema_version = kScenarioSchemaVersion;
    report.annotations = spec.annotations;

    if (spec.is_comparison()) {
        report.state_summary = "comparison";
        report.comparison_note = spec.comparison_note;
        for (const ScenarioSpec& child : spec.children) {
            report.children.push_back(run_scenario(child));
        }
        for (const ScenarioReport& child : report.children) {
            report.passed = report.passed && child.passed;
            report.strict_passed = report.strict_passed && child.strict_passed;
        }
        return report;
    }

    const Realization real = realize(spec);
    report.state_summary = real.summary;
    report.n_sites = spec.n_sites;

    for (const ObservableSpec& obs : spec.observables) {
        for (Route route : spec.routes) {
            report.results.push_back(evaluate_cell(real, spec, obs, route));
        }
    }

    // Cross-route agreement: all exact routes pairwise, then Monte Carlo
    // against the first evaluated exact route.
    for (const ObservableSpec& obs : spec.observables) {
        std::vector<const RouteResult*> exact;
        const RouteResult* monte_carlo = nullptr;
        for (const RouteResult& cell : report.results) {
            if (cell.observable != obs.label || !cell.evaluated) {
                continue;
            }
            if (cell.route == Route::MonteCarlo) {
                monte_carlo = &cell;
            } else {
                exact.push_back(&cell);
            }
        }
        if (exact.size() >= 2) {
            AgreementCheck check;
            check.observable = obs.label;
            check.kind = "exact";
            check.mean_bound = kRouteAgreementTol;
            check.variance_bound = kRouteAgreementTol;
            for (std::size_t i = 0; i < exact.size(); ++i) {
                for (std::size_t j = i + 1; j < exact.size(); ++j) {
                    check.mean_delta = std::max(check.mean_delta,
                                                std::abs(exact[i]->mean - exact[j]->mean));
                    check.variance_delta =
                        std::max(check.variance_delta,
                                 std::abs(exact[i]->variance - exact[j]->variance));
                }
            }
            check.pass = check.mean_delta <= check.mean_bound &&
                         check.variance_delta <= check.variance_bound;
            report.agreements.push_back(check);
        }
        if (monte_carlo != nullptr && !exact.empty()) {
            AgreementCheck check;
            check.observable = obs.label;
            check.kind = "monte-carlo";
            check.mean_delta = std::abs(monte_carlo->mean - exact.front()->mean);
            check.mean_bound = 5.0 * monte_carlo->stderr_mean.value_or(0.0);
            check.variance_delta = std::abs(monte_carlo->variance - exact.front()->variance);
            check.variance_bound =
                mc_variance_bound(exact.front()->variance, monte_carlo->shots.value_or(0));
            check.pass = check.mean_delta <= check.mean_bound &&
                         check.variance_delta <= check.variance_bound;
            report.agreements.push_back(check);
        }
    }

    // Expectations refine per-cell statuses.
    json failures = json::array();
    for (const Expectation& expectation : spec.expected) {
        for (RouteResult& cell : report.results) {
            if (cell.observable != expectation.observable || !cell.evaluated) {
                continue;
            }
            const bool statistical = cell.route == Route::MonteCarlo;
            if (expectation.mean) {
                const double bound =
                    statistical
                        ? std::max(expectation.tolerance,
                                   5.0 * cell.stderr_mean.value_or(0.0))
                        : expectation.tolerance;
                if (std::abs(cell.mean - *expectation.mean) > bound) {
                    cell.status = "fail";
                    failures.push_back(FailureJson::make("expectation", cell.observable,
                                                         route_name(cell.route), "mean",
                                                         cell.mean, *expectation.mean, bound));
                }
            }
            if (expectation.variance) {
                const double bound =
                    statistical ? std::max(expectation.tolerance,
                                           mc_variance_bound(*expectation.variance,
                                                             cell.shots.value_or(0)))
                                : expectation.tolerance;
                if (std::abs(cell.variance - *expectation.variance) > bound) {
                    cell.status = "fail";
                    failures.push_back(FailureJson::make("expectation", cell.observable,
                                                         route_name(cell.route), "variance",
                                                         cell.variance, *expectation.variance,
                                                         bound));
                }
            }
        }
    }

    for (const AgreementCheck& check : report.agreements) {
        if (check.pass) {
            continue;
        }
        const std::string kind =
            check.kind == "exact" ? "route-agreement" : "monte-carlo-agreement";
        if (check.mean_delta > check.mean_bound) {
            failures.push_back(FailureJson::make(kind, check.observable, check.kind, "mean",
                                                 check.mean_delta, 0.0, check.mean_bound));
        }
        if (check.variance_delta > check.variance_bound) {
            failures.push_back(FailureJson::make(kind, check.observable, check.kind,
                                                 "variance", check.variance_delta, 0.0,
                                                 check.variance_bound));
        }
    }
    for (const json& failure : failures) {
        report.failures.push_back(failure.dump());
    }

    bool expectations_ok = true;
    for (const RouteResult& cell : report.results) {
        expectations_ok = expectations_ok && cell.status != "fail";
    }
    bool exact_agreement_ok = true;
    bool mc_agreement_ok = true;
    for (const AgreementCheck& check : report.agreements) {
        if (check.kind == "exact") {
            exact_agreement_ok = exact_agreement_ok && check.pass;
        } else {
            mc_agreement_ok = mc_agreement_ok && check.pass;
        }
    }
    report.passed = expectations_ok && exact_agreement_ok;
    report.strict_passed = report.passed && mc_agreement_ok;

    // Diagnostics that the paper-facing scenarios ask for.
    if (real.mixture && real.ensemble) {
        for (const ObservableSpec& obs : spec.observables) {
            if (!obs.axis) {
                continue;
            }
            try {
                const double wmv = within_member_variance(
                    *real.ensemble, collective(*obs.axis, spec.n_sites));
                report.annotations.push_back(
                    "within-member variance (diagnostic, non-canonical) for " + obs.label +
                    ": " + fmt15(wmv));
            } catch (const std::length_error&) {
                // members beyond the dense cap: diagnostic silently unavailable
            }
        }
    }
    if (spec.annotate_diagonal_shortcut && real.pure) {
        for (const ObservableSpec& obs : spec.observables) {
            if (!obs.axis) {
                continue;
            }
            const CollectiveObservable collective_obs = collective(*obs.axis, spec.n_sites);
            const double shortcut = diagonal_probability_mean(*real.pure, collective_obs);
            const double exact = mean_pure_dense(*real.pure, collective_obs);
            report.annotations.push_back(
                "diagonal z-basis probability shortcut for " + obs.label + ": " +
                fmt15(shortcut) + " vs exact mean " + fmt15(exact) +
                " (the shortcut is valid only for observables diagonal in the z basis)");
        }
    }
    return report;
}

// ----- serialization ------------------------------------------------------------

namespace {

json report_to_json(const ScenarioReport& report) {
    json out;
    out["scenario"] = report.scenario;
    out["state"] = report.state_summary;
    out["n_sites"] = report.n_sites;
    out["provenance"] = {{"seed", report.seed},
                         {"rng", report.rng_id},
                         {"version", report.version},
                         {"schema", report.schema_version}};
    json results = json::array();
    for (const RouteResult& cell : report.results) {
        json row;
        row["observable"] = cell.observable;
        row["route"] = route_name(cell.route);
        row["evaluated"] = cell.evaluated;
        row["status"] = cell.status;
        if (cell.evaluated) {
            row["mean"] = cell.mean;
            row["variance"] = cell.variance;
            if (cell.stderr_mean) {
                row["stderr"] = *cell.stderr_mean;
            }
            if (cell.shots) {
                row["shots"] = *cell.shots;
            }
        } else {
            row["skip_reason"] = cell.skip_reason;
        }
        results.push_back(std::move(row));
    }
    out["results"] = std::move(results);
    json agreements = json::array();
    for (const AgreementCheck& check : report.agreements) {
        agreements.push_back({{"observable", check.observable},
                              {"kind", check.kind},
                              {"mean_delta", check.mean_delta},
                              {"mean_bound", check.mean_bound},
                              {"variance_delta", check.variance_delta},
                              {"variance_bound", check.variance_bound},
                              {"pass", check.pass}});
    }
    out["agreements"] = std::move(agreements);
    out["annotations"] = report.annotations;
    json failures = json::array();
    for (const std::string& failure : report.failures) {
        failures.push_back(json::parse(failure));
    }
    out["failures"] = std::move(failures);
    out["passed"] = report.passed;
    out["strict_passed"] = report.strict_passed;
    if (!report.children.empty()) {
        out["comparison_note"] = report.comparison_note;
        json children = json::array();
        for (const ScenarioReport& child : report.children) {
            children.push_back(report_to_json(child));
        }
        out["children"] = std::move(children);
    }
    return out;
}

ScenarioReport report_from_json(const json& in) {
    ScenarioReport report;
    report.scenario = in.at("scenario").get<std::string>();
    report.state_summary = in.at("state").get<std::string>();
    report.n_sites = in.at("n_sites").get<int>();
    const json& provenance = in.at("provenance");
    report.seed = provenance.at("seed").get<std::uint64_t>();
    report.rng_id = provenance.at("rng").get<std::string>();
    report.version = provenance.at("version").get<std::string>();
    report.schema_version = provenance.at("schema").get<int>();
    for (const json& row : in.at("results")) {
        RouteResult cell;
        cell.observable = row.at("observable").get<std::string>();
        cell.route = route_from_name(row.at("route").get<std::string>());
        cell.evaluated = row.at("evaluated").get<bool>();
        cell.status = row.at("status").get<std::string>();
        if (cell.evaluated) {
            cell.mean = row.at("mean").get<double>();
            cell.variance = row.at("variance").get<double>();
            if (row.contains("stderr")) {
                cell.stderr_mean = row.at("stderr").get<double>();
            }
            if (row.contains("shots")) {
                cell.shots = row.at("shots").get<std::int64_t>();
            }
        } else {
            cell.skip_reason = row.at("skip_reason").get<std::string>();
        }
        report.results.push_back(std::move(cell));
    }
    for (const json& entry : in.at("agreements")) {
        AgreementCheck check;
        check.observable = entry.at("observable").get<std::string>();
        check.kind = entry.at("kind").get<std::string>();
        check.mean_delta = entry.at("mean_delta").get<double>();
        check.mean_bound = entry.at("mean_bound").get<double>();
        check.variance_delta = entry.at("variance_delta").get<double>();
        check.variance_bound = entry.at("variance_bound").get<double>();
        check.pass = entry.at("pass").get<bool>();
        report.agreements.push_back(std::move(check));
    }
    report.annotations = in.at("annotations").get<std::vector<std::string>>();
    for (const json& failure : in.at("failures")) {
        report.failures.push_back(failure.dump());
    }
    report.passed = in.at("passed").get<bool>();
    report.strict_passed = in.at("strict_passed").get<bool>();
    if (in.contains("children")) {
        report.comparison_note = in.at("comparison_note").get<std::string>();
        for (const json& child : in.at("children")) {
            report.children.push_back(report_from_json(child));
        }
    }
    return report;
}

void emit_text(const ScenarioReport& report, std::ostringstream& out, int depth) {
    const std::string indent(static_cast<std::size_t>(depth) * 2, ' ');
    out << indent << "scenario: " << report.scenario;
    if (report.children.empty()) {
        out << " (" << report.state_summary << ", n_sites=" << report.n_sites << ")";
    }
    out << "\n";
    out << indent << "provenance: seed=" << report.seed << " rng=" << report.rng_id
        << " version=" << report.version << " schema=" << report.schema_version << "\n";

    if (!report.children.empty()) {
        out << indent << "note: " << report.comparison_note << "\n";
        for (std::size_t i = 0; i < report.children.size(); ++i) {
            out << indent << (i == 0 ? "--- left ---" : "--- right ---") << "\n";
            emit_text(report.children[i], out, depth + 1);
        }
        out << indent << "result: " << (report.passed ? "PASS" : "FAIL") << "\n";
        return;
    }

    char line[200];
    std::snprintf(line, sizeof line, "%-12s %-13s %-22s %-22s %-14s %s", "observable",
                  "route", "mean", "variance", "stderr", "status");
    out << indent << line << "\n";
    for (const RouteResult& cell : report.results) {
        if (cell.evaluated) {
            std::snprintf(line, sizeof line, "%-12s %-13s %-22s %-22s %-14s %s",
                          cell.observable.c_str(), route_name(cell.route).c_str(),
                          fmt15(cell.mean).c_str(), fmt15(cell.variance).c_str(),
                          cell.stderr_mean ? fmt15(*cell.stderr_mean).c_str() : "-",
                          cell.status.c_str());
            out << indent << line << "\n";
        } else {
            std::snprintf(line, sizeof line, "%-12s %-13s skipped: %s",
                          cell.observable.c_str(), route_name(cell.route).c_str(),
                          cell.skip_reason.c_str());
            out << indent << line << "\n";
        }
    }
    for (const AgreementCheck& check : report.agreements) {
        out << indent << "agreement [" << check.observable << ", " << check.kind
            << "]: |dmean| = " << fmt15(check.mean_delta) << " (bound "
            << fmt15(check.mean_bound) << "), |dvar| = " << fmt15(check.variance_delta)
            << " (bound " << fmt15(check.variance_bound) << "): "
            << (check.pass ? "pass" : "FAIL") << "\n";
    }
    for (const std::string& note : report.annotations) {
        out << indent << "note: " << note << "\n";
    }
    for (const std::string& failure : report.failures) {
        out << indent << "failure: " << failure << "\n";
    }
    out << indent << "result: " << (report.passed ? "PASS" : "FAIL") << "\n";
}

void emit_csv_rows(const ScenarioReport& report, std::ostringstream& out) {
    for (const ScenarioReport& child : report.children) {
        emit_csv_rows(child, out);
    }
    for (const RouteResult& cell : report.results) {
        out << report.scenario << "," << cell.observable << "," << route_name(cell.route)
            << ",";
        if (cell.evaluated) {
            out << fmt15(cell.mean) << "," << fmt15(cell.variance) << ",";
            if (cell.stderr_mean) {
                out << fmt15(*cell.stderr_mean);
            }
        } else {
            out << ",,";
        }
        out << "," << cell.status << "\n";
    }
}

}  // namespace

std::string emit_report(const ScenarioReport& report, ReportFormat format) {
    std::ostringstream out;
    switch (format) {
        case ReportFormat::Text:
            emit_text(report, out, 0);
            break;
        case ReportFormat::Csv:
            out << "scenario,observable,route,mean,variance,stderr,pass\n";
            emit_csv_rows(report, out);
            break;
        case ReportFormat::Structured:
            out << report_to_json(report).dump(2) << "\n";
            break;
    }
    return out.str();
}

ScenarioReport report_from_structured(const std::string& text) {
    json document;
    try {
        document = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ScenarioError(false, std::string("report syntax error: ") + e.what());
    }
    try {
        return report_from_json(document);
    } catch (const json::exception& e) {
        throw ScenarioError(true, std::string("malformed report document: ") + e.what());
    }
}

// ----- builtins -----------------------------------------------------------------

namespace {

struct Builtin {
    const char* name;
    const char* text;
    const char* summary;
};

constexpr Builtin kBuiltins[] = {
    {"ensemble-A-pure", builtins::kEnsembleAPure,
     "N spins in one balanced product of +-x eigenkets; S_x and S_z moments"},
    {"ensemble-B-pure", builtins::kEnsembleBPure,
     "N spins in one balanced product of +-z eigenkets; roles of x and z exchanged"},
    {"balanced-mixture-x", builtins::kBalancedMixtureX,
     "uniform mixture of all balanced +-x orderings; matches ensemble-A-pure moments"},
    {"balanced-mixture-z", builtins::kBalancedMixtureZ,
     "uniform mixture of all balanced +-z orderings"},
    {"maximally-mixed", builtins::kMaximallyMixed,
     "totally unpolarized state I/2^N; variance N/4 along every axis"},
    {"fh-single-spin-mixed", builtins::kFhSingleSpinMixed,
     "one spin in the mixed state {1/2 |+x>, 1/2 |-x>}"},
    {"v-state", builtins::kVState,
     "single spin in (|+> + i sqrt(3)|->)/2; interference terms drive <s_y>"},
    {"fh-comparison", builtins::kFhComparison,
     "side-by-side: N-spin pure product state vs single-spin mixed state"},
};

}  // namespace

std::vector<std::string> builtin_names() {
    std::vector<std::string> names;
    for (const Builtin& builtin : kBuiltins) {
        names.emplace_back(builtin.name);
    }
    return names;
}

const std::string& builtin_text(const std::string& name) {
    static const std::vector<std::string> texts = [] {
        std::vector<std::string> out;
        for (const Builtin& builtin : kBuiltins) {
            out.emplace_back(builtin.text);
        }
        return out;
    }();
    for (std::size_t i = 0; i < std::size(kBuiltins); ++i) {
        if (name == kBuiltins[i].name) {
            return texts[i];
        }
    }
    throw std::invalid_argument("unknown builtin scenario \"" + name + "\"");
}

std::string builtin_summary(const std::string& name) {
    for (const Builtin& builtin : kBuiltins) {
        if (name == builtin.name) {
            return builtin.summary;
        }
    }
    throw std::invalid_argument("unknown builtin scenario \"" + name + "\"");
}

}  // namespace spinmix
