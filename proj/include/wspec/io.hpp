#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "wspec/compare.hpp"
#include "wspec/core.hpp"
#include "wspec/curve.hpp"
#include "wspec/ensemble.hpp"
#include "wspec/version.hpp"

namespace wspec {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Number formatting: 17 significant digits round-trip doubles exactly,
// so emitted files diff cleanly and re-read bit-identically.
// ---------------------------------------------------------------------------

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Curve CSV
// ---------------------------------------------------------------------------

inline constexpr const char* kCsvHeader = "lambda,rho,re_chi_w,im_chi_w,iterations,converged";

inline void write_curve_csv(const DensityCurve& curve, std::ostream& os) {
    os << kCsvHeader << "\n";
    for (const auto& e : curve.entries) {
        os << fmt17(e.lambda) << ',' << fmt17(e.rho) << ',' << fmt17(e.chi_w.real())
           << ',' << fmt17(e.chi_w.imag()) << ',' << e.iterations << ','
           << (e.converged ? 1 : 0) << "\n";
    }
    if (!os) throw IoError("failed while writing curve CSV");
}

inline void write_curve_csv(const DensityCurve& curve, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path);
    write_curve_csv(curve, os);
}

inline DensityCurve read_curve_csv(std::istream& is) {
    DensityCurve curve;
    std::string line;
    if (!std::getline(is, line)) throw IoError("empty CSV curve");
    if (line != kCsvHeader)
        throw IoError("unexpected CSV header: " + line);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (fields.size() != 6) throw IoError("malformed CSV row: " + line);
        CurveEntry e;
        e.lambda = std::strtod(fields[0].c_str(), nullptr);
        e.rho = std::strtod(fields[1].c_str(), nullptr);
        e.chi_w = Complex(std::strtod(fields[2].c_str(), nullptr),
                          std::strtod(fields[3].c_str(), nullptr));
        e.iterations = static_cast<std::size_t>(std::strtoull(fields[4].c_str(), nullptr, 10));
        e.converged = fields[5] == "1";
        curve.entries.push_back(e);
    }
    return curve;
}

inline DensityCurve read_curve_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open for reading: " + path);
    return read_curve_csv(is);
}

// ---------------------------------------------------------------------------
// Laws and ensembles as JSON
// ---------------------------------------------------------------------------

inline Json law_to_json(const HyperparameterLaw& law) {
    switch (law.kind()) {
        case LawKind::uniform:
            return Json{{"kind", "uniform"}, {"min", law.min()}, {"max", law.max()}};
        case LawKind::constant:
            return Json{{"kind", "constant"}, {"value", law.value()}};
        case LawKind::discrete:
            return Json{{"kind", "discrete"}, {"values", law.values()}};
    }
    throw DomainError("unreachable law kind");
}

namespace detail {

inline void reject_unknown_keys(const Json& obj, const std::vector<std::string>& allowed,
                                const std::string& path) {
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const auto& key : allowed)
            if (item.key() == key) known = true;
        if (!known) throw ConfigError(path + "." + item.key() + ": unknown key");
    }
}

inline double require_number(const Json& obj, const std::string& key,
                             const std::string& path) {
    if (!obj.contains(key)) throw ConfigError(path + "." + key + ": missing");
    if (!obj[key].is_number()) throw ConfigError(path + "." + key + ": expected a number");
    return obj[key].get<double>();
}

}  // namespace detail

inline HyperparameterLaw law_from_json(const Json& obj, const std::string& path) {
    if (!obj.is_object()) throw ConfigError(path + ": expected an object");
    if (!obj.contains("kind")) throw ConfigError(path + ".kind: missing");
    const std::string kind = obj["kind"].get<std::string>();
    try {
        if (kind == "uniform") {
            detail::reject_unknown_keys(obj, {"kind", "min", "max"}, path);
            return HyperparameterLaw::Uniform(detail::require_number(obj, "min", path),
                                              detail::require_number(obj, "max", path));
        }
        if (kind == "constant") {
            detail::reject_unknown_keys(obj, {"kind", "value"}, path);
            return HyperparameterLaw::Constant(detail::require_number(obj, "value", path));
        }
        if (kind == "discrete") {
            detail::reject_unknown_keys(obj, {"kind", "values"}, path);
            if (!obj.contains("values") || !obj["values"].is_array())
                throw ConfigError(path + ".values: expected an array");
            return HyperparameterLaw::Discrete(obj["values"].get<std::vector<double>>());
        }
    } catch (const InvalidLaw& err) {
        throw ConfigError(path + ": " + err.what());
    }
    throw ConfigError(path + ".kind: must be uniform, constant or discrete");
}

inline Json ensemble_to_json(const EnsembleSpec& spec) {
    Json out{{"alpha", spec.alpha},
             {"case", static_cast<int>(spec.structure)}};
    switch (spec.structure) {
        case CovarianceCase::row_variance:
            out["law_s"] = law_to_json(spec.law_s);
            break;
        case CovarianceCase::column_variance:
            out["law_t"] = law_to_json(spec.law_t);
            break;
        case CovarianceCase::kronecker:
            out["law_s"] = law_to_json(spec.law_s);
            out["law_t"] = law_to_json(spec.law_t);
            out["rotate_rows"] = spec.rotate_rows;
            out["rotate_cols"] = spec.rotate_cols;
            break;
    }
    return out;
}

inline EnsembleSpec ensemble_from_json(const Json& obj, const std::string& path) {
    if (!obj.is_object()) throw ConfigError(path + ": expected an object");
    detail::reject_unknown_keys(
        obj, {"alpha", "case", "law_s", "law_t", "rotate_rows", "rotate_cols"}, path);
    const double alpha = detail::require_number(obj, "alpha", path);
    if (!(alpha > 0.0)) throw ConfigError(path + ".alpha: must be > 0");
    if (!obj.contains("case")) throw ConfigError(path + ".case: missing (1, 2 or 3)");
    const int structure = obj["case"].get<int>();

    auto law_or_one = [&](const char* key) {
        return obj.contains(key) ? law_from_json(obj[key], path + "." + key)
                                 : HyperparameterLaw::Constant(1.0);
    };
    switch (structure) {
        case 1:
            if (obj.contains("law_t"))
                throw ConfigError(path + ".law_t: not allowed for case 1");
            if (obj.contains("rotate_rows") || obj.contains("rotate_cols"))
                throw ConfigError(path + ": rotations are only allowed for case 3");
            return EnsembleSpec::row_variance(alpha, law_or_one("law_s"));
        case 2:
            if (obj.contains("law_s"))
                throw ConfigError(path + ".law_s: not allowed for case 2");
            if (obj.contains("rotate_rows") || obj.contains("rotate_cols"))
                throw ConfigError(path + ": rotations are only allowed for case 3");
            return EnsembleSpec::column_variance(alpha, law_or_one("law_t"));
        case 3:
            return EnsembleSpec::kronecker(alpha, law_or_one("law_s"), law_or_one("law_t"),
                                           obj.value("rotate_rows", false),
                                           obj.value("rotate_cols", false));
        default:
            throw ConfigError(path + ".case: must be 1, 2 or 3");
    }
}

// ---------------------------------------------------------------------------
// Curve JSON (metadata header + entries)
// ---------------------------------------------------------------------------

inline Json curve_to_json(const DensityCurve& curve,
                          std::uint64_t seed = 0, bool has_seed = false) {
    Json meta{{"method", to_string(curve.method)},
              {"ensemble", ensemble_to_json(curve.ensemble)},
              {"epsilon", curve.epsilon},
              {"version", kVersion}};
    if (has_seed) meta["seed"] = seed;
    Json entries = Json::array();
    for (const auto& e : curve.entries) {
        entries.push_back(Json{{"lambda", e.lambda},
                               {"rho", e.rho},
                               {"re_chi_w", e.chi_w.real()},
                               {"im_chi_w", e.chi_w.imag()},
                               {"iterations", e.iterations},
                               {"converged", e.converged}});
    }
    return Json{{"metadata", meta}, {"entries", entries}};
}

inline void write_curve_json(const DensityCurve& curve, const std::string& path,
                             std::uint64_t seed = 0, bool has_seed = false) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << curve_to_json(curve, seed, has_seed).dump(2) << "\n";
    if (!os) throw IoError("failed while writing curve JSON");
}

inline DensityCurve curve_from_json(const Json& doc) {
    DensityCurve curve;
    if (doc.contains("metadata")) {
        const auto& meta = doc["metadata"];
        if (meta.contains("ensemble"))
            curve.ensemble = ensemble_from_json(meta["ensemble"], "metadata.ensemble");
        if (meta.contains("epsilon")) curve.epsilon = meta["epsilon"].get<double>();
        if (meta.contains("method")) {
            const std::string m = meta["method"].get<std::string>();
            for (MethodTag tag : {MethodTag::replica, MethodTag::bp, MethodTag::exact,
                                  MethodTag::mp, MethodTag::trace_form})
                if (m == to_string(tag)) curve.method = tag;
        }
    }
    for (const auto& ej : doc.at("entries")) {
        CurveEntry e;
        e.lambda = ej.at("lambda").get<double>();
        e.rho = ej.at("rho").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                       : ej.at("rho").get<double>();
        e.chi_w = Complex(ej.at("re_chi_w").get<double>(), ej.at("im_chi_w").get<double>());
        e.iterations = ej.at("iterations").get<std::size_t>();
        e.converged = ej.at("converged").get<bool>();
        curve.entries.push_back(e);
    }
    return curve;
}

inline DensityCurve read_curve_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open for reading: " + path);
    Json doc;
    try {
        is >> doc;
    } catch (const Json::exception& err) {
        throw IoError("bad JSON in " + path + ": " + err.what());
    }
    return curve_from_json(doc);
}

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

enum class Command { replica, bp, exact, mp, trace, moments, compare };

inline const char* to_string(Command c) {
    switch (c) {
        case Command::replica: return "replica";
        case Command::bp: return "bp";
        case Command::exact: return "exact";
        case Command::mp: return "mp";
        case Command::trace: return "trace";
        case Command::moments: return "moments";
        case Command::compare: return "compare";
    }
    return "?";
}

enum class OutputFormat { csv, json };

struct GridConfig {
    double lambda_min = 0.5;
    double lambda_max = 30.0;
    std::size_t n_points = 1000;
    double epsilon = 0.0;  // 0 = resolve per command (1e-3 for bp, 1e-6 otherwise)

    LambdaGrid make() const { return LambdaGrid::linear(lambda_min, lambda_max, n_points, epsilon); }
};

struct SamplingConfig {
    std::size_t n = 500;
    std::size_t n_samples = 1;
    std::uint64_t base_seed = 1;
};

struct OutputConfig {
    std::string path;
    OutputFormat format = OutputFormat::csv;
};

struct RunConfig {
    Command command = Command::replica;
    bool command_set = false;
    EnsembleSpec ensemble;
    GridConfig grid;
    SamplingConfig sampling;
    SolverConfig solver;
    double max_failure_fraction = 0.05;
    std::size_t threads = 1;
    OutputConfig output;
};

/// Strict parse: unknown keys are rejected with their full key path; defaults
/// fill anything omitted. Epsilon left unset resolves to the per-command
/// default (1e-3 for bp, 1e-6 otherwise) in resolve_defaults.
inline RunConfig parse_config(const Json& doc) {
    if (!doc.is_object()) throw ConfigError("config: expected a JSON object");
    detail::reject_unknown_keys(doc,
                                {"command", "ensemble", "grid", "sampling", "solver",
                                 "output", "max_failure_fraction", "threads"},
                                "config");
    RunConfig cfg;
    if (doc.contains("command")) {
        const std::string cmd = doc["command"].get<std::string>();
        bool found = false;
        for (Command c : {Command::replica, Command::bp, Command::exact, Command::mp,
                          Command::trace, Command::moments, Command::compare}) {
            if (cmd == to_string(c)) {
                cfg.command = c;
                cfg.command_set = true;
                found = true;
            }
        }
        if (!found) throw ConfigError("config.command: unknown command " + cmd);
    }
    if (!doc.contains("ensemble")) throw ConfigError("config.ensemble: missing");
    cfg.ensemble = ensemble_from_json(doc["ensemble"], "ensemble");

    if (doc.contains("grid")) {
        const auto& g = doc["grid"];
        detail::reject_unknown_keys(g, {"lambda_min", "lambda_max", "n_points", "epsilon"},
                                    "grid");
        if (g.contains("lambda_min")) cfg.grid.lambda_min = g["lambda_min"].get<double>();
        if (g.contains("lambda_max")) cfg.grid.lambda_max = g["lambda_max"].get<double>();
        if (g.contains("n_points")) cfg.grid.n_points = g["n_points"].get<std::size_t>();
        if (g.contains("epsilon")) {
            cfg.grid.epsilon = g["epsilon"].get<double>();
            if (!(cfg.grid.epsilon > 0.0)) throw ConfigError("grid.epsilon: must be > 0");
        }
        if (!(cfg.grid.lambda_min < cfg.grid.lambda_max))
            throw ConfigError("grid.lambda_min: must be < grid.lambda_max");
        if (cfg.grid.n_points < 2) throw ConfigError("grid.n_points: must be >= 2");
    }
    if (doc.contains("sampling")) {
        const auto& s = doc["sampling"];
        detail::reject_unknown_keys(s, {"n", "n_samples", "base_seed"}, "sampling");
        if (s.contains("n")) cfg.sampling.n = s["n"].get<std::size_t>();
        if (s.contains("n_samples")) cfg.sampling.n_samples = s["n_samples"].get<std::size_t>();
        if (s.contains("base_seed")) cfg.sampling.base_seed = s["base_seed"].get<std::uint64_t>();
        if (cfg.sampling.n < 2) throw ConfigError("sampling.n: must be >= 2");
        if (cfg.sampling.n_samples < 1) throw ConfigError("sampling.n_samples: must be >= 1");
    }
    if (doc.contains("solver")) {
        const auto& s = doc["solver"];
        detail::reject_unknown_keys(
            s, {"damping", "tolerance", "max_iterations", "warm_start"}, "solver");
        if (s.contains("damping")) cfg.solver.damping = s["damping"].get<double>();
        if (s.contains("tolerance")) cfg.solver.tolerance = s["tolerance"].get<double>();
        if (s.contains("max_iterations"))
            cfg.solver.max_iterations = s["max_iterations"].get<std::size_t>();
        if (s.contains("warm_start")) cfg.solver.warm_start = s["warm_start"].get<bool>();
        try {
            require_valid(cfg.solver);
        } catch (const DomainError& err) {
            throw ConfigError(std::string("solver: ") + err.what());
        }
    }
    if (doc.contains("max_failure_fraction")) {
        cfg.max_failure_fraction = doc["max_failure_fraction"].get<double>();
        if (cfg.max_failure_fraction < 0.0 || cfg.max_failure_fraction > 1.0)
            throw ConfigError("max_failure_fraction: must lie in [0, 1]");
    }
    if (doc.contains("threads")) {
        cfg.threads = doc["threads"].get<std::size_t>();
        if (cfg.threads < 1) throw ConfigError("threads: must be >= 1");
    }
    if (doc.contains("output")) {
        const auto& o = doc["output"];
        detail::reject_unknown_keys(o, {"path", "format"}, "output");
        if (o.contains("path")) cfg.output.path = o["path"].get<std::string>();
        if (o.contains("format")) {
            const std::string f = o["format"].get<std::string>();
            if (f == "csv")
                cfg.output.format = OutputFormat::csv;
            else if (f == "json")
                cfg.output.format = OutputFormat::json;
            else
                throw ConfigError("output.format: must be csv or json");
        }
    }
    return cfg;
}

inline RunConfig parse_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    Json doc;
    try {
        is >> doc;
    } catch (const Json::exception& err) {
        throw ConfigError("config is not valid JSON: " + std::string(err.what()));
    }
    return parse_config(doc);
}

/// Fill the per-command epsilon default and validate command-specific needs.
inline void resolve_defaults(RunConfig& cfg) {
    if (cfg.grid.epsilon == 0.0)
        cfg.grid.epsilon = cfg.command == Command::bp ? 1e-3 : 1e-6;
}

/// Effective configuration echoed back as JSON.
inline Json config_to_json(const RunConfig& cfg) {
    return Json{{"command", to_string(cfg.command)},
                {"ensemble", ensemble_to_json(cfg.ensemble)},
                {"grid", Json{{"lambda_min", cfg.grid.lambda_min},
                              {"lambda_max", cfg.grid.lambda_max},
                              {"n_points", cfg.grid.n_points},
                              {"epsilon", cfg.grid.epsilon}}},
                {"sampling", Json{{"n", cfg.sampling.n},
                                  {"n_samples", cfg.sampling.n_samples},
                                  {"base_seed", cfg.sampling.base_seed}}},
                {"solver", Json{{"damping", cfg.solver.damping},
                                {"tolerance", cfg.solver.tolerance},
                                {"max_iterations", cfg.solver.max_iterations},
                                {"warm_start", cfg.solver.warm_start}}},
                {"max_failure_fraction", cfg.max_failure_fraction},
                {"threads", cfg.threads},
                {"output", Json{{"path", cfg.output.path},
                                {"format", cfg.output.format == OutputFormat::csv
                                               ? "csv"
                                               : "json"}}}};
}

// ---------------------------------------------------------------------------
// Compare reports
// ---------------------------------------------------------------------------

inline Json report_to_json(const CompareReport& report,
                           const std::vector<std::string>& labels) {
    Json curves = Json::array();
    for (std::size_t i = 0; i < report.curves.size(); ++i) {
        const auto& c = report.curves[i];
        Json entry{{"method", i < labels.size() ? labels[i] : to_string(c.method)},
                   {"mass", c.mass}};
        if (c.edges_detected) {
            entry["lambda_min_hat"] = c.edges.lambda_min_hat;
            entry["lambda_max_hat"] = c.edges.lambda_max_hat;
        }
        curves.push_back(entry);
    }
    Json pairs = Json::array();
    for (const auto& d : report.pairwise) {
        pairs.push_back(Json{{"first", d.first < labels.size() ? labels[d.first]
                                                               : std::to_string(d.first)},
                             {"second", d.second < labels.size()
                                            ? labels[d.second]
                                            : std::to_string(d.second)},
                             {"sup_norm", d.sup_norm},
                             {"l1", d.l1}});
    }
    return Json{{"curves", curves},
                {"pairwise", pairs},
                {"bulk_window", Json{{"lo", report.bulk_lo}, {"hi", report.bulk_hi}}},
                {"disjoint_supports", report.disjoint_supports}};
}

}  // namespace wspec
