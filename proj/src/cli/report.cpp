#include "sdelong/cli.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <ctime>

namespace sdelong::cli {

namespace {

/// Shortest text that reads back to the same double; "nan"/"inf" as is.
std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return fmt::format("{}", v);
}

std::string row(std::string_view kind, std::string_view model, std::string_view scheme, double p, double h,
                 const MomentEstimate& e, std::string t) {
    return fmt::format("{},{},{},{},{},{},{},{},{},{}\n", kind, model, scheme, num(p), num(h), num(e.value),
                       num(e.std_error), e.n_paths, e.n_divergent, t);
}

nlohmann::json json_num(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

nlohmann::json estimate_json(const MomentEstimate& e) {
    return {{"p", json_num(e.p)},
            {"value", json_num(e.value)},
            {"std_error", json_num(e.std_error)},
            {"n_paths", e.n_paths},
            {"n_divergent", e.n_divergent}};
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

std::string csv_preamble(const ExperimentConfig& config, int threads_used) {
    std::string out = fmt::format("# {} {}\n", kToolName, kToolVersion);
    out += fmt::format("# run: timestamp={}, threads={}\n", utc_timestamp(), threads_used);
    out += fmt::format("# command: {}\n", command_name(config.command));
    for (const auto& [key, value] : config.values) {
        if (key == "threads" || key == "output") continue;
        out += fmt::format("# config: {} = {}\n", key, value);
    }
    out += fmt::format("# seed: {}\n", config.seed);
    return out;
}

std::string csv_rows(const ErrorCurve& curve, std::string_view kind) {
    std::string out;
    for (const auto& pt : curve.points) {
        out += row(kind, curve.problem, scheme_name(curve.scheme), curve.p, pt.h, pt.error, "");
    }
    return out;
}

std::string csv_rows(const MomentTrace& trace, std::string_view kind) {
    std::string out;
    for (const auto& pt : trace.points) {
        out += row(kind, trace.problem, scheme_name(trace.scheme), trace.p, trace.h, pt.estimate, num(pt.t));
    }
    return out;
}

std::string csv_rows(const std::vector<AssumptionReport>& reports, std::string_view model) {
    std::string out;
    for (const auto& r : reports) {
        MomentEstimate e;
        e.p = 0.0;
        e.value = r.max_feasible ? *r.max_feasible : r.worst_margin;
        e.std_error = 0.0;
        e.n_paths = r.n_pairs;
        e.n_divergent = r.pass ? 0 : 1;
        out += row("assumption:" + r.condition, model, "", 0.0, 0.0, e, "");
    }
    return out;
}

std::string report_json(const ExperimentConfig& config, const ConvergenceReport& report) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& pt : report.curve.points) {
        nlohmann::json entry = estimate_json(pt.error);
        entry["h"] = pt.h;
        points.push_back(entry);
    }
    nlohmann::json j = {
        {"tool", kToolName},
        {"version", kToolVersion},
        {"command", command_name(config.command)},
        {"config", config.values},
        {"problem", report.curve.problem},
        {"scheme", scheme_name(report.curve.scheme)},
        {"p", report.curve.p},
        {"T", report.curve.T},
        {"h_ref", report.curve.h_ref},
        {"points", points},
        {"slope", json_num(report.slope)},
        {"intercept", json_num(report.intercept)},
        {"r_squared", json_num(report.r_squared)},
        {"predicted_order", report.predicted_order},
        {"band", report.criteria.band},
        {"min_r_squared", report.criteria.min_r_squared},
        {"excluded_h", report.excluded_h},
        {"notes", report.notes},
        {"pass", report.pass},
    };
    return j.dump(2) + "\n";
}

std::string trace_json(const ExperimentConfig& config, const MomentTrace& trace,
                       const std::map<std::string, double>& summary, bool pass) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& pt : trace.points) {
        nlohmann::json entry = estimate_json(pt.estimate);
        entry["t"] = pt.t;
        points.push_back(entry);
    }
    nlohmann::json readout = nlohmann::json::object();
    for (const auto& [key, value] : summary) readout[key] = json_num(value);
    nlohmann::json j = {
        {"tool", kToolName},
        {"version", kToolVersion},
        {"command", command_name(config.command)},
        {"config", config.values},
        {"problem", trace.problem},
        {"scheme", scheme_name(trace.scheme)},
        {"p", trace.p},
        {"T", trace.T},
        {"h", trace.h},
        {"points", points},
        {"summary", readout},
        {"pass", pass},
    };
    return j.dump(2) + "\n";
}

std::string assumptions_json(const ExperimentConfig& config, const std::string& problem,
                             const std::vector<AssumptionReport>& reports, bool pass) {
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& r : reports) {
        nlohmann::json entry = {{"condition", r.condition},
                                {"n_pairs", r.n_pairs},
                                {"worst_margin", json_num(r.worst_margin)},
                                {"pass", r.pass}};
        if (r.max_feasible) entry["max_feasible"] = json_num(*r.max_feasible);
        if (r.c2) entry["c2"] = json_num(*r.c2);
        if (r.c3) entry["c3"] = json_num(*r.c3);
        checks.push_back(entry);
    }
    nlohmann::json j = {
        {"tool", kToolName},
        {"version", kToolVersion},
        {"command", command_name(config.command)},
        {"config", config.values},
        {"problem", problem},
        {"checks", checks},
        {"pass", pass},
    };
    return j.dump(2) + "\n";
}

}  // namespace sdelong::cli
