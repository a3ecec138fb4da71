#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "twics/design.hpp"
#include "twics/runner.hpp"
#include "twics/scenario.hpp"

namespace twics {

namespace detail {

// Shortest round-trip representation; locale-independent, '.' decimal point.
inline std::string fmt(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// EstimateResult / calculator JSON (fixed field names)
// ---------------------------------------------------------------------------

inline json to_json(const EstimateResult& r) {
    return json{{"estimand", to_string(r.estimand)},
                {"point", r.point},
                {"se", r.se},
                {"ci_lo", r.ci_lo},
                {"ci_hi", r.ci_hi},
                {"n_offered", r.n_offered},
                {"n_control", r.n_control},
                {"method", r.method},
                {"warnings", r.warnings}};
}

inline json to_json(const SampleSizeReport& r) {
    json inputs = {{"alpha", r.inputs.alpha},
                   {"power_target", r.inputs.power_target},
                   {"planned_acceptance", r.inputs.planned_acceptance}};
    if (r.inputs.kind == OutcomeKind::Continuous) {
        inputs["kind"] = "continuous";
        inputs["effect"] = r.inputs.effect;
        inputs["sd"] = r.inputs.sd;
    } else {
        inputs["kind"] = "binary";
        inputs["p0"] = r.inputs.p0;
        inputs["p1"] = r.inputs.p1;
    }
    return json{{"n_per_arm", r.n_per_arm},
                {"inflation_factor", r.inflation_factor},
                {"inputs", inputs},
                {"warnings", r.warnings}};
}

// ---------------------------------------------------------------------------
// Scenario reports
// ---------------------------------------------------------------------------

inline std::string estimates_csv(const ScenarioResult& res) {
    std::string s = "label,mean_point,truth,bias,emp_se,mean_se,coverage,reject_rate,n_reps\n";
    for (const auto& c : res.cells) {
        s += to_string(c.label);
        s += ',';
        s += detail::fmt(c.mean_point);
        s += ',';
        s += detail::fmt(c.truth);
        s += ',';
        s += detail::fmt(c.bias);
        s += ',';
        s += detail::fmt(c.emp_se);
        s += ',';
        s += detail::fmt(c.mean_se);
        s += ',';
        s += detail::fmt(c.coverage);
        s += ',';
        s += detail::fmt(c.reject_rate);
        s += ',';
        s += std::to_string(c.n_reps);
        s += '\n';
    }
    return s;
}

inline std::string refusal_csv(const ScenarioResult& res) {
    std::string s = "rep,offered,refusals,rate\n";
    for (std::size_t r = 0; r < res.refusal_by_rep.size(); ++r) {
        const auto& rr = res.refusal_by_rep[r];
        s += std::to_string(r);
        s += ',';
        if (rr) {
            s += std::to_string(rr->offered);
            s += ',';
            s += std::to_string(rr->refusals);
            s += ',';
            s += detail::fmt(rr->rate);
        } else {
            s += ",,";
        }
        s += '\n';
    }
    return s;
}

inline std::string sweep_csv(const std::string& parameter, const std::vector<SweepRun>& runs) {
    std::string s =
        "param,value,label,mean_point,truth,bias,emp_se,mean_se,coverage,reject_rate,n_reps\n";
    for (const auto& run : runs) {
        for (const auto& c : run.result.cells) {
            s += parameter;
            s += ',';
            s += detail::fmt(run.value);
            s += ',';
            s += to_string(c.label);
            s += ',';
            s += detail::fmt(c.mean_point);
            s += ',';
            s += detail::fmt(c.truth);
            s += ',';
            s += detail::fmt(c.bias);
            s += ',';
            s += detail::fmt(c.emp_se);
            s += ',';
            s += detail::fmt(c.mean_se);
            s += ',';
            s += detail::fmt(c.coverage);
            s += ',';
            s += detail::fmt(c.reject_rate);
            s += ',';
            s += std::to_string(c.n_reps);
            s += '\n';
        }
    }
    return s;
}

inline json to_json(const ScenarioResult& res) {
    json cells = json::array();
    for (const auto& c : res.cells)
        cells.push_back({{"label", to_string(c.label)},
                         {"mean_point", c.mean_point},
                         {"truth", c.truth},
                         {"bias", c.bias},
                         {"emp_se", c.emp_se},
                         {"mean_se", c.mean_se},
                         {"coverage", c.coverage},
                         {"reject_rate", c.reject_rate},
                         {"n_reps", c.n_reps},
                         {"failures", c.failures}});
    json out{{"replications_configured", res.replications_configured},
             {"replication_failures", res.replication_failures},
             {"estimates", cells},
             {"refusal", {{"mean", res.refusal.mean},
                          {"min", res.refusal.min},
                          {"max", res.refusal.max},
                          {"n_reps", res.refusal.n_reps}}},
             {"recruitment", {{"mean_randomized", res.mean_randomized},
                              {"complete_fraction", res.complete_fraction},
                              {"batch_mean_sizes", res.batch_mean_sizes}}},
             {"truths", {{"ace_received", res.mean_truths.ace_received},
                         {"ace_offered", res.mean_truths.ace_offered},
                         {"cace", res.mean_truths.cace},
                         {"acceptance_rate", res.mean_truths.acceptance_rate}}},
             {"notes", res.notes}};
    return out;
}

inline json result_json(const ScenarioConfig& config, const ScenarioResult& res,
                        const std::vector<SweepRun>& sweep_runs) {
    json out = to_json(res);
    out["config"] = to_json(config);
    if (config.sweep) {
        json sw = json::array();
        for (const auto& run : sweep_runs) {
            json r = to_json(run.result);
            r["value"] = run.value;
            sw.push_back(std::move(r));
        }
        out["sweep"] = {{"parameter", config.sweep->parameter}, {"runs", sw}};
    }
    return out;
}

// ---------------------------------------------------------------------------
// File emission
// ---------------------------------------------------------------------------

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << content;
    if (!content.empty() && content.back() != '\n') out << '\n';
    out.flush();
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

// Writes estimates.csv, refusal.csv, result.json and (with a sweep grid)
// sweep.csv into `directory`. Returns the emitted file names. Rerunning with
// the same inputs reproduces every byte.
inline std::vector<std::string> emit_reports(const ScenarioConfig& config,
                                             const ScenarioResult& res,
                                             const std::vector<SweepRun>& sweep_runs,
                                             const std::string& directory) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(directory, ec);
    if (ec) throw Error("cannot create output directory '" + directory + "': " + ec.message());

    std::vector<std::string> manifest;
    write_file(fs::path(directory) / "estimates.csv", estimates_csv(res));
    manifest.push_back("estimates.csv");
    write_file(fs::path(directory) / "refusal.csv", refusal_csv(res));
    manifest.push_back("refusal.csv");
    if (config.sweep) {
        write_file(fs::path(directory) / "sweep.csv",
                   sweep_csv(config.sweep->parameter, sweep_runs));
        manifest.push_back("sweep.csv");
    }
    write_file(fs::path(directory) / "result.json",
               result_json(config, res, sweep_runs).dump(2) + "\n");
    manifest.push_back("result.json");
    return manifest;
}

}  // namespace twics
