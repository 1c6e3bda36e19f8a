/**
 * @file output.hpp
 * @brief Certificate check bundle and run output files.
 *
 * Files written per run:
 *   diagnostics.csv      one row per (record, species)
 *   fields_t<time>.csv   one per snapshot time
 *   summary.json         status, final norms, envelope verdicts, checks
 *   manifest.json        resolved config; reloadable as a scenario
 */
#pragma once

#include "conditions.hpp"
#include "diagnostics.hpp"
#include "scenario.hpp"
#include "solver.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace bsrd {

struct ScenarioChecks {
    CheckReport quasi_positivity;
    std::optional<CheckReport> mass_control;
    std::optional<CheckReport> intermediate_sum;
    PolynomialBound polynomial_bound;
    std::optional<GrowthReport> growth;
    std::vector<std::string> warnings;

    bool all_passed() const
    {
        bool ok = quasi_positivity.passed && polynomial_bound.report.passed;
        if (mass_control) ok = ok && mass_control->passed;
        if (intermediate_sum) ok = ok && intermediate_sum->passed;
        if (growth) ok = ok && growth->passed();
        return ok;
    }
};

inline ScenarioChecks run_checks(const ScenarioConfig& c)
{
    auto parsed = parse_network(c.network_source());
    const auto& net = parsed.network;
    const SamplePlan plan{c.checks.sample_box, c.checks.sample_count};
    ScenarioChecks out;
    out.warnings = std::move(parsed.warnings);
    out.quasi_positivity = check_quasi_positivity(net, plan);
    if (c.mass_control) out.mass_control = check_mass_control(net, *c.mass_control, plan);
    if (c.intermediate_sum) {
        out.intermediate_sum = check_intermediate_sum(net, *c.intermediate_sum, plan);
        out.growth = check_growth_thresholds(*c.intermediate_sum, c.checks.dimension);
    }
    out.polynomial_bound = check_polynomial_bound(net, plan);
    return out;
}

inline nlohmann::json to_json(const ScenarioChecks& k, const ScenarioConfig& c)
{
    nlohmann::json reports = nlohmann::json::array();
    reports.push_back(to_json(k.quasi_positivity));
    if (k.mass_control) reports.push_back(to_json(*k.mass_control));
    if (k.intermediate_sum) reports.push_back(to_json(*k.intermediate_sum));
    auto pb = to_json(k.polynomial_bound.report);
    pb["r"] = k.polynomial_bound.r;
    pb["K2"] = k.polynomial_bound.K2;
    reports.push_back(pb);
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["scenario"] = c.name;
    j["passed"] = k.all_passed();
    j["expect_fail"] = c.checks.expect_fail;
    j["reports"] = reports;
    j["growth_thresholds"] = k.growth ? to_json(*k.growth) : nlohmann::json(nullptr);
    j["warnings"] = k.warnings;
    return j;
}

inline constexpr const char* kDiagnosticsHeader =
    "t,species,kind,L1,L2,Lp,Linf,total_mass,envelope_residual,W_sup,W_trace_sup,Z_sup,window_sup,clip_correction";

/// CSV body for the diagnostics records, header included.
inline std::string diagnostics_csv(const std::vector<DiagnosticsRecord>& records)
{
    std::string out = kDiagnosticsHeader;
    out += '\n';
    for (const auto& r : records) {
        for (const auto& s : r.species) {
            const double cols[] = {s.L1, s.L2, s.Lp, s.Linf, r.total_mass, r.mass_envelope_residual,
                                   s.W_sup, s.W_trace_sup, s.Z_sup, r.window_sup, r.clip_correction};
            out += format_double(r.t);
            out += ',';
            out += s.name;
            out += ',';
            out += to_string(s.kind);
            for (double x : cols) {
                out += ',';
                out += format_double(x);
            }
            out += '\n';
        }
    }
    return out;
}

/// Snapshot CSV; surface rows carry index_r = -1.
inline std::string fields_csv(const PolarMesh& mesh, const SpeciesSet& species, const SimState& s)
{
    std::string out = "species,kind,index_r,index_theta,value\n";
    for (std::size_t i = 0; i < s.u.size(); ++i)
        for (int k = 0; k < mesh.nr(); ++k)
            for (int j = 0; j < mesh.ntheta(); ++j)
                out += species.bulk_names[i] + ",bulk," + std::to_string(k) + "," + std::to_string(j) + ","
                    + format_double(s.u[i][mesh.cell_index(k, j)]) + "\n";
    for (std::size_t q = 0; q < s.v.size(); ++q)
        for (int j = 0; j < mesh.ntheta(); ++j)
            out += species.surface_names[q] + ",surface,-1," + std::to_string(j) + "," + format_double(s.v[q][j]) + "\n";
    return out;
}

inline std::string snapshot_filename(double t) { return "fields_t" + format_double(t) + ".csv"; }

/// Relative tolerance of the mass envelope verdict.
inline constexpr double kEnvelopeTolerance = 1e-8;

inline nlohmann::json summary_json(const RunOutcome& outcome, const ScenarioConfig& config, const Problem& problem,
                                   const ScenarioChecks& checks)
{
    using nlohmann::json;
    json j;
    j["schema_version"] = kSchemaVersion;
    j["scenario"] = config.name;
    j["status"] = to_string(outcome.status);
    j["expected_status"] = config.expected_status;
    j["detail"] = outcome.detail;
    j["t_final"] = outcome.final_state.t;
    j["steps"] = outcome.final_state.step_count;
    j["first_exceedance_time"] = outcome.blowup_time ? json(*outcome.blowup_time) : json(nullptr);
    j["initial_mass"] = outcome.initial_mass;

    json norms = json::array();
    if (!outcome.diagnostics.empty()) {
        const auto& last = outcome.diagnostics.back();
        for (const auto& s : last.species)
            norms.push_back({{"species", s.name}, {"kind", to_string(s.kind)}, {"L1", s.L1}, {"L2", s.L2},
                             {"Lp", s.Lp}, {"Linf", s.Linf}});
        j["final_total_mass"] = last.total_mass;
        j["time_integral_sups"] = {{"W_sup", last.W_sup}, {"W_trace_sup", last.W_trace_sup}, {"Z_sup", last.Z_sup}};
        j["clip_correction"] = last.clip_correction;
    }
    j["final_norms"] = norms;

    double max_residual = -kInfinity;
    double ledger_gap = 0.0;
    for (const auto& r : outcome.diagnostics) {
        max_residual = std::max(max_residual, r.mass_envelope_residual);
        ledger_gap = std::max(ledger_gap, std::fabs(r.total_mass - r.ledger_mass));
    }
    const double tol = kEnvelopeTolerance * (1.0 + std::fabs(outcome.initial_mass));
    j["mass_envelope"] = {{"L", problem.cert.L},
                          {"max_residual", max_residual},
                          {"tolerance", tol},
                          {"passed", max_residual <= tol},
                          {"ledger_gap", ledger_gap}};

    const auto windows = window_sup_report(outcome.diagnostics, outcome.final_state.t);
    json w = json::array();
    for (const auto& x : windows.windows) w.push_back({{"tau", x.tau}, {"sup", x.sup}});
    j["window_sups"] = {{"windows", w}, {"uniform_sup", windows.uniform_sup}, {"notes", windows.notes}};

    const auto compat = check_compatibility(problem.mesh, problem.network, problem.u0, problem.v0);
    j["compatibility"] = {{"max_abs", compat.max_abs}, {"l2", compat.l2}};
    j["checks"] = to_json(checks, config);
    return j;
}

inline nlohmann::json manifest_json(const ScenarioConfig& config)
{
    return {{"schema_version", kSchemaVersion}, {"artifact_version", kArtifactVersion}, {"config", to_json(config)}};
}

namespace detail {

inline void write_file(const std::filesystem::path& p, const std::string& content)
{
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + p.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write to '" + p.string() + "' failed");
}

} // namespace detail

/// Writes the run's file set into `dir`; returns the written paths.
inline std::vector<std::filesystem::path> write_outputs(const RunOutcome& outcome, const ScenarioConfig& config,
                                                        const Problem& problem, const ScenarioChecks& checks,
                                                        const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create '" + dir.string() + "': " + ec.message());

    std::vector<std::filesystem::path> written;
    auto put = [&](const std::string& name, const std::string& content) {
        const auto p = dir / name;
        detail::write_file(p, content);
        written.push_back(p);
    };
    put("diagnostics.csv", diagnostics_csv(outcome.diagnostics));
    for (const auto& snap : outcome.snapshots)
        put(snapshot_filename(snap.requested_t), fields_csv(problem.mesh, problem.network.species, snap.state));
    put("summary.json", summary_json(outcome, config, problem, checks).dump(2) + "\n");
    put("manifest.json", manifest_json(config).dump(2) + "\n");
    return written;
}

} // namespace bsrd
