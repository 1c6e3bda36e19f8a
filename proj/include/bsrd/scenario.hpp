/**
 * @file scenario.hpp
 * @brief JSON scenario configuration, the preset registry, and conversion
 * of a scenario into a runnable Problem.
 */
#pragma once

#include "conditions.hpp"
#include "mesh.hpp"
#include "network.hpp"
#include "solver.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bsrd {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kArtifactVersion = "0.1.0";

/// Invalid or unreadable configuration; `path` locates the offending field.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string path, const std::string& msg)
        : std::runtime_error(path.empty() ? msg : path + ": " + msg), path_(std::move(path))
    {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

struct Geometry {
    double radius = 1.0;
    int nr = 16;
    int ntheta = 32;
};

/// Named initial profile: constant | radial_bump | cosine_mode.
struct InitialSpec {
    std::string preset = "constant";
    std::map<std::string, double> params;
};

struct OutputSpec {
    double record_interval = 0.1;
    std::string directory = "out";
    std::vector<double> snapshot_times;
    double lp_exponent = 4.0;
};

struct CheckSpec {
    double sample_box = 10.0;
    std::size_t sample_count = 4096;
    int dimension = 2;
    /// Set for scenarios built to violate their own certificates.
    bool expect_fail = false;
};

struct ScenarioConfig {
    std::string name;
    std::string description;
    SpeciesSet species;
    ParameterTable parameters;
    std::map<std::string, std::string> F;
    std::map<std::string, std::string> G;
    std::map<std::string, std::string> H;
    std::optional<MassControlCert> mass_control;
    std::optional<IntermediateSumCert> intermediate_sum;
    Geometry geometry;
    std::map<std::string, InitialSpec> initial_data;
    SolverConfig solver;
    OutputSpec outputs;
    CheckSpec checks;
    std::string expected_status = "completed";

    NetworkSource network_source() const { return {species, parameters, F, G, H}; }
};

namespace detail {

class JsonReader {
public:
    JsonReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object()) throw ConfigError(path_, "expected an object");
    }

    /// Rejects keys outside `allowed`; call after all reads.
    void only(std::initializer_list<const char*> allowed) const
    {
        std::set<std::string> ok(allowed.begin(), allowed.end());
        for (const auto& [k, v] : j_.items())
            if (!ok.count(k)) throw ConfigError(sub(k), "unknown field");
    }

    bool has(const char* key) const { return j_.contains(key); }

    const nlohmann::json& at(const char* key) const
    {
        if (!j_.contains(key)) throw ConfigError(sub(key), "missing required field");
        return j_.at(key);
    }

    double number(const char* key) const
    {
        const auto& v = at(key);
        if (!v.is_number()) throw ConfigError(sub(key), "expected a number");
        return v.get<double>();
    }

    double number(const char* key, double fallback) const { return has(key) ? number(key) : fallback; }

    long long integer(const char* key) const
    {
        const auto& v = at(key);
        if (!v.is_number_integer()) throw ConfigError(sub(key), "expected an integer");
        return v.get<long long>();
    }

    long long integer(const char* key, long long fallback) const { return has(key) ? integer(key) : fallback; }

    std::string string(const char* key) const
    {
        const auto& v = at(key);
        if (!v.is_string()) throw ConfigError(sub(key), "expected a string");
        return v.get<std::string>();
    }

    std::string string(const char* key, std::string fallback) const { return has(key) ? string(key) : fallback; }

    bool boolean(const char* key, bool fallback) const
    {
        if (!has(key)) return fallback;
        const auto& v = at(key);
        if (!v.is_boolean()) throw ConfigError(sub(key), "expected a boolean");
        return v.get<bool>();
    }

    std::vector<double> numbers(const char* key) const
    {
        const auto& v = at(key);
        if (!v.is_array()) throw ConfigError(sub(key), "expected an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) throw ConfigError(sub(key) + "[" + std::to_string(i) + "]", "expected a number");
            out.push_back(v[i].get<double>());
        }
        return out;
    }

    JsonReader object(const char* key) const { return JsonReader(at(key), sub(key)); }

    std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    const nlohmann::json& raw() const { return j_; }
    const std::string& path() const { return path_; }

private:
    const nlohmann::json& j_;
    std::string path_;
};

template <class Fn>
auto wrap_invalid(const std::string& path, Fn&& fn) -> decltype(fn())
{
    try {
        return fn();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path, e.what());
    }
}

inline PositivityPolicy parse_policy(const std::string& s, const std::string& path)
{
    if (s == "reject") return PositivityPolicy::reject;
    if (s == "clip") return PositivityPolicy::clip;
    if (s == "none") return PositivityPolicy::none;
    throw ConfigError(path, "expected one of reject, clip, none");
}

inline ReactionCoupling parse_coupling(const std::string& s, const std::string& path)
{
    if (s == "explicit") return ReactionCoupling::explicit_euler;
    if (s == "strang") return ReactionCoupling::strang;
    throw ConfigError(path, "expected one of explicit, strang");
}

} // namespace detail

inline ScenarioConfig scenario_from_json(const nlohmann::json& root)
{
    using detail::JsonReader;
    JsonReader top(root, "");
    ScenarioConfig c;
    const auto version = top.integer("schema_version");
    if (version != kSchemaVersion)
        throw ConfigError("schema_version", "unsupported version " + std::to_string(version));
    c.name = top.string("name");
    c.description = top.string("description", "");

    {
        auto sp = top.object("species");
        auto read_list = [&](const char* key, std::vector<std::string>& names, std::vector<double>& diff) {
            if (!sp.has(key)) return;
            const auto& arr = sp.at(key);
            if (!arr.is_array()) throw ConfigError(sp.sub(key), "expected an array");
            for (std::size_t i = 0; i < arr.size(); ++i) {
                JsonReader e(arr[i], sp.sub(key) + "[" + std::to_string(i) + "]");
                names.push_back(e.string("name"));
                diff.push_back(e.number("diffusivity"));
                e.only({"name", "diffusivity"});
            }
        };
        read_list("bulk", c.species.bulk_names, c.species.d);
        read_list("surface", c.species.surface_names, c.species.delta);
        sp.only({"bulk", "surface"});
        detail::wrap_invalid("species", [&] { c.species.validate(); });
    }

    if (top.has("parameters")) {
        auto p = top.object("parameters");
        for (const auto& [k, v] : p.raw().items()) {
            if (!v.is_number()) throw ConfigError(p.sub(k), "expected a number");
            c.parameters[k] = v.get<double>();
        }
    }

    {
        auto r = top.object("reactions");
        auto read = [&](const char* key, std::map<std::string, std::string>& dst) {
            if (!r.has(key)) return;
            auto g = r.object(key);
            for (const auto& [k, v] : g.raw().items()) {
                if (!v.is_string()) throw ConfigError(g.sub(k), "expected an expression string");
                dst[k] = v.get<std::string>();
            }
        };
        read("F", c.F);
        read("G", c.G);
        read("H", c.H);
        r.only({"F", "G", "H"});
    }

    if (top.has("certificates")) {
        auto certs = top.object("certificates");
        if (certs.has("mass_control")) {
            auto m = certs.object("mass_control");
            MassControlCert mc;
            mc.alpha = m.has("alpha") ? m.numbers("alpha") : std::vector<double>(c.species.m1(), 1.0);
            mc.beta = m.has("beta") ? m.numbers("beta") : std::vector<double>(c.species.m2(), 1.0);
            mc.L = m.number("L");
            mc.K = m.number("K", 0.0);
            m.only({"alpha", "beta", "L", "K"});
            detail::wrap_invalid(m.path(), [&] { mc.validate(c.species.m1(), c.species.m2()); });
            c.mass_control = mc;
        }
        if (certs.has("intermediate_sum")) {
            auto a = certs.object("intermediate_sum");
            IntermediateSumCert ic;
            const auto& mat = a.at("A");
            if (!mat.is_array()) throw ConfigError(a.sub("A"), "expected a matrix");
            for (std::size_t i = 0; i < mat.size(); ++i) {
                if (!mat[i].is_array()) throw ConfigError(a.sub("A") + "[" + std::to_string(i) + "]", "expected a row");
                std::vector<double> row;
                for (const auto& x : mat[i]) {
                    if (!x.is_number()) throw ConfigError(a.sub("A") + "[" + std::to_string(i) + "]", "expected numbers");
                    row.push_back(x.get<double>());
                }
                ic.A.push_back(std::move(row));
            }
            ic.K1 = a.number("K1");
            ic.r_omega = a.number("r_Omega");
            ic.r_m = a.number("r_M");
            ic.mu_m = a.number("mu_M");
            a.only({"A", "K1", "r_Omega", "r_M", "mu_M"});
            detail::wrap_invalid(a.path(), [&] { ic.validate(c.species.arity()); });
            c.intermediate_sum = ic;
        }
        certs.only({"mass_control", "intermediate_sum"});
    }

    {
        auto g = top.object("geometry");
        c.geometry.radius = g.number("radius");
        c.geometry.nr = static_cast<int>(g.integer("Nr"));
        c.geometry.ntheta = static_cast<int>(g.integer("Ntheta"));
        g.only({"radius", "Nr", "Ntheta"});
        if (!(c.geometry.radius > 0.0)) throw ConfigError(g.sub("radius"), "must be positive");
        if (c.geometry.nr < 2) throw ConfigError(g.sub("Nr"), "must be at least 2");
        if (c.geometry.ntheta < 4 || c.geometry.ntheta % 2 != 0) throw ConfigError(g.sub("Ntheta"), "must be even and at least 4");
        detail::wrap_invalid("geometry", [&] { build_polar_mesh(c.geometry.radius, c.geometry.nr, c.geometry.ntheta); });
    }

    {
        auto init = top.object("initial_data");
        for (const auto& [k, v] : init.raw().items()) {
            if (c.species.index_of(k) == SpeciesSet::npos) throw ConfigError(init.sub(k), "unknown species name");
            JsonReader e(v, init.sub(k));
            InitialSpec spec;
            spec.preset = e.string("preset");
            for (const auto& [pk, pv] : v.items()) {
                if (pk == "preset") continue;
                if (!pv.is_number()) throw ConfigError(e.sub(pk), "expected a number");
                spec.params[pk] = pv.get<double>();
            }
            c.initial_data[k] = spec;
        }
    }

    {
        auto s = top.object("solver");
        c.solver.dt = s.number("dt");
        c.solver.t_end = s.number("t_end");
        c.solver.linear_tol = s.number("linear_tol", c.solver.linear_tol);
        c.solver.max_linear_iters = static_cast<int>(s.integer("max_linear_iters", c.solver.max_linear_iters));
        c.solver.positivity_policy = detail::parse_policy(s.string("positivity_policy", "reject"), s.sub("positivity_policy"));
        c.solver.blowup_threshold = s.number("blowup_threshold", c.solver.blowup_threshold);
        c.solver.reaction_coupling = detail::parse_coupling(s.string("reaction_coupling", "explicit"), s.sub("reaction_coupling"));
        c.solver.threads = static_cast<int>(s.integer("threads", 1));
        s.only({"dt", "t_end", "linear_tol", "max_linear_iters", "positivity_policy", "blowup_threshold",
                "reaction_coupling", "threads"});
        if (!(c.solver.dt > 0.0) || !std::isfinite(c.solver.dt)) throw ConfigError(s.sub("dt"), "must be positive");
        if (!(c.solver.t_end >= 0.0) || !std::isfinite(c.solver.t_end)) throw ConfigError(s.sub("t_end"), "must be nonnegative");
        if (!(c.solver.linear_tol > 0.0 && c.solver.linear_tol < 1.0)) throw ConfigError(s.sub("linear_tol"), "must lie in (0, 1)");
        if (c.solver.max_linear_iters < 1) throw ConfigError(s.sub("max_linear_iters"), "must be positive");
        if (!(c.solver.blowup_threshold > 0.0)) throw ConfigError(s.sub("blowup_threshold"), "must be positive");
        if (c.solver.threads < 1) throw ConfigError(s.sub("threads"), "must be positive");
        detail::wrap_invalid("solver", [&] { c.solver.validate(); });
    }

    if (top.has("outputs")) {
        auto o = top.object("outputs");
        c.outputs.record_interval = o.number("record_interval", c.outputs.record_interval);
        c.outputs.directory = o.string("directory", c.outputs.directory);
        if (o.has("snapshot_times")) c.outputs.snapshot_times = o.numbers("snapshot_times");
        c.outputs.lp_exponent = o.number("lp_exponent", c.outputs.lp_exponent);
        o.only({"record_interval", "directory", "snapshot_times", "lp_exponent"});
        if (!(c.outputs.record_interval > 0.0)) throw ConfigError("outputs.record_interval", "must be positive");
        if (!(c.outputs.lp_exponent >= 1.0)) throw ConfigError("outputs.lp_exponent", "must be >= 1");
        detail::wrap_invalid("outputs.record_interval", [&] { return record_stride(c.outputs.record_interval, c.solver.dt); });
    }

    if (top.has("checks")) {
        auto k = top.object("checks");
        c.checks.sample_box = k.number("sample_box", c.checks.sample_box);
        const auto count = k.integer("sample_count", static_cast<long long>(c.checks.sample_count));
        if (count < 0) throw ConfigError(k.sub("sample_count"), "must be nonnegative");
        c.checks.sample_count = static_cast<std::size_t>(count);
        c.checks.dimension = static_cast<int>(k.integer("dimension", c.checks.dimension));
        c.checks.expect_fail = k.boolean("expect_fail", false);
        k.only({"sample_box", "sample_count", "dimension", "expect_fail"});
        if (!(c.checks.sample_box > 0.0)) throw ConfigError("checks.sample_box", "must be positive");
        if (c.checks.dimension < 2) throw ConfigError("checks.dimension", "must be at least 2");
    }

    c.expected_status = top.string("expected_status", "completed");
    top.only({"schema_version", "name", "description", "species", "parameters", "reactions", "certificates",
              "geometry", "initial_data", "solver", "outputs", "checks", "expected_status"});

    // Parse once here so expression errors surface as configuration errors.
    try {
        parse_network(c.network_source());
    } catch (const ParseError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError("reactions", e.what());
    }
    return c;
}

inline nlohmann::json to_json(const ScenarioConfig& c)
{
    using nlohmann::json;
    json j;
    j["schema_version"] = kSchemaVersion;
    j["name"] = c.name;
    j["description"] = c.description;
    json bulk = json::array(), surf = json::array();
    for (std::size_t i = 0; i < c.species.m1(); ++i)
        bulk.push_back({{"name", c.species.bulk_names[i]}, {"diffusivity", c.species.d[i]}});
    for (std::size_t k = 0; k < c.species.m2(); ++k)
        surf.push_back({{"name", c.species.surface_names[k]}, {"diffusivity", c.species.delta[k]}});
    j["species"] = {{"bulk", bulk}, {"surface", surf}};
    j["parameters"] = json::object();
    for (const auto& [k, v] : c.parameters) j["parameters"][k] = v;
    j["reactions"] = {{"F", c.F}, {"G", c.G}, {"H", c.H}};
    json certs = json::object();
    if (c.mass_control)
        certs["mass_control"] = {{"alpha", c.mass_control->alpha},
                                 {"beta", c.mass_control->beta},
                                 {"L", c.mass_control->L},
                                 {"K", c.mass_control->K}};
    if (c.intermediate_sum)
        certs["intermediate_sum"] = {{"A", c.intermediate_sum->A},
                                     {"K1", c.intermediate_sum->K1},
                                     {"r_Omega", c.intermediate_sum->r_omega},
                                     {"r_M", c.intermediate_sum->r_m},
                                     {"mu_M", c.intermediate_sum->mu_m}};
    j["certificates"] = certs;
    j["geometry"] = {{"radius", c.geometry.radius}, {"Nr", c.geometry.nr}, {"Ntheta", c.geometry.ntheta}};
    j["initial_data"] = json::object();
    for (const auto& [k, spec] : c.initial_data) {
        json e = {{"preset", spec.preset}};
        for (const auto& [pk, pv] : spec.params) e[pk] = pv;
        j["initial_data"][k] = e;
    }
    j["solver"] = {{"dt", c.solver.dt},
                   {"t_end", c.solver.t_end},
                   {"linear_tol", c.solver.linear_tol},
                   {"max_linear_iters", c.solver.max_linear_iters},
                   {"positivity_policy", to_string(c.solver.positivity_policy)},
                   {"blowup_threshold", c.solver.blowup_threshold},
                   {"reaction_coupling", to_string(c.solver.reaction_coupling)},
                   {"threads", c.solver.threads}};
    j["outputs"] = {{"record_interval", c.outputs.record_interval},
                    {"directory", c.outputs.directory},
                    {"snapshot_times", c.outputs.snapshot_times},
                    {"lp_exponent", c.outputs.lp_exponent}};
    j["checks"] = {{"sample_box", c.checks.sample_box},
                   {"sample_count", c.checks.sample_count},
                   {"dimension", c.checks.dimension},
                   {"expect_fail", c.checks.expect_fail}};
    j["expected_status"] = c.expected_status;
    return j;
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

struct PresetInfo {
    const char* name;
    const char* summary;
};

inline const std::vector<PresetInfo>& preset_list()
{
    static const std::vector<PresetInfo> list = {
        {"conserved_exchange", "bulk-surface exchange kappa (v1 - u1^a) with exact flux balance; mass conserved"},
        {"dissipative_exchange", "exchange plus surface decay -lambda v1; mass dissipated, uniformly bounded"},
        {"ligand_receptor", "bulk ligand binding surface receptor v1 into complex v2; all-ones triangular certificate"},
        {"bulk_blowup_stress", "F = u1^2 from u0 = 2; violates mass control, blows up at t = 1/2"},
        {"surface_decay", "pure surface diffusion of 1 + cos(theta); analytic decay e^{-t}"},
    };
    return list;
}

inline nlohmann::json preset_json(const std::string& name)
{
    using nlohmann::json;
    auto lower_ones = [](std::size_t n) { return json(IntermediateSumCert::lower_ones(n)); };
    auto identity = [](std::size_t n) { return json(IntermediateSumCert::identity(n)); };
    auto solver = [](double dt, double t_end) {
        return json{{"dt", dt},
                    {"t_end", t_end},
                    {"linear_tol", 1e-12},
                    {"max_linear_iters", 20},
                    {"positivity_policy", "reject"},
                    {"blowup_threshold", 1e6},
                    {"reaction_coupling", "explicit"},
                    {"threads", 1}};
    };
    auto outputs = [&](double interval) {
        return json{{"record_interval", interval},
                    {"directory", "out/" + name},
                    {"snapshot_times", json::array()},
                    {"lp_exponent", 4.0}};
    };
    auto species = [](std::vector<std::string> bulk, std::vector<std::string> surf) {
        json b = json::array(), s = json::array();
        for (auto& n : bulk) b.push_back({{"name", n}, {"diffusivity", 1.0}});
        for (auto& n : surf) s.push_back({{"name", n}, {"diffusivity", 1.0}});
        return json{{"bulk", b}, {"surface", s}};
    };

    json j;
    j["schema_version"] = kSchemaVersion;
    j["name"] = name;
    j["checks"] = {{"sample_box", 10.0}, {"sample_count", 4096}, {"dimension", 2}, {"expect_fail", false}};
    j["expected_status"] = "completed";

    if (name == "conserved_exchange" || name == "dissipative_exchange") {
        const bool dissipative = name == "dissipative_exchange";
        j["description"] = dissipative ? "exchange with surface decay" : "flux-balanced bulk-surface exchange";
        j["species"] = species({"u1"}, {"v1"});
        j["parameters"] = {{"kappa", 1.0}, {"a", 1.5}};
        if (dissipative) j["parameters"]["lambda"] = 0.5;
        j["reactions"] = {{"F", {{"u1", "0"}}},
                          {"G", {{"u1", "kappa*(v1 - u1^a)"}}},
                          {"H", {{"v1", dissipative ? "kappa*(u1^a - v1) - lambda*v1" : "kappa*(u1^a - v1)"}}}};
        j["certificates"] = {
            {"mass_control", {{"alpha", {1.0}}, {"beta", {1.0}}, {"L", 0.0}, {"K", 0.0}}},
            {"intermediate_sum", {{"A", identity(2)}, {"K1", 1.0}, {"r_Omega", 1.0}, {"r_M", 1.0}, {"mu_M", 1.5}}}};
        if (dissipative) {
            j["geometry"] = {{"radius", 1.0}, {"Nr", 16}, {"Ntheta", 32}};
            j["initial_data"] = {{"u1", {{"preset", "radial_bump"}, {"base", 1.0}, {"amplitude", 1.0}, {"width", 0.5}}},
                                 {"v1", {{"preset", "constant"}, {"value", 1.0}}}};
            j["solver"] = solver(2e-3, 10.0);
            j["outputs"] = outputs(0.05);
        } else {
            j["geometry"] = {{"radius", 1.0}, {"Nr", 32}, {"Ntheta", 64}};
            j["initial_data"] = {
                {"u1", {{"preset", "radial_bump"}, {"base", 0.5}, {"amplitude", 1.0}, {"width", 0.5}}},
                {"v1", {{"preset", "cosine_mode"}, {"base", 1.0}, {"amplitude", 0.5}, {"k", 2.0}}}};
            j["solver"] = solver(1e-3, 5.0);
            j["outputs"] = outputs(0.05);
        }
    } else if (name == "ligand_receptor") {
        j["description"] = "ligand u binds receptor v1 to form complex v2 on the boundary";
        j["species"] = species({"u"}, {"v1", "v2"});
        j["parameters"] = {{"k1", 1.0}, {"k2", 1.0}};
        j["reactions"] = {{"F", {{"u", "0"}}},
                          {"G", {{"u", "-k1*u*v1 + k2*v2"}}},
                          {"H", {{"v1", "-k1*u*v1 + k2*v2"}, {"v2", "k1*u*v1 - k2*v2"}}}};
        j["certificates"] = {
            {"mass_control", {{"alpha", {1.0}}, {"beta", {1.0, 1.0}}, {"L", 1.0}, {"K", 0.0}}},
            {"intermediate_sum", {{"A", lower_ones(3)}, {"K1", 2.0}, {"r_Omega", 1.0}, {"r_M", 1.0}, {"mu_M", 1.0}}}};
        j["geometry"] = {{"radius", 1.0}, {"Nr", 16}, {"Ntheta", 32}};
        j["initial_data"] = {{"u", {{"preset", "constant"}, {"value", 1.0}}},
                             {"v1", {{"preset", "constant"}, {"value", 1.0}}},
                             {"v2", {{"preset", "constant"}, {"value", 0.0}}}};
        j["solver"] = solver(1e-3, 5.0);
        j["outputs"] = outputs(0.05);
    } else if (name == "bulk_blowup_stress") {
        j["description"] = "quadratic bulk self-production; violates mass control by design";
        j["species"] = species({"u1"}, {});
        j["parameters"] = json::object();
        j["reactions"] = {{"F", {{"u1", "u1^2"}}}, {"G", {{"u1", "0"}}}, {"H", json::object()}};
        j["certificates"] = {
            {"mass_control", {{"alpha", {1.0}}, {"beta", json::array()}, {"L", 0.0}, {"K", 0.0}}},
            {"intermediate_sum", {{"A", identity(1)}, {"K1", 1.0}, {"r_Omega", 1.0}, {"r_M", 1.0}, {"mu_M", 1.0}}}};
        j["geometry"] = {{"radius", 1.0}, {"Nr", 8}, {"Ntheta", 16}};
        j["initial_data"] = {{"u1", {{"preset", "constant"}, {"value", 2.0}}}};
        j["solver"] = solver(1e-4, 1.0);
        j["outputs"] = outputs(0.01);
        j["checks"]["expect_fail"] = true;
        j["expected_status"] = "blowup_detected";
    } else if (name == "surface_decay") {
        j["description"] = "pure surface diffusion of a single Fourier mode";
        j["species"] = species({"u1"}, {"v1"});
        j["parameters"] = json::object();
        j["reactions"] = {{"F", {{"u1", "0"}}}, {"G", {{"u1", "0"}}}, {"H", {{"v1", "0"}}}};
        j["certificates"] = {
            {"mass_control", {{"alpha", {1.0}}, {"beta", {1.0}}, {"L", 0.0}, {"K", 0.0}}},
            {"intermediate_sum", {{"A", identity(2)}, {"K1", 1.0}, {"r_Omega", 1.0}, {"r_M", 1.0}, {"mu_M", 1.0}}}};
        j["geometry"] = {{"radius", 1.0}, {"Nr", 8}, {"Ntheta", 256}};
        j["initial_data"] = {{"u1", {{"preset", "constant"}, {"value", 1.0}}},
                             {"v1", {{"preset", "cosine_mode"}, {"base", 1.0}, {"amplitude", 1.0}, {"k", 1.0}}}};
        j["solver"] = solver(1e-4, 1.0);
        j["outputs"] = outputs(0.01);
    } else {
        throw ConfigError("", "unknown preset '" + name + "'");
    }
    return j;
}

inline bool is_preset(const std::string& name)
{
    for (const auto& p : preset_list())
        if (name == p.name) return true;
    return false;
}

inline ScenarioConfig preset(const std::string& name) { return scenario_from_json(preset_json(name)); }

/// Loads a scenario file, a manifest.json written by a previous run, or a
/// preset by name. Files take precedence over preset names.
inline ScenarioConfig load_scenario(const std::string& path_or_name)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    if (fs::is_regular_file(path_or_name, ec)) {
        std::ifstream in(path_or_name);
        if (!in) throw ConfigError("", "cannot open '" + path_or_name + "'");
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError("", "'" + path_or_name + "' is not valid JSON: " + e.what());
        }
        if (j.is_object() && j.contains("config") && j.contains("artifact_version")) return scenario_from_json(j["config"]);
        return scenario_from_json(j);
    }
    if (is_preset(path_or_name)) return preset(path_or_name);
    throw ConfigError("", "no such file or preset: '" + path_or_name + "'");
}

// ---------------------------------------------------------------------------
// Initial data and Problem assembly
// ---------------------------------------------------------------------------

namespace detail {

inline double param(const InitialSpec& s, const std::string& key, const std::string& path)
{
    auto it = s.params.find(key);
    if (it == s.params.end()) throw ConfigError(path + "." + key, "missing required field");
    return it->second;
}

inline void allow_params(const InitialSpec& s, std::initializer_list<const char*> keys, const std::string& path)
{
    std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : s.params)
        if (!ok.count(k)) throw ConfigError(path + "." + k, "unknown field for preset '" + s.preset + "'");
}

} // namespace detail

/// constant: value; radial_bump: base + amplitude exp(-(r/width)^2);
/// cosine_mode: base + amplitude (r/R)^k cos(k theta) in the bulk and
/// base + amplitude cos(k theta) on the boundary.
inline BulkField initial_bulk(const PolarMesh& mesh, const InitialSpec& s, const std::string& path)
{
    if (s.preset == "constant") {
        detail::allow_params(s, {"value"}, path);
        const double v = detail::param(s, "value", path);
        return sample_bulk(mesh, [v](double, double) { return v; });
    }
    if (s.preset == "radial_bump") {
        detail::allow_params(s, {"base", "amplitude", "width"}, path);
        const double b = detail::param(s, "base", path);
        const double a = detail::param(s, "amplitude", path);
        const double w = detail::param(s, "width", path);
        if (!(w > 0.0)) throw ConfigError(path + ".width", "must be positive");
        return sample_bulk(mesh, [=](double r, double) { return b + a * std::exp(-(r / w) * (r / w)); });
    }
    if (s.preset == "cosine_mode") {
        detail::allow_params(s, {"base", "amplitude", "k"}, path);
        const double b = detail::param(s, "base", path);
        const double a = detail::param(s, "amplitude", path);
        const double k = detail::param(s, "k", path);
        const double R = mesh.radius();
        return sample_bulk(mesh, [=](double r, double th) { return b + a * std::pow(r / R, k) * std::cos(k * th); });
    }
    throw ConfigError(path + ".preset", "unknown initial data preset '" + s.preset + "'");
}

inline SurfaceField initial_surface(const PolarMesh& mesh, const InitialSpec& s, const std::string& path)
{
    if (s.preset == "constant") {
        detail::allow_params(s, {"value"}, path);
        const double v = detail::param(s, "value", path);
        return sample_surface(mesh, [v](double) { return v; });
    }
    if (s.preset == "cosine_mode") {
        detail::allow_params(s, {"base", "amplitude", "k"}, path);
        const double b = detail::param(s, "base", path);
        const double a = detail::param(s, "amplitude", path);
        const double k = detail::param(s, "k", path);
        return sample_surface(mesh, [=](double th) { return b + a * std::cos(k * th); });
    }
    if (s.preset == "radial_bump") throw ConfigError(path + ".preset", "radial_bump applies to bulk species only");
    throw ConfigError(path + ".preset", "unknown initial data preset '" + s.preset + "'");
}

struct BuiltScenario {
    Problem problem;
    std::vector<std::string> warnings;
};

inline BuiltScenario build_problem(const ScenarioConfig& c)
{
    auto parsed = parse_network(c.network_source());
    PolarMesh mesh = build_polar_mesh(c.geometry.radius, c.geometry.nr, c.geometry.ntheta);
    std::vector<BulkField> u0;
    std::vector<SurfaceField> v0;
    auto spec_for = [&](const std::string& name) {
        auto it = c.initial_data.find(name);
        if (it == c.initial_data.end()) throw ConfigError("initial_data." + name, "missing initial data");
        return it->second;
    };
    auto check_nonneg = [](const std::vector<double>& f, const std::string& path) {
        for (double x : f)
            if (!(x >= 0.0) || !std::isfinite(x)) throw ConfigError(path, "initial data must be finite and nonnegative");
    };
    for (const auto& name : c.species.bulk_names) {
        const auto path = "initial_data." + name;
        u0.push_back(initial_bulk(mesh, spec_for(name), path));
        check_nonneg(u0.back().values, path);
    }
    for (const auto& name : c.species.surface_names) {
        const auto path = "initial_data." + name;
        v0.push_back(initial_surface(mesh, spec_for(name), path));
        check_nonneg(v0.back().values, path);
    }
    MassControlCert cert = c.mass_control ? *c.mass_control : MassControlCert::unit(c.species.m1(), c.species.m2());
    Problem p{std::move(mesh), std::move(parsed.network), std::move(u0), std::move(v0), std::move(cert),
              c.outputs.record_interval, c.outputs.lp_exponent, c.outputs.snapshot_times};
    return {std::move(p), std::move(parsed.warnings)};
}

} // namespace bsrd
