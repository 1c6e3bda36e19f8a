/**
 * @file diagnostics.hpp
 * @brief Norms, mass envelopes, time-integral sups, sliding-window sups and
 * the discrete trace interpolation inequality.
 */
#pragma once

#include "conditions.hpp"
#include "mesh.hpp"
#include "network.hpp"
#include "state.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bsrd {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

namespace detail {

inline double weighted_lp(std::span<const double> f, std::span<const double> measure, double p)
{
    if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: exponent must be >= 1");
    if (std::isinf(p)) {
        double m = 0.0;
        for (double x : f) {
            if (std::isnan(x)) return x;
            m = std::max(m, std::fabs(x));
        }
        return m;
    }
    double s = 0.0;
    if (p == 1.0) {
        for (std::size_t i = 0; i < f.size(); ++i) s += std::fabs(f[i]) * measure[i];
        return s;
    }
    if (p == 2.0) {
        for (std::size_t i = 0; i < f.size(); ++i) s += f[i] * f[i] * measure[i];
        return std::sqrt(s);
    }
    for (std::size_t i = 0; i < f.size(); ++i) s += std::pow(std::fabs(f[i]), p) * measure[i];
    return std::pow(s, 1.0 / p);
}

} // namespace detail

/// Discrete L^p norm with cell areas as the measure; p may be infinity.
inline double lp_norm(const PolarMesh& mesh, const BulkField& f, double p)
{
    detail::require_size(f.size(), mesh.num_cells(), "lp_norm field");
    return detail::weighted_lp(f.values, mesh.cell_areas(), p);
}

/// Discrete L^p norm on the boundary with arc lengths as the measure.
inline double lp_norm(const PolarMesh& mesh, const SurfaceField& g, double p)
{
    detail::require_size(g.size(), mesh.num_nodes(), "lp_norm field");
    return detail::weighted_lp(g.values, mesh.boundary_arc_lengths(), p);
}

inline double integrate(const PolarMesh& mesh, const BulkField& f)
{
    const auto& a = mesh.cell_areas();
    double s = 0.0;
    for (std::size_t c = 0; c < f.size(); ++c) s += a[c] * f[c];
    return s;
}

inline double integrate(const PolarMesh& mesh, const SurfaceField& g)
{
    const auto& a = mesh.boundary_arc_lengths();
    double s = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) s += a[j] * g[j];
    return s;
}

/// Weighted total mass sum_i alpha_i int_Omega u_i + sum_j beta_j int_M v_j.
inline double total_mass(const PolarMesh& mesh, const SimState& s, const MassControlCert& cert)
{
    double m = 0.0;
    for (std::size_t i = 0; i < s.u.size(); ++i) m += cert.alpha[i] * integrate(mesh, s.u[i]);
    for (std::size_t j = 0; j < s.v.size(); ++j) m += cert.beta[j] * integrate(mesh, s.v[j]);
    return m;
}

/// The same weighted sum taken from the solver's incremental ledger.
inline double ledger_mass(const SimState& s, const MassControlCert& cert)
{
    double m = 0.0;
    const auto m1 = s.u.size();
    for (std::size_t i = 0; i < m1; ++i) m += cert.alpha[i] * s.ledger[i];
    for (std::size_t j = 0; j < s.v.size(); ++j) m += cert.beta[j] * s.ledger[m1 + j];
    return m;
}

struct MassReport {
    double total_mass = 0.0;
    /// Positive means the envelope is exceeded.
    double envelope_residual = 0.0;
};

/// Gronwall offset c in d/dt mass <= L (mass + c). Scaled by the largest
/// weight when the certificate is not normalized to unit weights.
inline double envelope_offset(const PolarMesh& mesh, const MassControlCert& cert)
{
    double w = 0.0;
    for (double a : cert.alpha) w = std::max(w, a);
    for (double b : cert.beta) w = std::max(w, b);
    return (mesh.area() + mesh.perimeter()) * w;
}

/// Total mass and its residual against the mass-control envelope: constant
/// mass bound for L <= 0, (m0 + c) e^{Lt} - c for L > 0.
inline MassReport mass_report(const PolarMesh& mesh, const SimState& s, const MassControlCert& cert,
                              double initial_mass)
{
    cert.validate(s.u.size(), s.v.size());
    MassReport r;
    r.total_mass = total_mass(mesh, s, cert);
    if (cert.L <= 0.0) {
        r.envelope_residual = r.total_mass - initial_mass;
    } else {
        const double c = envelope_offset(mesh, cert);
        r.envelope_residual = r.total_mass - ((initial_mass + c) * std::exp(cert.L * s.t) - c);
    }
    return r;
}

struct TimeIntegralSup {
    double W_sup = 0.0;
    double W_trace_sup = 0.0;
    double Z_sup = 0.0;
};

inline TimeIntegralSup time_integral_sup(const SimState& s)
{
    TimeIntegralSup out;
    auto fold = [](double acc, const std::vector<double>& v) {
        for (double x : v) acc = std::max(acc, x);
        return acc;
    };
    for (const auto& f : s.W) out.W_sup = fold(out.W_sup, f.values);
    for (const auto& f : s.W_trace) out.W_trace_sup = fold(out.W_trace_sup, f.values);
    for (const auto& f : s.Z) out.Z_sup = fold(out.Z_sup, f.values);
    return out;
}

enum class FieldKind { bulk, surface };

inline const char* to_string(FieldKind k) { return k == FieldKind::bulk ? "bulk" : "surface"; }

struct SpeciesDiagnostics {
    std::string name;
    FieldKind kind = FieldKind::bulk;
    double L1 = 0.0;
    double L2 = 0.0;
    double Lp = 0.0;
    double Linf = 0.0;
    /// Sup of this species' time integrals. Bulk species fill W_sup and
    /// W_trace_sup, surface species fill Z_sup; the rest stay zero.
    double W_sup = 0.0;
    double W_trace_sup = 0.0;
    double Z_sup = 0.0;
};

struct DiagnosticsRecord {
    double t = 0.0;
    std::int64_t step = 0;
    std::vector<SpeciesDiagnostics> species;
    double total_mass = 0.0;
    double ledger_mass = 0.0;
    double mass_envelope_residual = 0.0;
    double W_sup = 0.0;
    double W_trace_sup = 0.0;
    double Z_sup = 0.0;
    double window_sup = 0.0;
    double clip_correction = 0.0;

    /// Largest L^inf norm over all species at this record.
    double max_linf() const
    {
        double m = 0.0;
        for (const auto& s : species) {
            if (std::isnan(s.Linf)) return s.Linf;
            m = std::max(m, s.Linf);
        }
        return m;
    }
};

/// Snapshot of every tracked quantity. `history` supplies earlier records
/// for the trailing length-2 window sup.
inline DiagnosticsRecord make_record(const PolarMesh& mesh, const SpeciesSet& species, const SimState& s,
                                     const MassControlCert& cert, double initial_mass, double p,
                                     std::span<const DiagnosticsRecord> history = {})
{
    DiagnosticsRecord r;
    r.t = s.t;
    r.step = s.step_count;
    for (std::size_t i = 0; i < s.u.size(); ++i) {
        SpeciesDiagnostics d;
        d.name = species.bulk_names[i];
        d.kind = FieldKind::bulk;
        d.L1 = lp_norm(mesh, s.u[i], 1.0);
        d.L2 = lp_norm(mesh, s.u[i], 2.0);
        d.Lp = lp_norm(mesh, s.u[i], p);
        d.Linf = lp_norm(mesh, s.u[i], kInfinity);
        d.W_sup = lp_norm(mesh, s.W[i], kInfinity);
        d.W_trace_sup = lp_norm(mesh, s.W_trace[i], kInfinity);
        r.species.push_back(d);
    }
    for (std::size_t j = 0; j < s.v.size(); ++j) {
        SpeciesDiagnostics d;
        d.name = species.surface_names[j];
        d.kind = FieldKind::surface;
        d.L1 = lp_norm(mesh, s.v[j], 1.0);
        d.L2 = lp_norm(mesh, s.v[j], 2.0);
        d.Lp = lp_norm(mesh, s.v[j], p);
        d.Linf = lp_norm(mesh, s.v[j], kInfinity);
        d.Z_sup = lp_norm(mesh, s.Z[j], kInfinity);
        r.species.push_back(d);
    }
    const auto mr = mass_report(mesh, s, cert, initial_mass);
    r.total_mass = mr.total_mass;
    r.ledger_mass = ledger_mass(s, cert);
    r.mass_envelope_residual = mr.envelope_residual;
    const auto sups = time_integral_sup(s);
    r.W_sup = sups.W_sup;
    r.W_trace_sup = sups.W_trace_sup;
    r.Z_sup = sups.Z_sup;
    r.clip_correction = s.total_clipped();

    r.window_sup = r.max_linf();
    constexpr double kWindow = 2.0;
    for (auto it = history.rbegin(); it != history.rend(); ++it) {
        if (it->t < s.t - kWindow - 1e-9 * (1.0 + s.t)) break;
        r.window_sup = std::max(r.window_sup, it->max_linf());
    }
    return r;
}

struct WindowSup {
    int tau = 0;
    double sup = 0.0;
};

struct WindowReport {
    std::vector<WindowSup> windows;
    /// Max over all windows; the uniform-in-time bound.
    double uniform_sup = 0.0;
    /// Largest ratio sup[tau+1] / sup[tau] over consecutive windows.
    double max_growth_ratio = 0.0;
    std::vector<std::string> notes;

    /// Consecutive sups nonincreasing up to `rel_tol`, from window `from` on.
    bool nonincreasing_from(int from, double rel_tol) const
    {
        for (std::size_t k = 1; k < windows.size(); ++k) {
            if (windows[k - 1].tau < from) continue;
            if (windows[k].sup > windows[k - 1].sup * (1.0 + rel_tol)) return false;
        }
        return true;
    }
};

/// Sups of the species L^inf norms over the cylinders [tau, tau + 2] for
/// integer tau with tau + 2 <= t_end.
inline WindowReport window_sup_report(std::span<const DiagnosticsRecord> records, double t_end)
{
    WindowReport rep;
    if (t_end < 2.0) {
        rep.notes.push_back("t_end < 2: no complete window");
        return rep;
    }
    const double eps = 1e-9 * (1.0 + t_end);
    for (int tau = 0; tau + 2.0 <= t_end + eps; ++tau) {
        WindowSup w{tau, 0.0};
        bool any = false;
        for (const auto& r : records) {
            if (r.t < tau - eps || r.t > tau + 2.0 + eps) continue;
            w.sup = std::max(w.sup, r.max_linf());
            any = true;
        }
        if (!any) {
            rep.notes.push_back("window " + std::to_string(tau) + " has no records");
            continue;
        }
        rep.windows.push_back(w);
        rep.uniform_sup = std::max(rep.uniform_sup, w.sup);
    }
    for (std::size_t k = 1; k < rep.windows.size(); ++k)
        if (rep.windows[k - 1].sup > 0.0)
            rep.max_growth_ratio = std::max(rep.max_growth_ratio, rep.windows[k].sup / rep.windows[k - 1].sup);
    return rep;
}

// ---------------------------------------------------------------------------
// Trace interpolation inequality
//   int_M w^s <= C s int_Omega w^{s-1} |grad w| + C int_Omega w^s
// ---------------------------------------------------------------------------

/// Cell gradient magnitude from the face difference quotients of the
/// Laplacian stencil, averaged over the faces each cell has.
inline BulkField gradient_magnitude(const PolarMesh& mesh, const BulkField& w)
{
    detail::require_size(w.size(), mesh.num_cells(), "gradient field");
    const int nr = mesh.nr();
    const int nt = mesh.ntheta();
    const double hr = mesh.hr();
    BulkField out(w.size());
    for (int k = 0; k < nr; ++k) {
        const double arc = mesh.cell_centers()[mesh.cell_index(k, 0)].r * mesh.htheta();
        for (int j = 0; j < nt; ++j) {
            const auto c = mesh.cell_index(k, j);
            double gr = 0.0;
            int faces = 0;
            if (k > 0) {
                gr += (w[c] - w[mesh.cell_index(k - 1, j)]) / hr;
                ++faces;
            }
            if (k + 1 < nr) {
                gr += (w[mesh.cell_index(k + 1, j)] - w[c]) / hr;
                ++faces;
            }
            gr /= faces;
            const double gt = 0.5 * ((w[mesh.cell_index(k, detail::wrap(j + 1, nt))] - w[c])
                                     + (w[c] - w[mesh.cell_index(k, detail::wrap(j - 1, nt))]))
                / arc;
            out[c] = std::hypot(gr, gt);
        }
    }
    return out;
}

struct TraceInequalityReport {
    double sigma = 0.0;
    double lhs = 0.0;
    double grad_term = 0.0;
    double bulk_term = 0.0;
    /// lhs / (sigma * grad_term + bulk_term); empty when the denominator vanishes.
    std::optional<double> fitted_C;
    std::optional<double> calibrated_C;
    bool exceeds_calibration = false;
};

inline TraceInequalityReport trace_inequality_terms(const PolarMesh& mesh, const BulkField& w, double sigma,
                                                    int n = 2)
{
    if (!(sigma > 2.0 && sigma < 2.0 + 2.0 / n))
        throw std::invalid_argument("trace inequality: sigma must lie in (2, 2 + 2/n)");
    detail::require_size(w.size(), mesh.num_cells(), "trace inequality field");
    for (double x : w.values)
        if (!(x >= 0.0) || !std::isfinite(x)) throw std::invalid_argument("trace inequality: field must be nonnegative");

    TraceInequalityReport r;
    r.sigma = sigma;
    const auto tr = boundary_trace(mesh, w);
    const auto& arc = mesh.boundary_arc_lengths();
    for (std::size_t j = 0; j < tr.size(); ++j) r.lhs += std::pow(tr[j], sigma) * arc[j];

    const auto grad = gradient_magnitude(mesh, w);
    const auto& area = mesh.cell_areas();
    for (std::size_t c = 0; c < w.size(); ++c) {
        r.grad_term += std::pow(w[c], sigma - 1.0) * grad[c] * area[c];
        r.bulk_term += std::pow(w[c], sigma) * area[c];
    }
    const double denom = sigma * r.grad_term + r.bulk_term;
    if (denom > 0.0) r.fitted_C = r.lhs / denom;
    return r;
}

/// Largest fitted constant over a fixed family of smooth reference fields
/// (1, r, r^2, r^4, 1 + r cos theta / 2) on this mesh.
inline double calibrate_trace_constant(const PolarMesh& mesh, double sigma, int n = 2)
{
    const double R = mesh.radius();
    const std::vector<BulkField> family = {
        sample_bulk(mesh, [](double, double) { return 1.0; }),
        sample_bulk(mesh, [R](double r, double) { return r / R; }),
        sample_bulk(mesh, [R](double r, double) { return (r / R) * (r / R); }),
        sample_bulk(mesh, [R](double r, double) { return std::pow(r / R, 4.0); }),
        sample_bulk(mesh, [R](double r, double th) { return 1.0 + 0.5 * (r / R) * std::cos(th); }),
    };
    double c = 0.0;
    for (const auto& w : family) {
        const auto rep = trace_inequality_terms(mesh, w, sigma, n);
        if (rep.fitted_C) c = std::max(c, *rep.fitted_C);
    }
    return c;
}

/// Discrete check of the trace interpolation inequality for one field; flags
/// a fitted constant above the mesh-family calibration.
inline TraceInequalityReport trace_inequality_report(const PolarMesh& mesh, const BulkField& w, double sigma,
                                                     int n = 2)
{
    auto r = trace_inequality_terms(mesh, w, sigma, n);
    r.calibrated_C = calibrate_trace_constant(mesh, sigma, n);
    if (r.fitted_C) r.exceeds_calibration = *r.fitted_C > *r.calibrated_C * (1.0 + 1e-9);
    return r;
}

} // namespace bsrd
