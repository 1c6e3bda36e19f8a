/**
 * @file solver.hpp
 * @brief IMEX time integration of the coupled bulk-surface system.
 *
 * Diffusion is implicit and decoupled per species; reactions and the boundary
 * flux G are explicit. Two couplings are available:
 *
 *  - explicit: Lie splitting. Forward Euler reactions with the step-start
 *    flux injected into the right-hand side, then backward Euler diffusion.
 *  - strang:   half reaction step (Heun), Crank-Nicolson diffusion, half
 *    reaction step. Second order in dt for smooth solutions.
 *
 * Each implicit system M - theta dt d K (M the cell or arc measure, K the
 * symmetric zero-row-sum face coupling) is SPD and constant in time, so it is
 * factored once and solved with iterative refinement down to linear_tol.
 */
#pragma once

#include "conditions.hpp"
#include "diagnostics.hpp"
#include "mesh.hpp"
#include "network.hpp"
#include "state.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace bsrd {

enum class PositivityPolicy { reject, clip, none };
enum class ReactionCoupling { explicit_euler, strang };
enum class RunStatus { completed, blowup_detected, positivity_rejected, linear_solver_failed };

inline const char* to_string(PositivityPolicy p)
{
    switch (p) {
    case PositivityPolicy::reject: return "reject";
    case PositivityPolicy::clip: return "clip";
    case PositivityPolicy::none: return "none";
    }
    return "?";
}

inline const char* to_string(ReactionCoupling c) { return c == ReactionCoupling::strang ? "strang" : "explicit"; }

inline const char* to_string(RunStatus s)
{
    switch (s) {
    case RunStatus::completed: return "completed";
    case RunStatus::blowup_detected: return "blowup_detected";
    case RunStatus::positivity_rejected: return "positivity_rejected";
    case RunStatus::linear_solver_failed: return "linear_solver_failed";
    }
    return "?";
}

struct SolverConfig {
    double dt = 1e-3;
    double t_end = 1.0;
    double linear_tol = 1e-12;
    int max_linear_iters = 20;
    PositivityPolicy positivity_policy = PositivityPolicy::reject;
    double blowup_threshold = 1e6;
    ReactionCoupling reaction_coupling = ReactionCoupling::explicit_euler;
    /// Worker threads for the per-species implicit solves.
    int threads = 1;

    void validate() const
    {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("solver: dt must be positive");
        if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw std::invalid_argument("solver: t_end must be nonnegative");
        if (!(linear_tol > 0.0 && linear_tol < 1.0)) throw std::invalid_argument("solver: linear_tol must lie in (0, 1)");
        if (max_linear_iters < 1) throw std::invalid_argument("solver: max_linear_iters must be positive");
        if (!(blowup_threshold > 0.0)) throw std::invalid_argument("solver: blowup_threshold must be positive");
        if (threads < 1) throw std::invalid_argument("solver: threads must be positive");
    }

    /// Number of fixed steps covering [0, t_end].
    std::int64_t num_steps() const { return static_cast<std::int64_t>(std::llround(t_end / dt)); }
};

struct LinearSolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PositivityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Factored SPD system with iterative refinement.
class SpdSystem {
public:
    explicit SpdSystem(Eigen::SparseMatrix<double> a) : a_(std::move(a))
    {
        ldlt_.compute(a_);
        if (ldlt_.info() != Eigen::Success) throw LinearSolverError("implicit system is not positive definite");
    }

    /// Solves A x = b; returns refinement iterations used, or nullopt when the
    /// relative residual is still above tol after max_iters.
    std::optional<int> solve(const Eigen::VectorXd& b, Eigen::VectorXd& x, double tol, int max_iters) const
    {
        const double bn = b.norm();
        if (bn == 0.0) {
            x.setZero(b.size());
            return 0;
        }
        x = ldlt_.solve(b);
        for (int it = 1;; ++it) {
            const Eigen::VectorXd r = b - a_ * x;
            const double rel = r.norm() / bn;
            if (!std::isfinite(rel)) return std::nullopt;
            if (rel <= tol) return it;
            if (it >= max_iters) return std::nullopt;
            x += ldlt_.solve(r);
        }
    }

    const Eigen::SparseMatrix<double>& matrix() const { return a_; }

private:
    Eigen::SparseMatrix<double> a_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
};

/// M + scale * (-K) for the bulk face coupling, M = diag(cell areas).
inline Eigen::SparseMatrix<double> bulk_system_matrix(const PolarMesh& mesh, double scale)
{
    const int nr = mesh.nr();
    const int nt = mesh.ntheta();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(mesh.num_cells() * 5);
    for (int k = 0; k < nr; ++k) {
        const double ga = scale * mesh.angular_conductance(k);
        for (int j = 0; j < nt; ++j) {
            const auto c = static_cast<int>(mesh.cell_index(k, j));
            double diag = mesh.cell_areas()[c] + 2.0 * ga;
            trip.emplace_back(c, static_cast<int>(mesh.cell_index(k, detail::wrap(j + 1, nt))), -ga);
            trip.emplace_back(c, static_cast<int>(mesh.cell_index(k, detail::wrap(j - 1, nt))), -ga);
            if (k + 1 < nr) {
                const double g = scale * mesh.radial_conductance(k);
                trip.emplace_back(c, static_cast<int>(mesh.cell_index(k + 1, j)), -g);
                diag += g;
            }
            if (k > 0) {
                const double g = scale * mesh.radial_conductance(k - 1);
                trip.emplace_back(c, static_cast<int>(mesh.cell_index(k - 1, j)), -g);
                diag += g;
            }
            trip.emplace_back(c, c, diag);
        }
    }
    Eigen::SparseMatrix<double> a(static_cast<int>(mesh.num_cells()), static_cast<int>(mesh.num_cells()));
    a.setFromTriplets(trip.begin(), trip.end());
    return a;
}

/// Arc-weighted surface analogue of bulk_system_matrix.
inline Eigen::SparseMatrix<double> surface_system_matrix(const PolarMesh& mesh, double scale)
{
    const int nt = mesh.ntheta();
    const double arc = mesh.radius() * mesh.htheta();
    const double g = scale / arc;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(nt) * 3);
    for (int j = 0; j < nt; ++j) {
        trip.emplace_back(j, detail::wrap(j + 1, nt), -g);
        trip.emplace_back(j, detail::wrap(j - 1, nt), -g);
        trip.emplace_back(j, j, mesh.boundary_arc_lengths()[j] + 2.0 * g);
    }
    Eigen::SparseMatrix<double> a(nt, nt);
    a.setFromTriplets(trip.begin(), trip.end());
    return a;
}

struct CompatibilityReport {
    /// Per bulk species: max |d_i * du/dnu - G_i| over boundary nodes.
    std::vector<double> max_abs;
    /// Per bulk species: arc-weighted L^2 norm of the residual.
    std::vector<double> l2;
    /// Per bulk species, per node residual.
    std::vector<SurfaceField> residual;

    double worst() const
    {
        double m = 0.0;
        for (double x : max_abs) m = std::max(m, x);
        return m;
    }
};

/// Discrete residual of d_i du_i/dnu = G_i(u, v) at t = 0, with the normal
/// derivative taken one-sided across the two outermost rings.
inline CompatibilityReport check_compatibility(const PolarMesh& mesh, const ReactionNetwork& net,
                                               const std::vector<BulkField>& u0,
                                               const std::vector<SurfaceField>& v0)
{
    const auto m1 = net.species.m1();
    const auto m2 = net.species.m2();
    if (u0.size() != m1 || v0.size() != m2) throw std::invalid_argument("compatibility: species count mismatch");
    CompatibilityReport rep;
    const int nr = mesh.nr();
    std::vector<double> x(m1 + m2);
    for (std::size_t i = 0; i < m1; ++i) {
        SurfaceField res(mesh.num_nodes());
        double mx = 0.0;
        double l2 = 0.0;
        for (int j = 0; j < mesh.ntheta(); ++j) {
            for (std::size_t a = 0; a < m1; ++a) x[a] = u0[a][mesh.cell_index(nr - 1, j)];
            for (std::size_t b = 0; b < m2; ++b) x[m1 + b] = v0[b][j];
            const double dn = (u0[i][mesh.cell_index(nr - 1, j)] - u0[i][mesh.cell_index(nr - 2, j)]) / mesh.hr();
            res[j] = net.species.d[i] * dn - net.G[i].evaluate(x);
            mx = std::max(mx, std::fabs(res[j]));
            l2 += res[j] * res[j] * mesh.boundary_arc_lengths()[j];
        }
        rep.max_abs.push_back(mx);
        rep.l2.push_back(std::sqrt(l2));
        rep.residual.push_back(std::move(res));
    }
    return rep;
}

struct StepResult {
    RunStatus status = RunStatus::completed;
    std::string detail;
};

/// Time stepper bound to one mesh, network and configuration. Holds the
/// factored implicit systems.
class Integrator {
public:
    Integrator(const PolarMesh& mesh, const ReactionNetwork& net, SolverConfig cfg)
        : mesh_(mesh), net_(net), cfg_(cfg)
    {
        cfg_.validate();
        net_.validate();
        const double theta = cfg_.reaction_coupling == ReactionCoupling::strang ? 0.5 : 1.0;
        for (double d : net_.species.d) {
            bulk_.push_back(std::make_unique<SpdSystem>(bulk_system_matrix(mesh_, theta * cfg_.dt * d)));
            bulk_explicit_scale_.push_back((1.0 - theta) * cfg_.dt * d);
        }
        for (double d : net_.species.delta) {
            surf_.push_back(std::make_unique<SpdSystem>(surface_system_matrix(mesh_, theta * cfg_.dt * d)));
            surf_explicit_scale_.push_back((1.0 - theta) * cfg_.dt * d);
        }
    }

    const SolverConfig& config() const { return cfg_; }

    /// Advances `s` by one step. On a non-completed status the state holds
    /// the offending values and must not be advanced further.
    StepResult advance(SimState& s)
    {
        check_shape(s);
        std::optional<std::string> failure;
        if (cfg_.reaction_coupling == ReactionCoupling::explicit_euler) {
            failure = explicit_step(s);
        } else {
            react_heun(s, 0.5 * cfg_.dt);
            failure = diffuse(s, nullptr);
            if (!failure) react_heun(s, 0.5 * cfg_.dt);
        }
        if (failure) return {RunStatus::linear_solver_failed, *failure};

        s.step_count += 1;
        s.t = static_cast<double>(s.step_count) * cfg_.dt;

        if (auto b = blowup(s)) {
            accumulate(s);
            return {RunStatus::blowup_detected, *b};
        }
        if (auto p = apply_positivity(s)) return {RunStatus::positivity_rejected, *p};
        accumulate(s);
        return {};
    }

private:
    void check_shape(const SimState& s) const
    {
        if (s.u.size() != net_.species.m1() || s.v.size() != net_.species.m2())
            throw std::invalid_argument("step: state does not match the species set");
        for (const auto& f : s.u) detail::require_size(f.size(), mesh_.num_cells(), "step bulk field");
        for (const auto& g : s.v) detail::require_size(g.size(), mesh_.num_nodes(), "step surface field");
    }

    struct ReactionRates {
        std::vector<std::vector<double>> F; // per bulk species, per cell
        std::vector<std::vector<double>> G; // per bulk species, per node
        std::vector<std::vector<double>> H; // per surface species, per node
    };

    /// Rates at the given fields, in fixed cell and node order.
    ReactionRates rates(const std::vector<BulkField>& u, const std::vector<SurfaceField>& v) const
    {
        const auto m1 = net_.species.m1();
        const auto m2 = net_.species.m2();
        const auto nc = mesh_.num_cells();
        const auto nn = mesh_.num_nodes();
        ReactionRates r;
        r.F.assign(m1, std::vector<double>(nc, 0.0));
        r.G.assign(m1, std::vector<double>(nn, 0.0));
        r.H.assign(m2, std::vector<double>(nn, 0.0));
        std::vector<double> x(m1 + m2, 0.0);
        bool any_f = std::any_of(net_.F.begin(), net_.F.end(), [](const Posynomial& p) { return !p.empty(); });
        if (any_f) {
            for (std::size_t c = 0; c < nc; ++c) {
                for (std::size_t i = 0; i < m1; ++i) x[i] = u[i][c];
                for (std::size_t i = 0; i < m1; ++i) r.F[i][c] = net_.F[i].evaluate(x);
            }
        }
        const auto& bcell = mesh_.boundary_cell_index();
        for (std::size_t j = 0; j < nn; ++j) {
            for (std::size_t i = 0; i < m1; ++i) x[i] = u[i][bcell[j]];
            for (std::size_t k = 0; k < m2; ++k) x[m1 + k] = v[k][j];
            for (std::size_t i = 0; i < m1; ++i) r.G[i][j] = net_.G[i].evaluate(x);
            for (std::size_t k = 0; k < m2; ++k) r.H[k][j] = net_.H[k].evaluate(x);
        }
        return r;
    }

    /// Ledger increment h * (int F + int_M G) per bulk species and
    /// h * int_M H per surface species.
    void book(SimState& s, const ReactionRates& r, double h) const
    {
        const auto m1 = net_.species.m1();
        const auto& area = mesh_.cell_areas();
        const auto& arc = mesh_.boundary_arc_lengths();
        for (std::size_t i = 0; i < m1; ++i) {
            double q = 0.0;
            for (std::size_t c = 0; c < area.size(); ++c) q += area[c] * r.F[i][c];
            for (std::size_t j = 0; j < arc.size(); ++j) q += arc[j] * r.G[i][j];
            s.ledger[i] += h * q;
        }
        for (std::size_t k = 0; k < r.H.size(); ++k) {
            double q = 0.0;
            for (std::size_t j = 0; j < arc.size(); ++j) q += arc[j] * r.H[k][j];
            s.ledger[m1 + k] += h * q;
        }
    }

    /// y + h f(y) for the reaction subsystem, with G entering the outer ring
    /// as a source G * arc / area.
    void euler_update(std::vector<BulkField>& u, std::vector<SurfaceField>& v, const ReactionRates& r, double h) const
    {
        const auto& area = mesh_.cell_areas();
        const auto& arc = mesh_.boundary_arc_lengths();
        const auto& bcell = mesh_.boundary_cell_index();
        for (std::size_t i = 0; i < u.size(); ++i) {
            for (std::size_t c = 0; c < u[i].size(); ++c) u[i][c] += h * r.F[i][c];
            for (std::size_t j = 0; j < bcell.size(); ++j) u[i][bcell[j]] += h * r.G[i][j] * arc[j] / area[bcell[j]];
        }
        for (std::size_t k = 0; k < v.size(); ++k)
            for (std::size_t j = 0; j < v[k].size(); ++j) v[k][j] += h * r.H[k][j];
    }

    std::optional<std::string> explicit_step(SimState& s)
    {
        const auto r = rates(s.u, s.v);
        book(s, r, cfg_.dt);
        const auto m1 = net_.species.m1();
        const auto& arc = mesh_.boundary_arc_lengths();
        const auto& bcell = mesh_.boundary_cell_index();
        for (std::size_t i = 0; i < m1; ++i)
            for (std::size_t c = 0; c < s.u[i].size(); ++c) s.u[i][c] += cfg_.dt * r.F[i][c];
        for (std::size_t k = 0; k < s.v.size(); ++k)
            for (std::size_t j = 0; j < s.v[k].size(); ++j) s.v[k][j] += cfg_.dt * r.H[k][j];
        // Flux injection lives in the measure-weighted right-hand side.
        std::vector<std::vector<double>> inject(m1, std::vector<double>(mesh_.num_cells(), 0.0));
        for (std::size_t i = 0; i < m1; ++i)
            for (std::size_t j = 0; j < bcell.size(); ++j) inject[i][bcell[j]] += cfg_.dt * r.G[i][j] * arc[j];
        return diffuse(s, &inject);
    }

    /// Heun step of the reaction subsystem. The predictor stage is clamped to
    /// the orthant before its rates are evaluated.
    void react_heun(SimState& s, double h)
    {
        auto clamp = [](auto fields) {
            for (auto& f : fields)
                for (auto& x : f.values) x = std::max(x, 0.0);
            return fields;
        };
        const auto r0 = rates(s.u, s.v);
        auto u1 = s.u;
        auto v1 = s.v;
        euler_update(u1, v1, r0, h);
        const auto r1 = rates(clamp(std::move(u1)), clamp(std::move(v1)));
        book(s, r0, 0.5 * h);
        book(s, r1, 0.5 * h);
        euler_update(s.u, s.v, r0, 0.5 * h);
        euler_update(s.u, s.v, r1, 0.5 * h);
    }

    /// Implicit diffusion of every species; `inject` adds measure-weighted
    /// sources to the bulk right-hand sides.
    std::optional<std::string> diffuse(SimState& s, const std::vector<std::vector<double>>* inject)
    {
        const auto m1 = net_.species.m1();
        const auto m2 = net_.species.m2();
        std::vector<std::optional<std::string>> errors(m1 + m2);
        std::vector<std::function<void()>> tasks;
        tasks.reserve(m1 + m2);
        for (std::size_t i = 0; i < m1; ++i) {
            tasks.emplace_back([&, i] {
                const auto& area = mesh_.cell_areas();
                const auto n = static_cast<Eigen::Index>(area.size());
                Eigen::VectorXd b(n);
                const bool cn = bulk_explicit_scale_[i] != 0.0;
                std::vector<double> ex;
                if (cn) ex = bulk_face_exchange(mesh_, s.u[i].values);
                for (Eigen::Index c = 0; c < n; ++c) {
                    double rhs = area[c] * s.u[i][c];
                    if (cn) rhs += bulk_explicit_scale_[i] * ex[c];
                    if (inject) rhs += (*inject)[i][c];
                    b[c] = rhs;
                }
                Eigen::VectorXd x;
                if (!bulk_[i]->solve(b, x, cfg_.linear_tol, cfg_.max_linear_iters)) {
                    errors[i] = "bulk species '" + net_.species.bulk_names[i] + "': implicit solve did not reach tolerance";
                    return;
                }
                for (Eigen::Index c = 0; c < n; ++c) s.u[i][c] = x[c];
            });
        }
        for (std::size_t k = 0; k < m2; ++k) {
            tasks.emplace_back([&, k] {
                const auto& arc = mesh_.boundary_arc_lengths();
                const int nt = mesh_.ntheta();
                const double g = surf_explicit_scale_[k] / (mesh_.radius() * mesh_.htheta());
                Eigen::VectorXd b(nt);
                const auto& v = s.v[k];
                for (int j = 0; j < nt; ++j) {
                    double rhs = arc[j] * v[j];
                    if (g != 0.0)
                        rhs += g * ((v[detail::wrap(j + 1, nt)] - v[j]) + (v[detail::wrap(j - 1, nt)] - v[j]));
                    b[j] = rhs;
                }
                Eigen::VectorXd x;
                if (!surf_[k]->solve(b, x, cfg_.linear_tol, cfg_.max_linear_iters)) {
                    errors[m1 + k] = "surface species '" + net_.species.surface_names[k]
                        + "': implicit solve did not reach tolerance";
                    return;
                }
                for (int j = 0; j < nt; ++j) s.v[k][j] = x[j];
            });
        }
        run_tasks(tasks);
        for (auto& e : errors)
            if (e) return e;
        return std::nullopt;
    }

    void run_tasks(std::vector<std::function<void()>>& tasks) const
    {
        const auto workers = std::min<std::size_t>(static_cast<std::size_t>(cfg_.threads), tasks.size());
        if (workers <= 1) {
            for (auto& t : tasks) t();
            return;
        }
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&tasks, w, workers] {
                for (std::size_t k = w; k < tasks.size(); k += workers) tasks[k]();
            });
    }

    std::optional<std::string> blowup(const SimState& s) const
    {
        auto scan = [&](const std::vector<double>& f, const std::string& name) -> std::optional<std::string> {
            for (double x : f)
                if (!std::isfinite(x) || std::fabs(x) > cfg_.blowup_threshold)
                    return "species '" + name + "' reached " + format_double(x) + " at t = " + format_double(s.t);
            return std::nullopt;
        };
        for (std::size_t i = 0; i < s.u.size(); ++i)
            if (auto m = scan(s.u[i].values, net_.species.bulk_names[i])) return m;
        for (std::size_t k = 0; k < s.v.size(); ++k)
            if (auto m = scan(s.v[k].values, net_.species.surface_names[k])) return m;
        return std::nullopt;
    }

    std::optional<std::string> apply_positivity(SimState& s) const
    {
        if (cfg_.positivity_policy == PositivityPolicy::none) return std::nullopt;
        const auto m1 = s.u.size();
        auto handle = [&](std::vector<double>& f, const std::vector<double>& measure, std::size_t species,
                          const std::string& name, const char* kind) -> std::optional<std::string> {
            for (std::size_t c = 0; c < f.size(); ++c) {
                if (f[c] >= 0.0) continue;
                if (cfg_.positivity_policy == PositivityPolicy::reject)
                    return std::string(kind) + " species '" + name + "' negative at index " + std::to_string(c)
                        + " (" + format_double(f[c]) + ") at t = " + format_double(s.t);
                const double added = -f[c] * measure[c];
                s.clipped[species] += added;
                s.ledger[species] += added;
                f[c] = 0.0;
            }
            return std::nullopt;
        };
        for (std::size_t i = 0; i < m1; ++i)
            if (auto m = handle(s.u[i].values, mesh_.cell_areas(), i, net_.species.bulk_names[i], "bulk")) return m;
        for (std::size_t k = 0; k < s.v.size(); ++k)
            if (auto m = handle(s.v[k].values, mesh_.boundary_arc_lengths(), m1 + k, net_.species.surface_names[k],
                                "surface"))
                return m;
        return std::nullopt;
    }

    void accumulate(SimState& s) const
    {
        const double dt = cfg_.dt;
        const auto& bcell = mesh_.boundary_cell_index();
        for (std::size_t i = 0; i < s.u.size(); ++i) {
            for (std::size_t c = 0; c < s.u[i].size(); ++c) s.W[i][c] += dt * s.u[i][c];
            for (std::size_t j = 0; j < bcell.size(); ++j) s.W_trace[i][j] += dt * s.u[i][bcell[j]];
        }
        for (std::size_t k = 0; k < s.v.size(); ++k)
            for (std::size_t j = 0; j < s.v[k].size(); ++j) s.Z[k][j] += dt * s.v[k][j];
    }

    const PolarMesh& mesh_;
    const ReactionNetwork& net_;
    SolverConfig cfg_;
    std::vector<std::unique_ptr<SpdSystem>> bulk_;
    std::vector<std::unique_ptr<SpdSystem>> surf_;
    std::vector<double> bulk_explicit_scale_;
    std::vector<double> surf_explicit_scale_;
};

/// One step with a freshly factored integrator. Throws PositivityError or
/// LinearSolverError on the corresponding failures; blow-up is left to the
/// caller to detect from the returned fields.
inline SimState step(SimState state, const PolarMesh& mesh, const ReactionNetwork& net, const SolverConfig& cfg)
{
    Integrator integ(mesh, net, cfg);
    const auto r = integ.advance(state);
    if (r.status == RunStatus::positivity_rejected) throw PositivityError(r.detail);
    if (r.status == RunStatus::linear_solver_failed) throw LinearSolverError(r.detail);
    return state;
}

/// Everything a run needs besides the solver configuration.
struct Problem {
    PolarMesh mesh;
    ReactionNetwork network;
    std::vector<BulkField> u0;
    std::vector<SurfaceField> v0;
    MassControlCert cert;
    double record_interval = 0.1;
    double lp_exponent = 4.0;
    /// Times at which full field snapshots are kept.
    std::vector<double> snapshot_times;
};

struct Snapshot {
    double requested_t = 0.0;
    SimState state;
};

struct RunOutcome {
    RunStatus status = RunStatus::completed;
    std::string detail;
    SimState final_state;
    std::vector<DiagnosticsRecord> diagnostics;
    /// Weighted total mass after every step, index 0 = initial.
    std::vector<double> mass_history;
    double initial_mass = 0.0;
    /// Time of the first threshold exceedance for blow-up runs.
    std::optional<double> blowup_time;
    std::vector<Snapshot> snapshots;
};

/// Steps between records; the interval must be a whole number of steps.
inline std::int64_t record_stride(double record_interval, double dt)
{
    if (!(record_interval > 0.0)) throw std::invalid_argument("record interval must be positive");
    const double ratio = record_interval / dt;
    const auto n = static_cast<std::int64_t>(std::llround(ratio));
    if (n < 1 || std::fabs(ratio - static_cast<double>(n)) > 1e-9 * ratio)
        throw std::invalid_argument("record interval must be a positive multiple of dt");
    return n;
}

inline RunOutcome run(const Problem& problem, const SolverConfig& cfg)
{
    cfg.validate();
    const auto& mesh = problem.mesh;
    const auto& net = problem.network;
    problem.cert.validate(net.species.m1(), net.species.m2());
    const auto stride = record_stride(problem.record_interval, cfg.dt);
    const auto nsteps = cfg.num_steps();

    Integrator integ(mesh, net, cfg);
    RunOutcome out;
    SimState s = SimState::initial(mesh, problem.u0, problem.v0);
    out.initial_mass = total_mass(mesh, s, problem.cert);
    out.mass_history.reserve(static_cast<std::size_t>(nsteps) + 1);
    out.mass_history.push_back(out.initial_mass);

    auto record = [&] {
        out.diagnostics.push_back(make_record(mesh, net.species, s, problem.cert, out.initial_mass,
                                              problem.lp_exponent, out.diagnostics));
    };
    std::vector<double> pending = problem.snapshot_times;
    std::sort(pending.begin(), pending.end());
    std::size_t next_snap = 0;
    auto snapshot = [&] {
        const double eps = 0.5 * cfg.dt;
        while (next_snap < pending.size() && pending[next_snap] <= s.t + eps) {
            out.snapshots.push_back({pending[next_snap], s});
            ++next_snap;
        }
    };

    record();
    snapshot();
    for (std::int64_t n = 0; n < nsteps; ++n) {
        const auto r = integ.advance(s);
        out.mass_history.push_back(total_mass(mesh, s, problem.cert));
        if (r.status != RunStatus::completed) {
            out.status = r.status;
            out.detail = r.detail;
            if (r.status == RunStatus::blowup_detected) out.blowup_time = s.t;
            record();
            break;
        }
        if (s.step_count % stride == 0) record();
        snapshot();
    }
    out.final_state = std::move(s);
    return out;
}

} // namespace bsrd
