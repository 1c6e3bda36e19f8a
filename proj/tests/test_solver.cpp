#include <bsrd/solver.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace bsrd;

namespace {

ReactionNetwork network(SpeciesSet s, std::map<std::string, std::string> F, std::map<std::string, std::string> G,
                        std::map<std::string, std::string> H, ParameterTable p = {})
{
    NetworkSource src{std::move(s), std::move(p), std::move(F), std::move(G), std::move(H)};
    return parse_network(src).network;
}

ReactionNetwork inert() { return network({{"u1"}, {"v1"}, {1.0}, {1.0}}, {}, {}, {}); }

ReactionNetwork exchange()
{
    return network({{"u1"}, {"v1"}, {1.0}, {1.0}}, {}, {{"u1", "v1 - u1^1.5"}}, {{"v1", "u1^1.5 - v1"}});
}

SolverConfig config(double dt, double t_end)
{
    SolverConfig c;
    c.dt = dt;
    c.t_end = t_end;
    return c;
}

Problem problem(PolarMesh mesh, ReactionNetwork net, std::vector<BulkField> u0, std::vector<SurfaceField> v0,
                double record = 0.1)
{
    Problem p{std::move(mesh), std::move(net), std::move(u0), std::move(v0), {}, record, 4.0, {}};
    p.cert = MassControlCert::unit(p.network.species.m1(), p.network.species.m2());
    return p;
}

} // namespace

TEST(Step, ZeroIsAFixedPoint)
{
    const auto m = build_polar_mesh(1.0, 6, 12);
    const auto net = inert();
    const auto s0 = SimState::initial(m, {m.bulk_zeros()}, {m.surface_zeros()});
    const auto s1 = step(s0, m, net, config(0.01, 1.0));
    EXPECT_EQ(s1.u[0].values, s0.u[0].values);
    EXPECT_EQ(s1.v[0].values, s0.v[0].values);
    EXPECT_DOUBLE_EQ(s1.t, 0.01);
    EXPECT_EQ(s1.step_count, 1);
}

TEST(Step, ConstantsStayConstant)
{
    const auto m = build_polar_mesh(1.0, 8, 16);
    const auto net = inert();
    for (auto coupling : {ReactionCoupling::explicit_euler, ReactionCoupling::strang}) {
        auto cfg = config(0.01, 1.0);
        cfg.reaction_coupling = coupling;
        Integrator integ(m, net, cfg);
        auto s = SimState::initial(m, {BulkField(m.num_cells(), 1.0)}, {SurfaceField(m.num_nodes(), 1.0)});
        for (int n = 0; n < 100; ++n) ASSERT_EQ(integ.advance(s).status, RunStatus::completed);
        for (double x : s.u[0].values) EXPECT_NEAR(x, 1.0, 1e-10);
        // right-endpoint accumulation of u = 1
        EXPECT_NEAR(time_integral_sup(s).W_sup, 1.0, 1e-10);
        EXPECT_NEAR(time_integral_sup(s).W_trace_sup, 1.0, 1e-10);
    }
}

TEST(Step, BackwardEulerDampsCircleModesExactly)
{
    // Each step multiplies cos(k theta) by 1 / (1 - dt delta lambda_k).
    const double R = 1.3, dt = 0.01, delta = 0.7;
    const int nt = 48, steps = 40;
    const auto m = build_polar_mesh(R, 2, nt);
    const auto net = network({{"u1"}, {"v1"}, {1.0}, {delta}}, {}, {}, {});
    Integrator integ(m, net, config(dt, 1.0));
    auto s = SimState::initial(m, {m.bulk_zeros()},
                               {sample_surface(m, [](double th) { return 1.0 + std::cos(3 * th); })});
    for (int n = 0; n < steps; ++n) integ.advance(s);
    const double lambda = oracle::circle_eigenvalue(R, nt, 3);
    const double expected = std::pow(1.0 / (1.0 - dt * delta * lambda), steps);
    const auto& theta = m.boundary_nodes();
    EXPECT_NEAR(oracle::cos_amplitude(s.v[0].values, theta, 3), expected, 1e-12);
    for (int j = 0; j < nt; ++j) EXPECT_NEAR(s.v[0][j], 1.0 + expected * std::cos(3 * theta[j]), 1e-12);
}

TEST(Step, CrankNicolsonAmplificationFactor)
{
    const double dt = 0.02;
    const int nt = 32, steps = 25;
    const auto m = build_polar_mesh(1.0, 2, nt);
    auto cfg = config(dt, 1.0);
    cfg.reaction_coupling = ReactionCoupling::strang;
    const auto net = inert();
    Integrator integ(m, net, cfg);
    auto s = SimState::initial(m, {m.bulk_zeros()}, {sample_surface(m, [](double th) { return std::cos(2 * th); })});
    for (int n = 0; n < steps; ++n) integ.advance(s);
    const double l = oracle::circle_eigenvalue(1.0, nt, 2);
    const double expected = std::pow((1.0 + 0.5 * dt * l) / (1.0 - 0.5 * dt * l), steps);
    const auto& theta = m.boundary_nodes();
    EXPECT_NEAR(oracle::cos_amplitude(s.v[0].values, theta, 2), expected, 1e-12);
}

TEST(Step, StrangIsSecondOrderForReactions)
{
    // u' = -u^2 + v-free decay on a uniform field; exact u = 1 / (1 + t).
    const auto m = build_polar_mesh(1.0, 4, 8);
    const auto net = network({{"u1"}, {}, {1.0}, {}}, {{"u1", "-u1^2"}}, {}, {});
    auto err = [&](double dt, ReactionCoupling c) {
        auto cfg = config(dt, 1.0);
        cfg.reaction_coupling = c;
        auto p = problem(m, net, {BulkField(m.num_cells(), 1.0)}, {}, 0.5);
        const auto out = run(p, cfg);
        return std::fabs(out.final_state.u[0][0] - 0.5);
    };
    const double s1 = err(0.1, ReactionCoupling::strang), s2 = err(0.05, ReactionCoupling::strang);
    EXPECT_GE(s1 / s2, 3.5);
    const double e1 = err(0.1, ReactionCoupling::explicit_euler), e2 = err(0.05, ReactionCoupling::explicit_euler);
    EXPECT_GE(e1 / e2, 1.8);
    EXPECT_LT(e1 / e2, 2.2);
}

TEST(Step, QuadraticSourceTracksOdeAndBlowsUp)
{
    const auto m = build_polar_mesh(1.0, 4, 8);
    const auto net = network({{"u1"}, {}, {1.0}, {}}, {{"u1", "u1^2"}}, {}, {});
    auto cfg = config(1e-4, 1.0);
    cfg.blowup_threshold = 1e6;
    auto p = problem(m, net, {BulkField(m.num_cells(), 2.0)}, {}, 0.01);
    p.cert.L = 0.0;
    const auto out = run(p, cfg);
    ASSERT_EQ(out.status, RunStatus::blowup_detected);
    ASSERT_TRUE(out.blowup_time);
    EXPECT_LT(*out.blowup_time, 0.55);
    EXPECT_GT(*out.blowup_time, 0.5);
    for (const auto& r : out.diagnostics) {
        if (r.t > 0.4 + 1e-12) break;
        const double ref = oracle::quadratic_ode(2.0, r.t);
        EXPECT_NEAR(r.species[0].Linf / ref, 1.0, 0.01) << "t = " << r.t;
    }
    EXPECT_GT(out.diagnostics.back().max_linf(), 1e6);
}

TEST(Step, ExchangeConservesMassAndLedger)
{
    const auto m = build_polar_mesh(1.0, 8, 16);
    const auto net = exchange();
    for (auto coupling : {ReactionCoupling::explicit_euler, ReactionCoupling::strang}) {
        auto cfg = config(1e-3, 0.5);
        cfg.reaction_coupling = coupling;
        auto p = problem(m, net, {sample_bulk(m, [](double r, double) { return 1.0 + r * r; })},
                         {sample_surface(m, [](double th) { return 1.0 + 0.5 * std::cos(th); })});
        const auto out = run(p, cfg);
        ASSERT_EQ(out.status, RunStatus::completed);
        for (double mass : out.mass_history) EXPECT_NEAR(mass, out.initial_mass, 1e-10 * (1 + out.initial_mass));
        for (const auto& r : out.diagnostics) EXPECT_NEAR(r.total_mass, r.ledger_mass, 1e-12 * (1 + r.total_mass));
    }
}

TEST(Step, RejectPolicyReportsNegativeCell)
{
    const auto m = build_polar_mesh(1.0, 4, 8);
    const auto net = network({{"u1"}, {}, {1.0}, {}}, {{"u1", "-10*u1"}}, {}, {});
    const auto s0 = SimState::initial(m, {BulkField(m.num_cells(), 1.0)}, {});
    EXPECT_THROW(step(s0, m, net, config(0.2, 1.0)), PositivityError);

    auto cfg = config(0.2, 1.0);
    cfg.positivity_policy = PositivityPolicy::clip;
    const auto s1 = step(s0, m, net, cfg);
    for (double x : s1.u[0].values) EXPECT_EQ(x, 0.0);
    EXPECT_NEAR(s1.total_clipped(), std::numbers::pi, 1e-12);
    EXPECT_NEAR(s1.ledger[0], 0.0, 1e-12);

    cfg.positivity_policy = PositivityPolicy::none;
    const auto s2 = step(s0, m, net, cfg);
    for (double x : s2.u[0].values) EXPECT_NEAR(x, -1.0, 1e-12);
}

TEST(Step, LinearSolverFailureIsReported)
{
    const auto m = build_polar_mesh(1.0, 4, 8);
    auto cfg = config(0.1, 1.0);
    cfg.linear_tol = 1e-300;
    cfg.max_linear_iters = 1;
    std::vector<BulkField> u0 = {sample_bulk(m, [](double r, double th) { return 1.0 + r * std::sin(th); })};
    const auto s0 = SimState::initial(m, u0, {m.surface_zeros()});
    EXPECT_THROW(step(s0, m, inert(), cfg), LinearSolverError);
}

TEST(Step, ThreadCountDoesNotChangeResults)
{
    const auto m = build_polar_mesh(1.0, 8, 16);
    const auto net = network({{"u"}, {"v1", "v2"}, {1.0}, {0.5, 2.0}}, {}, {{"u", "-u*v1 + v2"}},
                             {{"v1", "-u*v1 + v2"}, {"v2", "u*v1 - v2"}});
    std::vector<SimState> finals;
    for (int threads : {1, 2, 3}) {
        auto cfg = config(1e-3, 0.2);
        cfg.threads = threads;
        auto p = problem(m, net, {sample_bulk(m, [](double r, double) { return 1.0 + r; })},
                         {SurfaceField(m.num_nodes(), 1.0), m.surface_zeros()});
        finals.push_back(run(p, cfg).final_state);
    }
    for (std::size_t k = 1; k < finals.size(); ++k) {
        EXPECT_EQ(finals[k].u[0].values, finals[0].u[0].values);
        EXPECT_EQ(finals[k].v[0].values, finals[0].v[0].values);
        EXPECT_EQ(finals[k].v[1].values, finals[0].v[1].values);
        EXPECT_EQ(finals[k].ledger, finals[0].ledger);
    }
}

TEST(Compatibility, HandEvaluatedResiduals)
{
    const auto m = build_polar_mesh(1.0, 4, 8);
    const auto net = network({{"u1"}, {"v1"}, {1.0}, {1.0}}, {}, {{"u1", "k*(v1 - u1)"}}, {}, {{"k", 1.0}});
    const std::vector<BulkField> ones = {BulkField(m.num_cells(), 1.0)};
    const auto balanced = check_compatibility(m, net, ones, {SurfaceField(m.num_nodes(), 1.0)});
    EXPECT_EQ(balanced.worst(), 0.0);
    const auto off = check_compatibility(m, net, ones, {SurfaceField(m.num_nodes(), 2.0)});
    for (double r : off.residual[0].values) EXPECT_DOUBLE_EQ(r, -1.0);
    EXPECT_NEAR(off.l2[0], std::sqrt(2 * std::numbers::pi), 1e-12);

    const auto radial = check_compatibility(m, inert(), {sample_bulk(m, [](double, double th) { return 2 + std::cos(th); })},
                                            {m.surface_zeros()});
    EXPECT_NEAR(radial.worst(), 0.0, 1e-15);
}

TEST(Run, RecordsAtEveryStrideAndSnapshots)
{
    const auto m = build_polar_mesh(1.0, 4, 8);
    auto p = problem(m, exchange(), {BulkField(m.num_cells(), 1.0)}, {SurfaceField(m.num_nodes(), 2.0)}, 0.05);
    p.snapshot_times = {0.1, 0.0};
    const auto out = run(p, config(0.01, 0.3));
    ASSERT_EQ(out.status, RunStatus::completed);
    ASSERT_EQ(out.diagnostics.size(), 7u);
    for (std::size_t k = 0; k < out.diagnostics.size(); ++k) EXPECT_NEAR(out.diagnostics[k].t, 0.05 * k, 1e-12);
    EXPECT_EQ(out.mass_history.size(), 31u);
    ASSERT_EQ(out.snapshots.size(), 2u);
    EXPECT_EQ(out.snapshots[0].requested_t, 0.0);
    EXPECT_NEAR(out.snapshots[1].state.t, 0.1, 1e-12);

    double prev_w = 0.0, prev_z = 0.0;
    for (const auto& r : out.diagnostics) {
        EXPECT_GE(r.W_sup, prev_w);
        EXPECT_GE(r.Z_sup, prev_z);
        prev_w = r.W_sup;
        prev_z = r.Z_sup;
    }
}

TEST(Run, ConfigValidation)
{
    EXPECT_EQ(record_stride(0.05, 1e-3), 50);
    EXPECT_THROW(record_stride(0.0125, 1e-2), std::invalid_argument);
    EXPECT_THROW(record_stride(-1.0, 1e-2), std::invalid_argument);
    auto cfg = config(0.0, 1.0);
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = config(0.1, 1.0);
    cfg.threads = 0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    EXPECT_EQ(config(1e-3, 5.0).num_steps(), 5000);
}
