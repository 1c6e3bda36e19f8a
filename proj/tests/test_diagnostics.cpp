#include <bsrd/diagnostics.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace bsrd;

namespace {

constexpr double pi = std::numbers::pi;

SpeciesSet one_by_one() { return {{"u1"}, {"v1"}, {1.0}, {1.0}}; }

DiagnosticsRecord record_with_linf(double t, double linf)
{
    DiagnosticsRecord r;
    r.t = t;
    SpeciesDiagnostics s;
    s.Linf = linf;
    r.species.push_back(s);
    return r;
}

} // namespace

TEST(LpNorm, UnitDiskMeasures)
{
    const auto m = build_polar_mesh(1.0, 16, 32);
    const BulkField one(m.num_cells(), 1.0);
    EXPECT_NEAR(lp_norm(m, one, 1.0), pi, 1e-12);
    EXPECT_EQ(lp_norm(m, one, kInfinity), 1.0);
    EXPECT_NEAR(lp_norm(m, one, 2.0), std::sqrt(pi), 1e-12);

    SurfaceField spike = m.surface_zeros();
    spike[5] = 1.0;
    EXPECT_NEAR(lp_norm(m, spike, 1.0), 2 * pi / 32, 1e-15);
    EXPECT_THROW(lp_norm(m, one, 0.5), std::invalid_argument);
}

TEST(LpNorm, HoelderConsistency)
{
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> d(-2.0, 5.0);
    const auto m = build_polar_mesh(1.7, 9, 14);
    for (int trial = 0; trial < 10; ++trial) {
        BulkField f(m.num_cells());
        for (auto& x : f.values) x = d(rng);
        SurfaceField g(m.num_nodes());
        for (auto& x : g.values) x = d(rng);
        for (double p : {1.5, 2.0, 3.0, 4.0, 7.5}) {
            EXPECT_LE(lp_norm(m, f, 1.0), std::pow(m.area(), 1 - 1 / p) * lp_norm(m, f, p) + 1e-10);
            EXPECT_LE(lp_norm(m, g, 1.0), std::pow(m.perimeter(), 1 - 1 / p) * lp_norm(m, g, p) + 1e-10);
        }
        EXPECT_LE(lp_norm(m, f, 4.0), std::pow(m.area(), 0.25) * lp_norm(m, f, kInfinity) + 1e-10);
    }
}

TEST(MassReport, ZeroFieldsAndWeights)
{
    const auto m = build_polar_mesh(1.0, 4, 8);
    auto s = SimState::initial(m, {m.bulk_zeros()}, {m.surface_zeros()});
    const auto cert = MassControlCert::unit(1, 1);
    const auto r = mass_report(m, s, cert, 0.0);
    EXPECT_EQ(r.total_mass, 0.0);
    EXPECT_EQ(r.envelope_residual, 0.0);

    s = SimState::initial(m, {BulkField(m.num_cells(), 2.0)}, {SurfaceField(m.num_nodes(), 3.0)});
    MassControlCert w = cert;
    w.alpha = {0.5};
    w.beta = {2.0};
    EXPECT_NEAR(total_mass(m, s, w), 0.5 * 2.0 * pi + 2.0 * 3.0 * 2 * pi, 1e-12);
    EXPECT_NEAR(ledger_mass(s, w), total_mass(m, s, w), 1e-12);
}

TEST(MassReport, GronwallEnvelopeForPositiveL)
{
    const auto m = build_polar_mesh(1.0, 4, 8);
    auto s = SimState::initial(m, {BulkField(m.num_cells(), 1.0)}, {SurfaceField(m.num_nodes(), 1.0)});
    s.t = 0.5;
    const auto cert = MassControlCert::unit(1, 1, 2.0);
    const double m0 = total_mass(m, s, cert);
    const double c = pi + 2 * pi;
    EXPECT_NEAR(envelope_offset(m, cert), c, 1e-12);
    const auto r = mass_report(m, s, cert, m0);
    EXPECT_NEAR(r.envelope_residual, m0 - ((m0 + c) * std::exp(1.0) - c), 1e-10);
    EXPECT_LT(r.envelope_residual, 0.0);

    MassControlCert heavy = cert;
    heavy.beta = {3.0};
    EXPECT_NEAR(envelope_offset(m, heavy), 3.0 * c, 1e-12);
}

TEST(TimeIntegralSup, ReadsAccumulatedFields)
{
    const auto m = build_polar_mesh(1.0, 3, 6);
    auto s = SimState::initial(m, {m.bulk_zeros()}, {m.surface_zeros()});
    auto z = time_integral_sup(s);
    EXPECT_EQ(z.W_sup, 0.0);
    EXPECT_EQ(z.W_trace_sup, 0.0);
    EXPECT_EQ(z.Z_sup, 0.0);
    s.W[0][4] = 2.5;
    s.W_trace[0][1] = 1.5;
    s.Z[0][3] = 0.25;
    z = time_integral_sup(s);
    EXPECT_EQ(z.W_sup, 2.5);
    EXPECT_EQ(z.W_trace_sup, 1.5);
    EXPECT_EQ(z.Z_sup, 0.25);
}

TEST(MakeRecord, PerSpeciesColumnsAndTrailingWindow)
{
    const auto m = build_polar_mesh(1.0, 4, 8);
    auto s = SimState::initial(m, {BulkField(m.num_cells(), 2.0)}, {SurfaceField(m.num_nodes(), 0.5)});
    const auto cert = MassControlCert::unit(1, 1);
    const double m0 = total_mass(m, s, cert);
    std::vector<DiagnosticsRecord> history = {record_with_linf(0.0, 9.0), record_with_linf(1.5, 4.0)};
    s.t = 3.0;
    const auto r = make_record(m, one_by_one(), s, cert, m0, 4.0, history);
    ASSERT_EQ(r.species.size(), 2u);
    EXPECT_EQ(r.species[0].kind, FieldKind::bulk);
    EXPECT_EQ(r.species[1].kind, FieldKind::surface);
    EXPECT_NEAR(r.species[0].L1, 2 * pi, 1e-12);
    EXPECT_NEAR(r.species[1].Lp, 0.5 * std::pow(2 * pi, 0.25), 1e-12);
    EXPECT_EQ(r.species[1].Linf, 0.5);
    EXPECT_EQ(r.species[1].W_sup, 0.0);
    EXPECT_EQ(r.window_sup, 4.0); // t = 0 lies outside [1, 3]
    EXPECT_EQ(r.mass_envelope_residual, 0.0);
}

TEST(WindowSups, ConstantTrajectoryGivesEqualSups)
{
    std::vector<DiagnosticsRecord> recs;
    for (int k = 0; k <= 50; ++k) recs.push_back(record_with_linf(0.1 * k, 3.0));
    const auto rep = window_sup_report(recs, 5.0);
    ASSERT_EQ(rep.windows.size(), 4u);
    for (const auto& w : rep.windows) EXPECT_EQ(w.sup, 3.0);
    EXPECT_EQ(rep.uniform_sup, 3.0);
    EXPECT_EQ(rep.max_growth_ratio, 1.0);
    EXPECT_TRUE(rep.nonincreasing_from(0, 0.0));
}

TEST(WindowSups, DecayingTrajectoryAndShortRuns)
{
    std::vector<DiagnosticsRecord> recs;
    for (int k = 0; k <= 60; ++k) recs.push_back(record_with_linf(0.1 * k, std::exp(-0.1 * k) + (k == 25 ? 5.0 : 0.0)));
    const auto rep = window_sup_report(recs, 6.0);
    ASSERT_EQ(rep.windows.size(), 5u);
    EXPECT_EQ(rep.windows[0].tau, 0);
    EXPECT_NEAR(rep.windows[1].sup, 5.0 + std::exp(-2.5), 1e-15);
    EXPECT_FALSE(rep.nonincreasing_from(0, 0.05));
    EXPECT_TRUE(rep.nonincreasing_from(1, 0.0));

    const auto empty = window_sup_report(recs, 1.0);
    EXPECT_TRUE(empty.windows.empty());
    EXPECT_EQ(empty.notes.size(), 1u);
}

TEST(TraceInequality, ConstantFieldOnUnitDisk)
{
    const auto m = build_polar_mesh(1.0, 16, 32);
    const auto r = trace_inequality_terms(m, BulkField(m.num_cells(), 1.0), 2.5);
    EXPECT_NEAR(r.lhs, 2 * pi, 1e-12);
    EXPECT_EQ(r.grad_term, 0.0);
    EXPECT_NEAR(r.bulk_term, pi, 1e-12);
    ASSERT_TRUE(r.fitted_C);
    EXPECT_NEAR(*r.fitted_C, 2.0, 1e-12);
}

TEST(TraceInequality, ZeroFieldIsNotApplicable)
{
    const auto m = build_polar_mesh(1.0, 8, 16);
    const auto r = trace_inequality_report(m, m.bulk_zeros(), 2.5);
    EXPECT_EQ(r.lhs, 0.0);
    EXPECT_FALSE(r.fitted_C);
    EXPECT_FALSE(r.exceeds_calibration);
}

TEST(TraceInequality, RadialRampStableUnderRefinement)
{
    std::vector<double> cs;
    for (int nr : {16, 32, 64}) {
        const auto m = build_polar_mesh(1.0, nr, 2 * nr);
        const auto w = sample_bulk(m, [](double r, double) { return r; });
        const auto rep = trace_inequality_report(m, w, 2.5);
        ASSERT_TRUE(rep.fitted_C);
        EXPECT_FALSE(rep.exceeds_calibration);
        cs.push_back(*rep.fitted_C);
    }
    for (double c : cs) EXPECT_NEAR(c / cs.back(), 1.0, 0.1);
}

TEST(TraceInequality, GradientOfLinearField)
{
    // w = x: face quotients reproduce |grad w| = 1 away from the pole ring.
    const auto m = build_polar_mesh(1.0, 32, 128);
    const auto w = sample_bulk(m, [](double r, double th) { return r * std::cos(th); });
    const auto g = gradient_magnitude(m, w);
    for (int k = 4; k < 28; ++k)
        for (int j = 0; j < 128; ++j) EXPECT_NEAR(g[m.cell_index(k, j)], 1.0, 2e-2);
}

TEST(TraceInequality, RejectsBadInput)
{
    const auto m = build_polar_mesh(1.0, 4, 8);
    EXPECT_THROW(trace_inequality_terms(m, BulkField(m.num_cells(), 1.0), 2.0), std::invalid_argument);
    EXPECT_THROW(trace_inequality_terms(m, BulkField(m.num_cells(), 1.0), 3.0), std::invalid_argument);
    EXPECT_NO_THROW(trace_inequality_terms(m, BulkField(m.num_cells(), 1.0), 2.4, 3));
    EXPECT_THROW(trace_inequality_terms(m, BulkField(m.num_cells(), -1.0), 2.5), std::invalid_argument);
}
