/**
 * @file conditions.hpp
 * @brief Structural checks on a reaction network: quasi-positivity, mass
 * control, the intermediate sum condition, the polynomial bound, and the
 * growth-exponent thresholds required for global existence.
 *
 * Checks validate user-supplied certificates. Sampling can only falsify; a
 * report is additionally marked exact when a term-wise domination argument
 * proves the inequality on the whole nonnegative orthant.
 */
#pragma once

#include "network.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace bsrd {

inline constexpr double kCheckTolerance = 1e-9;

struct MassControlCert {
    std::vector<double> alpha;
    std::vector<double> beta;
    double L = 0.0;
    double K = 0.0; // stored, not consumed by any inequality

    static MassControlCert unit(std::size_t m1, std::size_t m2, double L = 0.0)
    {
        return {std::vector<double>(m1, 1.0), std::vector<double>(m2, 1.0), L, 0.0};
    }

    void validate(std::size_t m1, std::size_t m2) const
    {
        if (alpha.size() != m1 || beta.size() != m2)
            throw std::invalid_argument("mass control certificate: dimension mismatch");
        for (double a : alpha)
            if (!(a > 0.0)) throw std::invalid_argument("mass control certificate: alpha must be positive");
        for (double b : beta)
            if (!(b > 0.0)) throw std::invalid_argument("mass control certificate: beta must be positive");
        if (!std::isfinite(L)) throw std::invalid_argument("mass control certificate: L must be finite");
        if (!(K >= 0.0)) throw std::invalid_argument("mass control certificate: K must be nonnegative");
    }
};

struct IntermediateSumCert {
    std::vector<std::vector<double>> A;
    double K1 = 0.0;
    double r_omega = 1.0;
    double r_m = 1.0;
    double mu_m = 1.0;

    static std::vector<std::vector<double>> lower_ones(std::size_t n)
    {
        std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j <= i; ++j) a[i][j] = 1.0;
        return a;
    }

    static std::vector<std::vector<double>> identity(std::size_t n)
    {
        std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
        for (std::size_t i = 0; i < n; ++i) a[i][i] = 1.0;
        return a;
    }

    void validate(std::size_t n) const
    {
        if (A.size() != n) throw std::invalid_argument("intermediate sum certificate: A must be square of size m1+m2");
        for (std::size_t i = 0; i < n; ++i) {
            if (A[i].size() != n)
                throw std::invalid_argument("intermediate sum certificate: A must be square of size m1+m2");
            for (std::size_t j = 0; j < n; ++j) {
                const double a = A[i][j];
                if (!std::isfinite(a)) throw std::invalid_argument("intermediate sum certificate: A must be finite");
                if (j > i && a != 0.0) throw std::invalid_argument("intermediate sum certificate: A is not lower triangular");
                if (j < i && a < 0.0) throw std::invalid_argument("intermediate sum certificate: negative off-diagonal entry");
                if (j == i && !(a > 0.0)) throw std::invalid_argument("intermediate sum certificate: nonpositive diagonal entry");
            }
        }
        if (!(K1 >= 0.0) || !std::isfinite(K1)) throw std::invalid_argument("intermediate sum certificate: K1 must be nonnegative");
        if (!(r_omega >= 1.0) || !(r_m >= 1.0) || !(mu_m >= 1.0))
            throw std::invalid_argument("intermediate sum certificate: exponents must be >= 1");
    }
};

struct CheckReport {
    std::string check;
    bool passed = true;
    bool exact = false;
    double worst_margin = std::numeric_limits<double>::infinity();
    std::vector<double> witness;
    std::size_t samples_used = 0;
    std::vector<std::string> notes;

    void consider(double margin, const std::vector<double>& point)
    {
        if (margin < worst_margin) {
            worst_margin = margin;
            witness = point;
        }
    }

    void finish() { passed = !(worst_margin < -kCheckTolerance); }
};

/// Deterministic sample set on [0, box]^dim: the origin, one point per axis
/// at the box edge, then a Halton sequence. Smaller counts are prefixes of
/// larger ones, so margins can only decrease as the count grows.
struct SamplePlan {
    double box = 10.0;
    std::size_t count = 4096;

    std::vector<std::vector<double>> points(std::size_t dim) const
    {
        if (!(box > 0.0) || !std::isfinite(box)) throw std::invalid_argument("sample plan: box must be positive");
        std::vector<std::vector<double>> pts;
        pts.reserve(count + dim + 1);
        pts.emplace_back(dim, 0.0);
        for (std::size_t k = 0; k < dim; ++k) {
            std::vector<double> p(dim, 0.0);
            p[k] = box;
            pts.push_back(std::move(p));
        }
        const auto primes = first_primes(dim);
        for (std::size_t i = 1; i <= count; ++i) {
            std::vector<double> p(dim);
            for (std::size_t k = 0; k < dim; ++k) p[k] = box * radical_inverse(i, primes[k]);
            pts.push_back(std::move(p));
        }
        return pts;
    }

    static double radical_inverse(std::size_t i, unsigned base)
    {
        double inv = 1.0 / base;
        double f = inv;
        double r = 0.0;
        while (i > 0) {
            r += f * static_cast<double>(i % base);
            i /= base;
            f *= inv;
        }
        return r;
    }

    static std::vector<unsigned> first_primes(std::size_t n)
    {
        std::vector<unsigned> p;
        for (unsigned c = 2; p.size() < n; ++c) {
            bool prime = true;
            for (unsigned q : p) {
                if (q * q > c) break;
                if (c % q == 0) {
                    prime = false;
                    break;
                }
            }
            if (prime) p.push_back(c);
        }
        return p;
    }
};

namespace detail {

/// Upper bound K * (1 + sum_{k in vars} x_k^q), one budget per monomial.
struct PowerSumBound {
    double K;
    double q;
    std::vector<std::size_t> vars;
};

/// Sound sufficient test for P(x) <= K (1 + sum_k x_k^q) on the orthant.
///
/// Route 1: P - K (1 + sum x_k^q) has no positive coefficient.
/// Route 2: every positive term either matches a bound monomial and is charged
/// to it, or has degree <= q over the bound's variables and is charged to
/// every bound monomial (x^e <= 1 + sum_k x_k^q when deg e <= q).
inline bool dominated(const Posynomial& P, const PowerSumBound& b)
{
    const auto n = P.arity();
    Posynomial rhs = Posynomial::constant(n, b.K);
    for (auto k : b.vars) {
        std::vector<double> e(n, 0.0);
        e[k] = b.q;
        Posynomial m(n);
        m.add_term({b.K, std::move(e)});
        rhs += m;
    }
    const auto diff = P + rhs * -1.0;
    if (std::none_of(diff.terms().begin(), diff.terms().end(), [](const Monomial& t) { return t.coeff > 0.0; }))
        return true;

    if (b.K < 0.0) return false;
    double charge_const = 0.0;
    std::vector<double> charge(b.vars.size(), 0.0);
    double charge_all = 0.0;
    for (const auto& t : P.terms()) {
        if (t.coeff <= 0.0) continue;
        const double d = t.degree();
        if (d == 0.0) {
            charge_const += t.coeff;
            continue;
        }
        bool matched = false;
        for (std::size_t s = 0; s < b.vars.size() && !matched; ++s) {
            const auto k = b.vars[s];
            if (t.exponents[k] == b.q && d == b.q) {
                charge[s] += t.coeff;
                matched = true;
            }
        }
        if (matched) continue;
        for (std::size_t k = 0; k < n; ++k)
            if (t.uses(k) && std::find(b.vars.begin(), b.vars.end(), k) == b.vars.end()) return false;
        if (d > b.q) return false;
        charge_all += t.coeff;
    }
    if (charge_const + charge_all > b.K) return false;
    for (double c : charge)
        if (c + charge_all > b.K) return false;
    return true;
}

inline double sum_range(const std::vector<double>& x, std::size_t begin, std::size_t end)
{
    double s = 0.0;
    for (std::size_t k = begin; k < end; ++k) s += x[k];
    return s;
}

inline double power_sum(const std::vector<double>& x, std::size_t begin, std::size_t end, double q)
{
    double s = 0.0;
    for (std::size_t k = begin; k < end; ++k) s += std::pow(x[k], q);
    return s;
}

inline std::vector<std::size_t> iota(std::size_t begin, std::size_t end)
{
    std::vector<std::size_t> v;
    for (std::size_t k = begin; k < end; ++k) v.push_back(k);
    return v;
}

} // namespace detail

/// Each reaction must be nonnegative whenever its own species vanishes.
inline CheckReport check_quasi_positivity(const ReactionNetwork& net, const SamplePlan& plan = {})
{
    const auto m1 = net.species.m1();
    const auto m2 = net.species.m2();
    const auto pts = plan.points(net.species.arity());

    CheckReport rep;
    rep.check = "quasi_positivity";
    rep.samples_used = pts.size();

    // Exact when no negative term survives setting the own species to zero.
    auto restricted_nonneg = [](const Posynomial& p, std::size_t own) {
        return std::all_of(p.terms().begin(), p.terms().end(),
                           [own](const Monomial& t) { return t.coeff >= 0.0 || t.uses(own); });
    };
    bool exact = true;
    for (std::size_t i = 0; i < m1; ++i)
        exact = exact && restricted_nonneg(net.F[i], i) && restricted_nonneg(net.G[i], i);
    for (std::size_t j = 0; j < m2; ++j) exact = exact && restricted_nonneg(net.H[j], m1 + j);

    for (const auto& base : pts) {
        auto x = base;
        for (std::size_t i = 0; i < m1; ++i) {
            const double keep = x[i];
            x[i] = 0.0;
            rep.consider(net.F[i].evaluate(x), x);
            rep.consider(net.G[i].evaluate(x), x);
            x[i] = keep;
        }
        for (std::size_t j = 0; j < m2; ++j) {
            const double keep = x[m1 + j];
            x[m1 + j] = 0.0;
            rep.consider(net.H[j].evaluate(x), x);
            x[m1 + j] = keep;
        }
    }
    rep.finish();
    rep.exact = exact && rep.passed;
    return rep;
}

/// Which boundary inequalities the mass control check imposes.
enum class MassControlForm {
    /// sum alpha_i G_i + sum beta_j H_j <= L (|u| + |v| + 1): the boundary
    /// balance that actually governs total mass.
    combined,
    /// sum alpha_i G_i and sum beta_j H_j bounded separately.
    separate,
};

/// Weighted reaction sums bounded by L (|u| + 1) in the bulk and
/// L (|u| + |v| + 1) on the boundary.
inline CheckReport check_mass_control(const ReactionNetwork& net, const MassControlCert& cert,
                                      const SamplePlan& plan = {},
                                      MassControlForm form = MassControlForm::combined)
{
    const auto m1 = net.species.m1();
    const auto m2 = net.species.m2();
    const auto n = m1 + m2;
    cert.validate(m1, m2);

    Posynomial sf(n), sg(n), sh(n);
    for (std::size_t i = 0; i < m1; ++i) {
        sf += net.F[i] * cert.alpha[i];
        sg += net.G[i] * cert.alpha[i];
    }
    for (std::size_t j = 0; j < m2; ++j) sh += net.H[j] * cert.beta[j];

    std::vector<Posynomial> boundary;
    if (form == MassControlForm::combined) {
        boundary.push_back(sg + sh);
    } else {
        boundary.push_back(sg);
        if (m2 > 0) boundary.push_back(sh);
    }

    CheckReport rep;
    rep.check = "mass_control";
    const auto pts = plan.points(n);
    rep.samples_used = pts.size();
    for (const auto& x : pts) {
        const double su = detail::sum_range(x, 0, m1);
        const double sv = detail::sum_range(x, m1, n);
        rep.consider(cert.L * (su + 1.0) - sf.evaluate(x), x);
        for (const auto& p : boundary) rep.consider(cert.L * (su + sv + 1.0) - p.evaluate(x), x);
    }
    rep.finish();

    bool exact = detail::dominated(sf, {cert.L, 1.0, detail::iota(0, m1)});
    for (const auto& p : boundary) exact = exact && detail::dominated(p, {cert.L, 1.0, detail::iota(0, n)});
    rep.exact = exact && rep.passed;
    if (form == MassControlForm::separate) rep.notes.push_back("boundary sums checked separately");
    if (cert.K != 0.0) rep.notes.push_back("certificate constant K is recorded but not used by any inequality");
    return rep;
}

/// Rows of A [F; 0] and A [G; H] against the growth bounds of the certificate.
inline CheckReport check_intermediate_sum(const ReactionNetwork& net, const IntermediateSumCert& cert,
                                          const SamplePlan& plan = {})
{
    const auto m1 = net.species.m1();
    const auto m2 = net.species.m2();
    const auto n = m1 + m2;
    cert.validate(n);

    std::vector<Posynomial> bulk_rows(n, Posynomial(n));
    std::vector<Posynomial> flux_rows(n, Posynomial(n));
    for (std::size_t row = 0; row < n; ++row) {
        for (std::size_t col = 0; col <= row; ++col) {
            const double a = cert.A[row][col];
            if (a == 0.0) continue;
            if (col < m1) {
                bulk_rows[row] += net.F[col] * a;
                flux_rows[row] += net.G[col] * a;
            } else {
                flux_rows[row] += net.H[col - m1] * a;
            }
        }
    }

    CheckReport rep;
    rep.check = "intermediate_sum";
    const auto pts = plan.points(n);
    rep.samples_used = pts.size();
    for (const auto& x : pts) {
        const double bulk_rhs = cert.K1 * (detail::power_sum(x, 0, m1, cert.r_omega) + 1.0);
        const double su = detail::sum_range(x, 0, m1);
        const double sv = detail::sum_range(x, m1, n);
        const double flux_rhs = cert.K1 * (std::pow(su, cert.r_m) + std::pow(sv, cert.r_m) + 1.0);
        const double surf_rhs = cert.K1 * (std::pow(su, cert.mu_m) + std::pow(sv, cert.mu_m) + 1.0);
        for (std::size_t row = 0; row < n; ++row) {
            rep.consider(bulk_rhs - bulk_rows[row].evaluate(x), x);
            rep.consider((row < m1 ? flux_rhs : surf_rhs) - flux_rows[row].evaluate(x), x);
        }
    }
    rep.finish();

    // |u|^q + |v|^q >= sum_k x_k^q for q >= 1, so the power-sum bound is a
    // valid lower bound of the right-hand side.
    bool exact = true;
    for (std::size_t row = 0; row < n && exact; ++row) {
        exact = detail::dominated(bulk_rows[row], {cert.K1, cert.r_omega, detail::iota(0, m1)})
            && detail::dominated(flux_rows[row], {cert.K1, row < m1 ? cert.r_m : cert.mu_m, detail::iota(0, n)});
    }
    rep.exact = exact && rep.passed;
    return rep;
}

struct PolynomialBound {
    double r = 0.0;
    double K2 = 0.0;
    CheckReport report;
};

/// Constructive growth bound: r is the largest degree of a positive term,
/// K2 the largest per-reaction sum of positive coefficients.
inline PolynomialBound check_polynomial_bound(const ReactionNetwork& net, const SamplePlan& plan = {})
{
    const auto m1 = net.species.m1();
    const auto n = net.species.arity();
    PolynomialBound out;
    bool any = false;
    auto scan = [&](const Posynomial& p) {
        double pos = 0.0;
        for (const auto& t : p.terms()) {
            if (t.coeff <= 0.0) continue;
            any = true;
            pos += t.coeff;
            out.r = std::max(out.r, t.degree());
        }
        out.K2 = std::max(out.K2, pos);
    };
    for (const auto* group : {&net.F, &net.G, &net.H})
        for (const auto& p : *group) scan(p);

    auto& rep = out.report;
    rep.check = "polynomial_bound";
    rep.exact = true;
    if (!any) rep.notes.push_back("no positive terms: r = 0 by convention");
    else if (out.r == 0.0) rep.notes.push_back("only constant positive terms: r = 0");

    const auto pts = plan.points(n);
    rep.samples_used = pts.size();
    for (const auto& x : pts) {
        const double su = detail::sum_range(x, 0, m1);
        const double sv = detail::sum_range(x, m1, n);
        const double bulk_rhs = out.K2 * (std::pow(su, out.r) + 1.0);
        const double mixed_rhs = out.K2 * (std::pow(su, out.r) + std::pow(sv, out.r) + 1.0);
        for (const auto& p : net.F) rep.consider(bulk_rhs - p.evaluate(x), x);
        for (const auto& p : net.G) rep.consider(mixed_rhs - p.evaluate(x), x);
        for (const auto& p : net.H) rep.consider(mixed_rhs - p.evaluate(x), x);
    }
    rep.finish();
    return out;
}

struct GrowthReport {
    int n = 2;
    double r_omega_limit = 0.0;
    double r_m_limit = 0.0;
    double mu_m_limit = 2.0;
    bool r_omega_ok = false;
    bool r_m_ok = false;
    bool mu_m_ok = false;
    std::vector<std::string> notes;

    bool passed() const { return r_omega_ok && r_m_ok && mu_m_ok; }
};

/// 1 <= r_Omega < 1 + 2/n, 1 <= r_M < 1 + 1/n, 1 <= mu_M < 2.
inline GrowthReport check_growth_thresholds(const IntermediateSumCert& cert, int n)
{
    if (n < 2) throw std::invalid_argument("growth thresholds: dimension must be at least 2");
    GrowthReport g;
    g.n = n;
    g.r_omega_limit = 1.0 + 2.0 / n;
    g.r_m_limit = 1.0 + 1.0 / n;
    g.mu_m_limit = 2.0;
    g.r_omega_ok = cert.r_omega >= 1.0 && cert.r_omega < g.r_omega_limit;
    g.r_m_ok = cert.r_m >= 1.0 && cert.r_m < g.r_m_limit;
    g.mu_m_ok = cert.mu_m >= 1.0 && cert.mu_m < g.mu_m_limit;
    if (n < 4)
        g.notes.push_back("dimension-independent mu_M < 2 improves on earlier bounds only for n >= 4; n = "
                          + std::to_string(n) + " is covered by them");
    return g;
}

inline nlohmann::json to_json(const CheckReport& r)
{
    nlohmann::json j;
    j["check"] = r.check;
    j["passed"] = r.passed;
    j["exact"] = r.exact;
    j["worst_margin"] = r.worst_margin;
    j["witness"] = r.witness;
    j["samples_used"] = r.samples_used;
    if (!r.notes.empty()) j["notes"] = r.notes;
    return j;
}

inline nlohmann::json to_json(const GrowthReport& g)
{
    return {{"check", "growth_thresholds"},
            {"passed", g.passed()},
            {"n", g.n},
            {"thresholds", {{"r_Omega", g.r_omega_limit}, {"r_M", g.r_m_limit}, {"mu_M", g.mu_m_limit}}},
            {"r_Omega_ok", g.r_omega_ok},
            {"r_M_ok", g.r_m_ok},
            {"mu_M_ok", g.mu_m_ok},
            {"notes", g.notes}};
}

} // namespace bsrd
