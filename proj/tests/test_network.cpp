#include <bsrd/network.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace bsrd;

namespace {

SpeciesSet two_by_two()
{
    return {{"u1", "u2"}, {"v1", "v2"}, {1.0, 0.5}, {1.0, 2.0}};
}

SpeciesSet one_by_one()
{
    return {{"u1"}, {"v1"}, {1.0}, {1.0}};
}

Posynomial parse(std::string_view text, const SpeciesSet& s, const ParameterTable& p = {})
{
    return parse_posynomial(text, s, p);
}

} // namespace

TEST(Posynomial, ExchangeTermEvaluates)
{
    const auto s = one_by_one();
    const auto p = parse("2*v1 - 2*u1^1.5", s);
    const double x[] = {4.0, 3.0};
    EXPECT_DOUBLE_EQ(p.evaluate(x), 2.0 * 3.0 - 2.0 * 8.0);
}

TEST(Posynomial, ZeroToTheZeroIsOne)
{
    const auto s = one_by_one();
    const auto p = parse("3*u1^0 + v1^0.5", s);
    const double x[] = {0.0, 0.0};
    EXPECT_EQ(p.evaluate(x), 3.0);
}

TEST(Posynomial, LikeTermsMergeAndCancel)
{
    const auto s = one_by_one();
    EXPECT_TRUE(parse("u1*v1 - v1*u1", s).empty());
    const auto p = parse("u1 + 2*u1 + v1", s);
    ASSERT_EQ(p.terms().size(), 2u);
    EXPECT_EQ(p.terms()[0].coeff, 3.0);
}

TEST(Posynomial, ParenthesesAndIntegerPowersExpand)
{
    const auto s = one_by_one();
    const auto p = parse("(u1 + v1)^2", s);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> d(0.0, 5.0);
    for (int k = 0; k < 50; ++k) {
        const double x[] = {d(rng), d(rng)};
        EXPECT_NEAR(p.evaluate(x), (x[0] + x[1]) * (x[0] + x[1]), 1e-12 * (1 + x[0] + x[1]) * (1 + x[0] + x[1]));
    }
    EXPECT_EQ(p.max_degree(), 2.0);
}

TEST(Posynomial, ParametersResolveInCoefficientsAndExponents)
{
    const auto s = one_by_one();
    const ParameterTable params{{"kappa", 0.5}, {"a", 1.5}};
    const auto p = parse("kappa*(v1 - u1^a)", s, params);
    const double x[] = {4.0, 2.0};
    EXPECT_DOUBLE_EQ(p.evaluate(x), 0.5 * (2.0 - 8.0));
}

TEST(Posynomial, HomogeneityOfMonomials)
{
    // P(lambda x) = lambda^d P(x) for a single-degree posynomial.
    const auto s = two_by_two();
    const auto p = parse("u1^1.5*v2^0.5 + 3*u2*v1 - 0.25*v2^2", s);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> d(0.1, 3.0);
    for (int k = 0; k < 40; ++k) {
        std::vector<double> x = {d(rng), d(rng), d(rng), d(rng)};
        const double lam = d(rng);
        std::vector<double> y = x;
        for (auto& e : y) e *= lam;
        EXPECT_NEAR(p.evaluate(y), oracle::power(lam, 2.0) * p.evaluate(x), 1e-10 * (1.0 + std::fabs(p.evaluate(y))));
    }
}

TEST(Posynomial, AgreesWithExpLogOracle)
{
    const auto s = two_by_two();
    const auto p = parse("1.5*u1^2.5*v1 + u2^0.75 - 4*v2^3", s);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> d(0.0, 4.0);
    for (int k = 0; k < 100; ++k) {
        std::vector<double> x = {d(rng), d(rng), d(rng), d(rng)};
        if (k == 0) x = {0.0, 0.0, 0.0, 0.0};
        const double ref = 1.5 * oracle::power(x[0], 2.5) * x[2] + oracle::power(x[1], 0.75) - 4 * oracle::power(x[3], 3);
        EXPECT_NEAR(p.evaluate(x), ref, 1e-12 * (1.0 + std::fabs(ref)));
    }
}

TEST(Posynomial, PrettyPrintRoundTrips)
{
    const auto s = two_by_two();
    const ParameterTable params{{"k", 0.3}};
    for (const char* text : {"2*v1 - 2*u1^1.5", "k*u1*v1 - u2^0.5*v2^2 + 7", "0", "-(u1 + 0.1)^3",
                             "1e-3*v2^2.25 - 12.5*u1*u2*v1*v2"}) {
        const auto p = parse(text, s, params);
        const auto back = parse(p.to_string(s), s);
        EXPECT_EQ(p, back) << text << " -> " << p.to_string(s);
    }
    EXPECT_EQ(parse("2*v1 - 2*u1^1.5", s).to_string(s), "2*v1 - 2*u1^1.5");
}

TEST(Posynomial, DependsOnTracksUsedVariables)
{
    const auto s = two_by_two();
    const auto p = parse("u1*v2 + 3", s);
    EXPECT_TRUE(p.depends_on(0));
    EXPECT_FALSE(p.depends_on(1));
    EXPECT_FALSE(p.depends_on(2));
    EXPECT_TRUE(p.depends_on(3));
}

TEST(ExpressionParser, ErrorsCarrySourceAndColumn)
{
    const auto s = one_by_one();
    try {
        parse_posynomial("u1 + w9", s, {}, true, "reactions.G.u1");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.source(), "reactions.G.u1");
        EXPECT_EQ(e.column(), 5u);
        EXPECT_NE(std::string(e.what()).find("reactions.G.u1:6"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("w9"), std::string::npos);
    }
}

TEST(ExpressionParser, RejectsMalformedInput)
{
    const auto s = one_by_one();
    const ParameterTable params{{"a", 2.0}, {"neg", -1.0}};
    for (const char* bad : {"u1^-1", "u1^neg", "u1^b", "u1^v1", "(u1 + v1", "u1 +", "1.2.3*u1", "u1 $ v1",
                            "(u1 + v1)^1.5", "(u1 + v1)^65", "", "u1 v1", "(-u1)^0.5"}) {
        EXPECT_THROW(parse_posynomial(bad, s, params), ParseError) << bad;
    }
}

TEST(ExpressionParser, SurfaceSpeciesForbiddenInBulkReactions)
{
    const auto s = one_by_one();
    EXPECT_THROW(parse_posynomial("u1*v1", s, {}, false), ParseError);
    EXPECT_NO_THROW(parse_posynomial("u1^2", s, {}, false));
}

TEST(ExpressionParser, WarnsOnSublinearExponents)
{
    const auto s = one_by_one();
    std::vector<std::string> warnings;
    parse_posynomial("u1^0.5 + v1^2", s, {}, true, "reactions.G.u1", &warnings);
    ASSERT_EQ(warnings.size(), 1u);
    EXPECT_NE(warnings[0].find("reactions.G.u1"), std::string::npos);
}

TEST(ParseNetwork, BuildsAndDefaultsMissingSlots)
{
    NetworkSource src;
    src.species = two_by_two();
    src.parameters = {{"k", 2.0}};
    src.G = {{"u1", "k*v1 - u1"}};
    src.H = {{"v1", "u1 - k*v1"}};
    const auto parsed = parse_network(src);
    const auto& net = parsed.network;
    ASSERT_EQ(net.F.size(), 2u);
    ASSERT_EQ(net.G.size(), 2u);
    ASSERT_EQ(net.H.size(), 2u);
    EXPECT_TRUE(net.F[0].empty());
    EXPECT_TRUE(net.G[1].empty());
    EXPECT_TRUE(net.H[1].empty());

    const double u[] = {1.0, 0.0}, v[] = {3.0, 0.0};
    const auto r = eval_rates(net, u, v);
    EXPECT_DOUBLE_EQ(r.G[0], 5.0);
    EXPECT_DOUBLE_EQ(r.H[0], -5.0);
}

TEST(ParseNetwork, RejectsUnknownKeysAndBadParameters)
{
    NetworkSource src;
    src.species = one_by_one();
    src.G = {{"u7", "u1"}};
    EXPECT_THROW(parse_network(src), ParseError);

    src.G.clear();
    src.parameters = {{"u1", 1.0}};
    EXPECT_THROW(parse_network(src), std::invalid_argument);

    src.parameters = {{"k", std::nan("")}};
    EXPECT_THROW(parse_network(src), std::invalid_argument);

    src.parameters.clear();
    src.F = {{"u1", "v1"}};
    EXPECT_THROW(parse_network(src), ParseError);
}

TEST(SpeciesSet, Validation)
{
    EXPECT_NO_THROW(two_by_two().validate());
    EXPECT_THROW((SpeciesSet{{}, {"v1"}, {}, {1.0}}.validate()), std::invalid_argument);
    EXPECT_THROW((SpeciesSet{{"u1"}, {}, {0.0}, {}}.validate()), std::invalid_argument);
    EXPECT_THROW((SpeciesSet{{"u1"}, {"u1"}, {1.0}, {1.0}}.validate()), std::invalid_argument);
    EXPECT_THROW((SpeciesSet{{"1u"}, {}, {1.0}, {}}.validate()), std::invalid_argument);
    EXPECT_THROW((SpeciesSet{{"u1"}, {"v1"}, {1.0}, {-1.0}}.validate()), std::invalid_argument);
}

TEST(EvalRates, RejectsOutsideTheOrthant)
{
    NetworkSource src;
    src.species = one_by_one();
    const auto net = parse_network(src).network;
    const double bad[] = {-1.0}, ok[] = {1.0}, inf[] = {INFINITY};
    EXPECT_THROW(eval_rates(net, bad, ok), std::domain_error);
    EXPECT_THROW(eval_rates(net, ok, inf), std::domain_error);
    EXPECT_THROW(eval_rates(net, std::span<const double>{}, ok), std::invalid_argument);
}
