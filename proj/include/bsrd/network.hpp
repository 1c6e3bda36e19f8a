/**
 * @file network.hpp
 * @brief Posynomial reaction terms F (bulk), G (boundary flux), H (surface).
 *
 * A posynomial here is a signed sum of monomials c * prod x_k^{e_k} with real
 * exponents e_k >= 0 over the species vector x = (u_1..u_m1, v_1..v_m2),
 * evaluated on the closed nonnegative orthant with 0^0 = 1.
 */
#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

namespace bsrd {

/// Shortest decimal string that parses back to the same double.
inline std::string format_double(double x)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, ptr);
}

struct SpeciesSet {
    std::vector<std::string> bulk_names;
    std::vector<std::string> surface_names;
    std::vector<double> d;     ///< bulk diffusivities
    std::vector<double> delta; ///< surface diffusivities

    std::size_t m1() const { return bulk_names.size(); }
    std::size_t m2() const { return surface_names.size(); }
    std::size_t arity() const { return m1() + m2(); }

    /// Index into the combined (u, v) vector, or npos.
    std::size_t index_of(std::string_view name) const
    {
        for (std::size_t i = 0; i < bulk_names.size(); ++i)
            if (bulk_names[i] == name) return i;
        for (std::size_t j = 0; j < surface_names.size(); ++j)
            if (surface_names[j] == name) return m1() + j;
        return npos;
    }

    const std::string& name(std::size_t idx) const
    {
        return idx < m1() ? bulk_names[idx] : surface_names[idx - m1()];
    }

    void validate() const
    {
        if (m1() < 1) throw std::invalid_argument("species: at least one bulk species is required");
        if (d.size() != m1()) throw std::invalid_argument("species: one diffusivity per bulk species");
        if (delta.size() != m2()) throw std::invalid_argument("species: one diffusivity per surface species");
        for (double x : d)
            if (!(x > 0.0) || !std::isfinite(x)) throw std::invalid_argument("species: bulk diffusivity must be positive");
        for (double x : delta)
            if (!(x > 0.0) || !std::isfinite(x)) throw std::invalid_argument("species: surface diffusivity must be positive");
        std::vector<std::string> all = bulk_names;
        all.insert(all.end(), surface_names.begin(), surface_names.end());
        for (const auto& n : all)
            if (!is_identifier(n)) throw std::invalid_argument("species: invalid name '" + n + "'");
        std::sort(all.begin(), all.end());
        if (std::adjacent_find(all.begin(), all.end()) != all.end())
            throw std::invalid_argument("species: names must be unique");
    }

    static bool is_identifier(std::string_view s)
    {
        if (s.empty()) return false;
        auto alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
        auto digit = [](char c) { return c >= '0' && c <= '9'; };
        if (!alpha(s[0])) return false;
        return std::all_of(s.begin() + 1, s.end(), [&](char c) { return alpha(c) || digit(c); });
    }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

struct Monomial {
    double coeff = 0.0;
    std::vector<double> exponents;

    double degree() const
    {
        double s = 0.0;
        for (double e : exponents) s += e;
        return s;
    }

    bool uses(std::size_t k) const { return exponents[k] != 0.0; }

    double evaluate(std::span<const double> x) const
    {
        double p = coeff;
        for (std::size_t k = 0; k < exponents.size(); ++k) {
            const double e = exponents[k];
            if (e == 0.0) continue;
            if (e == 1.0)
                p *= x[k];
            else if (e == 2.0)
                p *= x[k] * x[k];
            else
                p *= std::pow(x[k], e);
        }
        return p;
    }
};

class Posynomial {
public:
    Posynomial() = default;
    explicit Posynomial(std::size_t arity) : arity_(arity) {}

    static Posynomial constant(std::size_t arity, double c)
    {
        Posynomial p(arity);
        p.add_term({c, std::vector<double>(arity, 0.0)});
        return p;
    }

    static Posynomial variable(std::size_t arity, std::size_t k)
    {
        Posynomial p(arity);
        std::vector<double> e(arity, 0.0);
        e[k] = 1.0;
        p.add_term({1.0, std::move(e)});
        return p;
    }

    std::size_t arity() const { return arity_; }
    const std::vector<Monomial>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }

    /// Adds a term, merging with an existing term of identical exponents.
    /// Merged terms keep the position of their first occurrence; terms whose
    /// coefficient cancels to zero are removed.
    void add_term(Monomial m)
    {
        if (m.exponents.size() != arity_) throw std::invalid_argument("posynomial: term arity mismatch");
        for (double e : m.exponents)
            if (!(e >= 0.0) || !std::isfinite(e)) throw std::invalid_argument("posynomial: exponents must be finite and nonnegative");
        if (!std::isfinite(m.coeff)) throw std::invalid_argument("posynomial: coefficient must be finite");
        for (auto it = terms_.begin(); it != terms_.end(); ++it) {
            if (it->exponents == m.exponents) {
                it->coeff += m.coeff;
                if (it->coeff == 0.0) terms_.erase(it);
                return;
            }
        }
        if (m.coeff != 0.0) terms_.push_back(std::move(m));
    }

    Posynomial& operator+=(const Posynomial& o)
    {
        check_arity(o);
        for (const auto& t : o.terms_) add_term(t);
        return *this;
    }

    Posynomial& operator*=(double s)
    {
        if (s == 0.0) {
            terms_.clear();
            return *this;
        }
        for (auto& t : terms_) t.coeff *= s;
        return *this;
    }

    friend Posynomial operator+(Posynomial a, const Posynomial& b) { return a += b; }
    friend Posynomial operator*(Posynomial a, double s) { return a *= s; }
    friend Posynomial operator*(double s, Posynomial a) { return a *= s; }

    friend Posynomial operator*(const Posynomial& a, const Posynomial& b)
    {
        a.check_arity(b);
        Posynomial out(a.arity_);
        for (const auto& ta : a.terms_) {
            for (const auto& tb : b.terms_) {
                Monomial m{ta.coeff * tb.coeff, ta.exponents};
                for (std::size_t k = 0; k < m.exponents.size(); ++k) m.exponents[k] += tb.exponents[k];
                out.add_term(std::move(m));
            }
        }
        return out;
    }

    /// Sum of terms in parse order; fixed order keeps results bit-stable.
    double evaluate(std::span<const double> x) const
    {
        double s = 0.0;
        for (const auto& t : terms_) s += t.evaluate(x);
        return s;
    }

    double max_degree() const
    {
        double d = 0.0;
        for (const auto& t : terms_) d = std::max(d, t.degree());
        return d;
    }

    bool depends_on(std::size_t k) const
    {
        return std::any_of(terms_.begin(), terms_.end(), [k](const Monomial& t) { return t.uses(k); });
    }

    /// Renders in the configuration grammar, e.g. "2*v1 - 2*u1^1.5".
    std::string to_string(const SpeciesSet& species) const
    {
        if (terms_.empty()) return "0";
        std::string s;
        for (std::size_t i = 0; i < terms_.size(); ++i) {
            const auto& t = terms_[i];
            const bool neg = std::signbit(t.coeff);
            if (i == 0)
                s += neg ? "-" : "";
            else
                s += neg ? " - " : " + ";
            s += format_double(std::fabs(t.coeff));
            for (std::size_t k = 0; k < t.exponents.size(); ++k) {
                if (t.exponents[k] == 0.0) continue;
                s += "*" + species.name(k);
                if (t.exponents[k] != 1.0) s += "^" + format_double(t.exponents[k]);
            }
        }
        return s;
    }

    friend bool operator==(const Posynomial& a, const Posynomial& b)
    {
        if (a.arity_ != b.arity_ || a.terms_.size() != b.terms_.size()) return false;
        for (std::size_t i = 0; i < a.terms_.size(); ++i)
            if (a.terms_[i].coeff != b.terms_[i].coeff || a.terms_[i].exponents != b.terms_[i].exponents) return false;
        return true;
    }

private:
    void check_arity(const Posynomial& o) const
    {
        if (o.arity_ != arity_) throw std::invalid_argument("posynomial: arity mismatch");
    }

    std::size_t arity_ = 0;
    std::vector<Monomial> terms_;
};

struct ReactionNetwork {
    SpeciesSet species;
    std::vector<Posynomial> F; ///< bulk reactions, u only
    std::vector<Posynomial> G; ///< boundary flux d_i du_i/dnu
    std::vector<Posynomial> H; ///< surface reactions

    void validate() const
    {
        species.validate();
        const auto n = species.arity();
        if (F.size() != species.m1() || G.size() != species.m1() || H.size() != species.m2())
            throw std::invalid_argument("network: reaction count does not match species count");
        for (const auto* group : {&F, &G, &H})
            for (const auto& p : *group)
                if (p.arity() != n) throw std::invalid_argument("network: reaction arity mismatch");
        for (const auto& p : F)
            for (std::size_t k = species.m1(); k < n; ++k)
                if (p.depends_on(k)) throw std::invalid_argument("network: bulk reaction F depends on surface species");
    }
};

// ---------------------------------------------------------------------------
// Expression grammar
//
//   expr    := ['+'|'-'] term (('+'|'-') term)*
//   term    := power ('*' power)*
//   power   := primary ['^' exponent]
//   primary := number | name | '(' expr ')'
//   exponent:= number | parameter
//
// A power of a multi-term group needs a nonnegative integer exponent.
// ---------------------------------------------------------------------------

class ParseError : public std::runtime_error {
public:
    ParseError(std::string source, std::size_t column, const std::string& msg)
        : std::runtime_error(source + ":" + std::to_string(column + 1) + ": " + msg),
          source_(std::move(source)), column_(column)
    {}

    const std::string& source() const { return source_; }
    /// Zero-based column in the expression text.
    std::size_t column() const { return column_; }

private:
    std::string source_;
    std::size_t column_;
};

using ParameterTable = std::map<std::string, double, std::less<>>;

namespace detail {

class ExpressionParser {
public:
    ExpressionParser(std::string_view text, const SpeciesSet& species, const ParameterTable& params,
                     bool allow_surface, std::string source, std::vector<std::string>* warnings)
        : text_(text), species_(species), params_(params), allow_surface_(allow_surface),
          source_(std::move(source)), warnings_(warnings)
    {}

    Posynomial parse()
    {
        auto p = expr();
        skip_ws();
        if (pos_ != text_.size()) fail(pos_, std::string("unexpected '") + text_[pos_] + "'");
        return p;
    }

private:
    Posynomial expr()
    {
        skip_ws();
        double sign = 1.0;
        if (peek() == '+' || peek() == '-') {
            sign = peek() == '-' ? -1.0 : 1.0;
            ++pos_;
        }
        Posynomial acc = term() * sign;
        for (;;) {
            skip_ws();
            const char c = peek();
            if (c != '+' && c != '-') break;
            ++pos_;
            auto t = term();
            acc += c == '-' ? t * -1.0 : t;
        }
        return acc;
    }

    Posynomial term()
    {
        Posynomial acc = power();
        for (;;) {
            skip_ws();
            if (peek() != '*') break;
            ++pos_;
            acc = acc * power();
        }
        return acc;
    }

    Posynomial power()
    {
        skip_ws();
        const std::size_t at = pos_;
        Posynomial base = primary();
        skip_ws();
        if (peek() != '^') return base;
        ++pos_;
        skip_ws();
        const std::size_t eat = pos_;
        const double e = exponent();
        if (e < 0.0) fail(eat, "negative exponent " + format_double(e));
        return raise(base, e, at, eat);
    }

    Posynomial primary()
    {
        skip_ws();
        const std::size_t at = pos_;
        const char c = peek();
        if (c == '(') {
            ++pos_;
            auto p = expr();
            skip_ws();
            if (peek() != ')') fail(pos_, "expected ')'");
            ++pos_;
            return p;
        }
        if (is_digit(c) || c == '.') return Posynomial::constant(species_.arity(), number());
        if (is_alpha(c)) {
            const auto name = identifier();
            const auto idx = species_.index_of(name);
            if (idx != SpeciesSet::npos) {
                if (!allow_surface_ && idx >= species_.m1())
                    fail(at, "surface species '" + std::string(name) + "' not allowed in a bulk reaction");
                return Posynomial::variable(species_.arity(), idx);
            }
            if (auto it = params_.find(name); it != params_.end())
                return Posynomial::constant(species_.arity(), it->second);
            fail(at, "unknown species or parameter '" + std::string(name) + "'");
        }
        if (c == '\0') fail(at, "unexpected end of expression");
        fail(at, std::string("unexpected '") + c + "'");
    }

    double exponent()
    {
        const std::size_t at = pos_;
        double sign = 1.0;
        if (peek() == '-') {
            sign = -1.0;
            ++pos_;
            skip_ws();
        }
        const char c = peek();
        if (is_digit(c) || c == '.') return sign * number();
        if (is_alpha(c)) {
            const auto name = identifier();
            if (auto it = params_.find(name); it != params_.end()) return sign * it->second;
            if (species_.index_of(name) != SpeciesSet::npos)
                fail(at, "exponent must be a literal or parameter, not species '" + std::string(name) + "'");
            fail(at, "unresolved parameter '" + std::string(name) + "'");
        }
        fail(at, "expected exponent");
    }

    Posynomial raise(const Posynomial& base, double e, std::size_t at, std::size_t eat)
    {
        const auto n = species_.arity();
        if (!std::isfinite(e)) fail(eat, "exponent must be finite");
        if (base.empty()) return e == 0.0 ? Posynomial::constant(n, 1.0) : Posynomial(n);
        if (base.terms().size() == 1) {
            const auto& t = base.terms()[0];
            const bool integral = std::floor(e) == e;
            if (t.coeff < 0.0 && !integral) fail(at, "negative base raised to a non-integer power");
            Monomial m{std::pow(t.coeff, e), t.exponents};
            for (auto& x : m.exponents) x *= e;
            for (double x : m.exponents)
                if (x > 0.0 && x < 1.0 && warnings_)
                    warnings_->push_back(source_ + ": exponent " + format_double(x)
                                         + " in (0,1) is not locally Lipschitz at zero");
            Posynomial p(n);
            p.add_term(std::move(m));
            return p;
        }
        if (std::floor(e) != e || e > 64.0) fail(eat, "a sum may only be raised to a small nonnegative integer power");
        Posynomial acc = Posynomial::constant(n, 1.0);
        for (int i = 0; i < static_cast<int>(e); ++i) acc = acc * base;
        return acc;
    }

    double number()
    {
        const std::size_t at = pos_;
        std::size_t end = pos_;
        while (end < text_.size() && (is_digit(text_[end]) || text_[end] == '.')) ++end;
        if (end < text_.size() && (text_[end] == 'e' || text_[end] == 'E')) {
            std::size_t k = end + 1;
            if (k < text_.size() && (text_[k] == '+' || text_[k] == '-')) ++k;
            if (k < text_.size() && is_digit(text_[k])) {
                end = k;
                while (end < text_.size() && is_digit(text_[end])) ++end;
            }
        }
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(text_.data() + at, text_.data() + end, v);
        if (ec != std::errc{} || ptr != text_.data() + end) fail(at, "malformed number");
        pos_ = end;
        return v;
    }

    std::string_view identifier()
    {
        const std::size_t at = pos_;
        while (pos_ < text_.size() && (is_alpha(text_[pos_]) || is_digit(text_[pos_]))) ++pos_;
        return text_.substr(at, pos_ - at);
    }

    void skip_ws()
    {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n')) ++pos_;
    }

    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
    static bool is_digit(char c) { return c >= '0' && c <= '9'; }
    static bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }

    [[noreturn]] void fail(std::size_t at, const std::string& msg) const { throw ParseError(source_, at, msg); }

    std::string_view text_;
    const SpeciesSet& species_;
    const ParameterTable& params_;
    bool allow_surface_;
    std::string source_;
    std::vector<std::string>* warnings_;
    std::size_t pos_ = 0;
};

} // namespace detail

/// Parses one expression. `source` names the expression in error messages.
inline Posynomial parse_posynomial(std::string_view text, const SpeciesSet& species,
                                   const ParameterTable& params, bool allow_surface = true,
                                   std::string source = "<expr>",
                                   std::vector<std::string>* warnings = nullptr)
{
    return detail::ExpressionParser(text, species, params, allow_surface, std::move(source), warnings).parse();
}

/// Expression text for every reaction slot, keyed by species name.
struct NetworkSource {
    SpeciesSet species;
    ParameterTable parameters;
    std::map<std::string, std::string> F;
    std::map<std::string, std::string> G;
    std::map<std::string, std::string> H;
};

struct ParsedNetwork {
    ReactionNetwork network;
    std::vector<std::string> warnings;
};

inline ParsedNetwork parse_network(const NetworkSource& src)
{
    src.species.validate();
    for (const auto& [name, value] : src.parameters) {
        if (!SpeciesSet::is_identifier(name)) throw std::invalid_argument("parameter: invalid name '" + name + "'");
        if (src.species.index_of(name) != SpeciesSet::npos)
            throw std::invalid_argument("parameter '" + name + "' shadows a species name");
        if (!std::isfinite(value)) throw std::invalid_argument("parameter '" + name + "' is not finite");
    }

    auto check_keys = [&](const std::map<std::string, std::string>& m, const std::vector<std::string>& names,
                          const char* group) {
        for (const auto& [key, text] : m)
            if (std::find(names.begin(), names.end(), key) == names.end())
                throw ParseError(std::string("reactions.") + group + "." + key, 0,
                                 "unknown species name '" + key + "'");
    };
    check_keys(src.F, src.species.bulk_names, "F");
    check_keys(src.G, src.species.bulk_names, "G");
    check_keys(src.H, src.species.surface_names, "H");

    ParsedNetwork out;
    out.network.species = src.species;
    auto parse_group = [&](const std::map<std::string, std::string>& m, const std::vector<std::string>& names,
                           const char* group, bool allow_surface, std::vector<Posynomial>& dst) {
        for (const auto& name : names) {
            const auto it = m.find(name);
            const std::string text = it == m.end() ? "0" : it->second;
            dst.push_back(parse_posynomial(text, src.species, src.parameters, allow_surface,
                                           std::string("reactions.") + group + "." + name, &out.warnings));
        }
    };
    parse_group(src.F, src.species.bulk_names, "F", false, out.network.F);
    parse_group(src.G, src.species.bulk_names, "G", true, out.network.G);
    parse_group(src.H, src.species.surface_names, "H", true, out.network.H);
    out.network.validate();
    return out;
}

struct Rates {
    std::vector<double> F;
    std::vector<double> G;
    std::vector<double> H;
};

/// Evaluates every reaction at one point (u, v) of the nonnegative orthant.
inline Rates eval_rates(const ReactionNetwork& net, std::span<const double> u, std::span<const double> v)
{
    const auto m1 = net.species.m1();
    const auto m2 = net.species.m2();
    if (u.size() != m1 || v.size() != m2) throw std::invalid_argument("eval_rates: input dimension mismatch");
    std::vector<double> x;
    x.reserve(m1 + m2);
    for (double a : u) x.push_back(a);
    for (double a : v) x.push_back(a);
    for (std::size_t k = 0; k < x.size(); ++k)
        if (!(x[k] >= 0.0) || !std::isfinite(x[k]))
            throw std::domain_error("eval_rates: species '" + net.species.name(k)
                                    + "' is negative or non-finite (" + format_double(x[k]) + ")");
    Rates r;
    for (const auto& p : net.F) r.F.push_back(p.evaluate(x));
    for (const auto& p : net.G) r.G.push_back(p.evaluate(x));
    for (const auto& p : net.H) r.H.push_back(p.evaluate(x));
    return r;
}

} // namespace bsrd
