#pragma once

#include "sfpas/rational.hpp"

#include <bit>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace sfpas::invariants {

/// Genus limit for explicit exterior-algebra expansion.
constexpr int max_genus = 20;

/// Integer class in the exterior algebra on H^1 of a genus-g surface.
/// Generators are numbered a_1 = 0, b_1 = 1, a_2 = 2, b_2 = 3, ...; a
/// monomial is the bitmask of its generators wedged in increasing order.
class ExteriorClass {
public:
    using Mask = std::uint64_t;

    explicit ExteriorClass(int g = 0) : g_(g) { check_genus(g); }

    static ExteriorClass one(int g) { return monomial(g, 0, 1); }

    static ExteriorClass monomial(int g, Mask mask, BigInt coeff) {
        ExteriorClass c(g);
        if (mask >> (2 * g)) throw InvalidInput("monomial uses a generator beyond genus " + std::to_string(g));
        c.add_term(mask, std::move(coeff));
        return c;
    }

    /// kind 'a' or 'b', j in 1..g.
    static ExteriorClass generator(int g, char kind, int j) { return monomial(g, Mask{1} << generator_index(g, kind, j), 1); }

    static ExteriorClass top(int g) { return monomial(g, full_mask(g), 1); }

    static int generator_index(int g, char kind, int j) {
        if ((kind != 'a' && kind != 'b') || j < 1 || j > g)
            throw InvalidInput(std::string("no generator ") + kind + std::to_string(j) + " in genus " + std::to_string(g));
        return 2 * (j - 1) + (kind == 'b' ? 1 : 0);
    }

    static std::string generator_name(int index) {
        return std::string(index % 2 ? "b" : "a") + std::to_string(index / 2 + 1);
    }

    static Mask full_mask(int g) { return g == 0 ? 0 : (~Mask{0} >> (64 - 2 * g)); }

    int genus() const { return g_; }
    const std::map<Mask, BigInt>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    BigInt coefficient(Mask mask) const {
        auto it = terms_.find(mask);
        return it == terms_.end() ? BigInt(0) : it->second;
    }

    /// Pairing with the orientation class: coefficient of a1 b1 ... ag bg.
    BigInt top_coefficient() const { return coefficient(full_mask(g_)); }

    /// Degree if homogeneous, -1 for the zero class or mixed degrees.
    int homogeneous_degree() const {
        int deg = -1;
        for (const auto& [mask, c] : terms_) {
            const int d = std::popcount(mask);
            if (deg >= 0 && d != deg) return -1;
            deg = d;
        }
        return deg;
    }

    bool has_odd_part() const {
        for (const auto& [mask, c] : terms_)
            if (std::popcount(mask) % 2) return true;
        return false;
    }

    void add_term(Mask mask, BigInt coeff) {
        if (coeff == 0) return;
        auto [it, inserted] = terms_.try_emplace(mask, 0);
        it->second += coeff;
        if (it->second == 0) terms_.erase(it);
    }

    ExteriorClass& operator+=(const ExteriorClass& o) {
        check_same_genus(o);
        for (const auto& [mask, c] : o.terms_) add_term(mask, c);
        return *this;
    }
    friend ExteriorClass operator+(ExteriorClass x, const ExteriorClass& y) { return x += y; }

    friend ExteriorClass operator*(const BigInt& s, ExteriorClass x) {
        if (s == 0) return ExteriorClass(x.g_);
        for (auto& [mask, c] : x.terms_) c *= s;
        return x;
    }

    friend bool operator==(const ExteriorClass&, const ExteriorClass&) = default;

    /// Sign of m1 ^ m2 relative to the sorted monomial: (-1)^(inversions).
    static int merge_sign(Mask m1, Mask m2) {
        int inversions = 0;
        for (Mask rest = m1; rest; rest &= rest - 1) {
            const int i = std::countr_zero(rest);
            inversions += std::popcount(m2 & ((Mask{1} << i) - 1));
        }
        return inversions % 2 ? -1 : 1;
    }

    friend ExteriorClass wedge(const ExteriorClass& x, const ExteriorClass& y) {
        x.check_same_genus(y);
        ExteriorClass out(x.g_);
        for (const auto& [m1, c1] : x.terms_)
            for (const auto& [m2, c2] : y.terms_) {
                if (m1 & m2) continue;
                out.add_term(m1 | m2, merge_sign(m1, m2) * c1 * c2);
            }
        return out;
    }

    void check_same_genus(const ExteriorClass& o) const {
        if (g_ != o.g_)
            throw InvalidInput("genus mismatch: " + std::to_string(g_) + " vs " + std::to_string(o.g_));
    }

private:
    static void check_genus(int g) {
        if (g < 0) throw InvalidInput("genus must be nonnegative");
        if (g > max_genus) throw LimitExceeded("genus above " + std::to_string(max_genus) + " is not supported");
    }

    int g_;
    std::map<Mask, BigInt> terms_;
};

/// Theta^i / i! for Theta = sum_j a_j ^ b_j: one term per i-subset of
/// {1..g}, all with coefficient 1. Zero for i > g.
inline ExteriorClass theta_div_factorial(int g, int i) {
    ExteriorClass out(g);
    if (i < 0) throw InvalidInput("theta power must be nonnegative");
    if (i > g) return out;
    using Mask = ExteriorClass::Mask;
    // Iterate i-subsets of {0..g-1} as bitmasks (Gosper's hack).
    if (i == 0) {
        out.add_term(0, 1);
        return out;
    }
    for (Mask s = (Mask{1} << i) - 1; s < (Mask{1} << g);) {
        Mask mono = 0;
        for (Mask rest = s; rest; rest &= rest - 1) mono |= Mask{3} << (2 * std::countr_zero(rest));
        out.add_term(mono, 1);
        const Mask c = s & (~s + 1), r = s + c;
        s = (((r ^ s) >> 2) / c) | r;
    }
    return out;
}

/// Abelian case r = 1: d0 - r0 d + (r0 - 1)(1 - g).
inline BigInt expected_dimension_abelian(long r0, long d, long d0, long g) {
    return BigInt(d0) - BigInt(r0) * d + BigInt(r0 - 1) * (1 - g);
}

/// General rank: r d0 - r0 d + r (r - r0)(g - 1).
inline BigInt expected_dimension_general(long r, long r0, long d, long d0, long g) {
    return BigInt(r) * d0 - BigInt(r0) * d + BigInt(r) * (r - r0) * (g - 1);
}

inline BigInt expected_dimension(long r, long r0, long d, long d0, long g) {
    if (r < 1 || r0 < 1) throw InvalidInput("ranks must be at least 1");
    const BigInt v = expected_dimension_general(r, r0, d, d0, g);
    if (r == 1 && v != expected_dimension_abelian(r0, d, d0, g))
        throw std::logic_error("expected dimension formulas disagree at rank 1");
    return v;
}

enum class ThresholdSide { Above, Below };

inline std::string to_string(ThresholdSide s) { return s == ThresholdSide::Above ? "above" : "below"; }

struct AbelianProblem {
    int g = 0;
    long r0 = 1;
    long d = 0;
    long d0 = 0;
    ThresholdSide side = ThresholdSide::Above;

    void validate() const {
        if (g < 0) throw InvalidInput("genus must be nonnegative");
        if (r0 < 1) throw InvalidInput("r0 must be at least 1");
    }

    BigInt expected_dim() const { return expected_dimension(1, r0, d, d0, g); }
};

struct GgwTerm {
    int i = 0;
    BigInt contribution;  // r0^i <Theta^i/i! ^ l, top>
};

struct GgwExpansion {
    BigInt v;
    int i_min = 0;
    std::vector<GgwTerm> terms;
    BigInt value;
    bool experimental = false;  // l has odd-degree parts
};

/// Zero below the threshold. Above it, the top coefficient of
///   sum_{i = max(0, g - v)}^{g} r0^i Theta^i/i! ^ l.
/// A homogeneous l of degree k meets the top degree only at i = g - k/2.
inline GgwExpansion ggw_expansion(const AbelianProblem& p, const ExteriorClass& l) {
    p.validate();
    if (l.genus() != p.g) throw InvalidInput("class genus " + std::to_string(l.genus()) + " does not match g = " + std::to_string(p.g));
    GgwExpansion out;
    out.v = p.expected_dim();
    out.experimental = l.has_odd_part();
    if (p.side == ThresholdSide::Below) return out;
    const BigInt lower = BigInt(p.g) - out.v;
    out.i_min = lower > 0 ? static_cast<int>(lower) : 0;

    std::vector<int> indices;
    const int k = l.homogeneous_degree();
    if (k >= 0) {
        if (k % 2 == 0 && k / 2 <= p.g && p.g - k / 2 >= out.i_min) indices.push_back(p.g - k / 2);
    } else {
        for (int i = out.i_min; i <= p.g; ++i) indices.push_back(i);
    }
    for (int i : indices) {
        const BigInt c = boost::multiprecision::pow(BigInt(p.r0), static_cast<unsigned>(i)) *
                         wedge(theta_div_factorial(p.g, i), l).top_coefficient();
        out.terms.push_back({i, c});
        out.value += c;
    }
    return out;
}

inline BigInt ggw_abelian(const AbelianProblem& p, const ExteriorClass& l) { return ggw_expansion(p, l).value; }

/// Number of points of the zero-dimensional abelian quotient: r0^g.
/// Cross-checked against the invariant at v = 0 with l = 1.
inline BigInt quot_count(int g, long r0) {
    if (g < 0) throw InvalidInput("genus must be nonnegative");
    if (r0 < 1) throw InvalidInput("r0 must be at least 1");
    const BigInt count = boost::multiprecision::pow(BigInt(r0), static_cast<unsigned>(g));
    if (g <= max_genus) {
        // d = 0, d0 = (r0 - 1)(g - 1) gives v = 0.
        const AbelianProblem p{g, r0, 0, (r0 - 1) * (g - 1), ThresholdSide::Above};
        if (p.expected_dim() != 0 || ggw_abelian(p, ExteriorClass::one(g)) != count)
            throw std::logic_error("quot count disagrees with the invariant at v = 0");
    }
    return count;
}

enum class ClassKind { U, V, H1 };

inline ClassKind parse_class_kind(const std::string& s) {
    if (s == "u") return ClassKind::U;
    if (s == "v") return ClassKind::V;
    if (s == "h1" || s == "H1") return ClassKind::H1;
    throw InvalidInput("unknown class kind '" + s + "' (expected u, v or h1)");
}

/// Degrees of the generators of the tautological algebra:
/// u_i (1 <= i <= r) in degree 2i, v_j (2 <= j <= r) in degree 2j - 2,
/// the H_1 band l (1 <= l <= r) in degree 2l - 1.
inline int algebra_degree(int r, ClassKind kind, int index) {
    if (r < 1) throw InvalidInput("rank must be at least 1");
    const int lo = kind == ClassKind::V ? 2 : 1;
    if (index < lo || index > r)
        throw InvalidInput("index " + std::to_string(index) + " outside " + std::to_string(lo) + ".." + std::to_string(r));
    switch (kind) {
    case ClassKind::U: return 2 * index;
    case ClassKind::V: return 2 * index - 2;
    case ClassKind::H1: return 2 * index - 1;
    }
    return 0;
}

/// Parses "a1^b1^a2" style monomials; "1" is the unit.
inline ExteriorClass parse_monomial(int g, const std::string& text, BigInt coeff = 1) {
    if (text == "1" || text.empty()) return ExteriorClass::monomial(g, 0, std::move(coeff));
    ExteriorClass out = ExteriorClass::monomial(g, 0, std::move(coeff));
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t end = std::min(text.find('^', pos), text.size());
        const std::string tok = text.substr(pos, end - pos);
        if (tok.size() < 2) throw InvalidInput("bad generator '" + tok + "'");
        int j = 0;
        try {
            std::size_t used = 0;
            j = std::stoi(tok.substr(1), &used);
            if (used != tok.size() - 1) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw InvalidInput("bad generator '" + tok + "'");
        }
        out = wedge(out, ExteriorClass::generator(g, tok[0], j));
        pos = end + 1;
    }
    return out;
}

inline std::string monomial_name(ExteriorClass::Mask mask) {
    if (mask == 0) return "1";
    std::string s;
    for (auto rest = mask; rest; rest &= rest - 1) {
        if (!s.empty()) s += "^";
        s += ExteriorClass::generator_name(std::countr_zero(rest));
    }
    return s;
}

}  // namespace sfpas::invariants
