#pragma once

#include "sfpas/matrix.hpp"
#include "sfpas/polynomial.hpp"
#include "sfpas/quiver.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <vector>

namespace sfpas::family {

struct NonPositiveLevel : InvalidInput {
    using InvalidInput::InvalidInput;
};

struct NotATriple : InvalidInput {
    using InvalidInput::InvalidInput;
};

// ---------------------------------------------------------------------------
// Flag chains V_1 -> V_2 -> ... -> V_{m+1}

struct FlagChain {
    std::vector<std::size_t> dims;  // d_1 .. d_{m+1}
    std::vector<ExactMatrix> maps;  // f_i : d_{i+1} x d_i
    std::vector<Rational> levels;   // t_1 .. t_m

    std::size_t length() const { return maps.size(); }

    void validate() const {
        if (dims.size() < 2) throw InvalidInput("flag chain needs at least two spaces");
        if (maps.size() + 1 != dims.size()) throw InvalidInput("flag chain needs one map per consecutive pair");
        if (levels.size() != maps.size()) throw InvalidInput("flag chain needs one level per map");
        for (std::size_t i = 0; i < maps.size(); ++i)
            if (maps[i].rows() != dims[i + 1] || maps[i].cols() != dims[i])
                throw InvalidInput("map f" + std::to_string(i + 1) + " has shape " + std::to_string(maps[i].rows()) +
                                   "x" + std::to_string(maps[i].cols()) + ", expected " +
                                   std::to_string(dims[i + 1]) + "x" + std::to_string(dims[i]));
    }

    quiver::ExactPoint as_point() const { return {maps}; }
    quiver::Level as_level() const { return {levels}; }
};

struct DestabilizerWitness {
    ExactHermitianTuple xi;
    Rational pairing;  // sum_i t_i Tr(xi_i)
    std::size_t map_index = 0;
};

struct FlagVerdict {
    StabilityVerdict verdict = StabilityVerdict::Stable;
    std::optional<DestabilizerWitness> witness;
};

/// Exact test for positive levels: the chain is stable iff every f_i is
/// injective. For the first non-injective f_i the witness is
/// xi_i = -(orthogonal projector onto ker f_i), all other blocks zero.
inline FlagVerdict flag_stable(const FlagChain& c) {
    c.validate();
    for (std::size_t i = 0; i < c.levels.size(); ++i)
        if (c.levels[i] <= 0)
            throw NonPositiveLevel("level t" + std::to_string(i + 1) + " = " + to_string(c.levels[i]) +
                                   " is not positive; use the numerical verdict for general levels");
    FlagVerdict out;
    for (std::size_t i = 0; i < c.maps.size(); ++i) {
        const auto ker = kernel_basis(c.maps[i]);
        if (ker.empty()) continue;
        DestabilizerWitness w;
        for (std::size_t j = 0; j < c.maps.size(); ++j) w.xi.blocks.emplace_back(c.dims[j], c.dims[j]);
        w.xi.blocks[i] = ExactScalar(Rational(-1)) * orthogonal_projector(columns_to_matrix(ker, c.dims[i]));
        w.pairing = -c.levels[i] * Rational(static_cast<long>(ker.size()));
        w.map_index = i;
        out.verdict = StabilityVerdict::Unstable;
        out.witness = std::move(w);
        return out;
    }
    return out;
}

namespace detail {

inline ExactMatrix shifted(const ExactMatrix& xi, const Rational& lambda) {
    return xi - ExactScalar(lambda) * ExactMatrix::identity(xi.rows());
}

/// Columns spanning sum_{lambda' <= lambda} ker(xi - lambda').
inline ExactMatrix filtration_step(const ExactMatrix& xi, const std::vector<Rational>& spectrum, const Rational& lambda) {
    std::vector<ExactMatrix> cols;
    for (const auto& l : spectrum) {
        if (l > lambda) continue;
        for (auto& v : kernel_basis(shifted(xi, l))) cols.push_back(std::move(v));
    }
    return columns_to_matrix(cols, xi.rows());
}

/// Rational eigenvalues of a Hermitian block among the candidates; throws
/// if the candidates do not exhaust the spectrum.
inline std::vector<Rational> rational_spectrum(const ExactMatrix& xi, const std::set<Rational>& candidates) {
    std::vector<Rational> spectrum;
    std::size_t total = 0;
    for (const auto& l : candidates) {
        const std::size_t mult = xi.rows() - rank_exact(shifted(xi, l));
        if (mult) {
            spectrum.push_back(l);
            total += mult;
        }
    }
    if (total != xi.rows()) throw InvalidInput("witness block has eigenvalues outside the candidate set");
    return spectrum;
}

}  // namespace detail

/// Checks f_i(V_{i,lambda}) subset V_{i+1,lambda} for every i = 1..m and
/// every eigenvalue lambda of xi_i, where V_{i,lambda} is the sum of the
/// xi_i-eigenspaces with eigenvalue <= lambda and xi_{m+1} = 0. This is
/// the condition that f lies in the nonpositive-weight part of xi.
/// Eigenvalues are searched among 0, -1 and the diagonal entries.
inline bool witness_filtration_holds(const FlagChain& c, const ExactHermitianTuple& xi) {
    c.validate();
    if (xi.blocks.size() != c.maps.size()) throw InvalidInput("witness has wrong number of blocks");
    const std::size_t m = c.maps.size();
    std::vector<std::vector<Rational>> spectra;
    for (std::size_t i = 0; i < m; ++i) {
        if (xi.blocks[i].rows() != c.dims[i] || !is_hermitian(xi.blocks[i]))
            throw InvalidInput("witness block " + std::to_string(i + 1) + " is not a Hermitian endomorphism");
        std::set<Rational> candidates{Rational(0), Rational(-1)};
        for (std::size_t k = 0; k < c.dims[i]; ++k) candidates.insert(xi.blocks[i](k, k).re());
        spectra.push_back(detail::rational_spectrum(xi.blocks[i], candidates));
    }
    spectra.push_back({Rational(0)});
    for (std::size_t i = 0; i < m; ++i) {
        const ExactMatrix next = i + 1 < m ? xi.blocks[i + 1] : ExactMatrix(c.dims[m], c.dims[m]);
        for (const auto& lambda : spectra[i]) {
            const ExactMatrix src = detail::filtration_step(xi.blocks[i], spectra[i], lambda);
            const ExactMatrix dst = detail::filtration_step(next, spectra[i + 1], lambda);
            if (src.cols() == 0) continue;
            const ExactMatrix image = c.maps[i] * src;
            const std::size_t base = dst.cols() ? rank_exact(dst) : 0;
            const std::size_t joint = dst.cols() ? rank_exact(dst.hstack(image)) : rank_exact(image);
            if (joint != base) return false;
        }
    }
    return true;
}

enum class GrassmannQuotient { Grassmannian, Point, Empty };

inline const char* to_string(GrassmannQuotient q) {
    switch (q) {
        case GrassmannQuotient::Grassmannian: return "Grassmannian";
        case GrassmannQuotient::Point: return "Point";
        case GrassmannQuotient::Empty: return "Empty";
    }
    return "?";
}

/// Quotient of Hom(C^r, C^{r0}) by U(r) at level t.
inline GrassmannQuotient grassmann_quotient_type(const Rational& t) {
    if (t > 0) return GrassmannQuotient::Grassmannian;
    if (t == 0) return GrassmannQuotient::Point;
    return GrassmannQuotient::Empty;
}

// ---------------------------------------------------------------------------
// Stromme triples U =k,l=> V <=m= W

struct StrommeTriple {
    std::size_t u = 0, v = 0, w = 0;
    ExactMatrix k, l, m;

    void validate() const {
        if (v < u) throw InvalidInput("need v >= u");
        if (v - u > w) throw InvalidInput("need r = v - u <= w");
        auto shape = [](const ExactMatrix& a, std::size_t r, std::size_t c, const char* name) {
            if (a.rows() != r || a.cols() != c)
                throw InvalidInput(std::string("matrix ") + name + " has shape " + std::to_string(a.rows()) + "x" +
                                   std::to_string(a.cols()) + ", expected " + std::to_string(r) + "x" +
                                   std::to_string(c));
        };
        shape(k, v, u, "k");
        shape(l, v, u, "l");
        shape(m, v, w, "m");
    }
};

struct StrommeCheck {
    bool cond1 = false;
    bool cond2 = false;
    bool is_triple = false;
};

constexpr std::size_t max_stromme_v = 8;

namespace detail {

/// x k + l as a matrix over Q(i)[x].
inline DenseMatrix<ExactPolynomial> pencil(const StrommeTriple& t) {
    DenseMatrix<ExactPolynomial> p(t.v, t.u);
    for (std::size_t i = 0; i < t.v; ++i)
        for (std::size_t j = 0; j < t.u; ++j) p(i, j) = ExactPolynomial(std::vector<ExactScalar>{t.l(i, j), t.k(i, j)});
    return p;
}

inline bool next_subset(std::vector<std::size_t>& idx, std::size_t n) {
    const std::size_t k = idx.size();
    for (std::size_t i = k; i-- > 0;) {
        if (idx[i] < n - k + i) {
            ++idx[i];
            for (std::size_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
            return true;
        }
    }
    return false;
}

}  // namespace detail

/// cond1: the pencil x k + y l has rank u for general (x, y).
/// cond2: [x k + y l | m] has rank v at every (x : y) in P^1, decided on
/// the v x v minors as binary forms: a minor using e pencil columns is
/// homogeneous of degree e; (1 : 0) is a root iff its x-degree is below e.
inline StrommeCheck stromme_check(const StrommeTriple& t) {
    t.validate();
    if (t.v > max_stromme_v) throw LimitExceeded("stromme_check supports v <= " + std::to_string(max_stromme_v));
    StrommeCheck out;
    const auto pencil = detail::pencil(t);
    out.cond1 = t.u == 0 || bareiss_rank(pencil) == t.u;

    if (t.v == 0) {
        out.cond2 = true;
    } else {
        const std::size_t n = t.u + t.w;
        DenseMatrix<ExactPolynomial> full(t.v, n);
        for (std::size_t i = 0; i < t.v; ++i) {
            for (std::size_t j = 0; j < t.u; ++j) full(i, j) = pencil(i, j);
            for (std::size_t j = 0; j < t.w; ++j) full(i, t.u + j) = ExactPolynomial(t.m(i, j));
        }
        std::vector<std::size_t> idx(t.v);
        for (std::size_t i = 0; i < t.v; ++i) idx[i] = i;
        ExactPolynomial g;
        bool any_nonzero = false, root_at_infinity = true;
        do {
            std::size_t e = 0;
            for (auto j : idx) e += j < t.u;
            const ExactPolynomial minor = bareiss_determinant(full.select_columns(idx));
            if (minor.is_zero()) continue;
            any_nonzero = true;
            if (minor.degree() == static_cast<long>(e)) root_at_infinity = false;
            g = subresultant_gcd(g, minor);
            if (g.degree() == 0 && !root_at_infinity) break;
        } while (detail::next_subset(idx, n));
        out.cond2 = any_nonzero && g.degree() == 0 && !root_at_infinity;
    }
    out.is_triple = out.cond1 && out.cond2;
    return out;
}

struct QuotInvariants {
    std::size_t rank = 0;
    std::size_t degree = 0;
};

/// Rank r = v - u and degree u of the quotient of O (x) W on P^1.
inline QuotInvariants quot_invariants(const StrommeTriple& t) {
    if (!stromme_check(t).is_triple) throw NotATriple("the maps do not form a Stromme triple");
    return {t.v - t.u, t.u};
}

/// a + b * eps with eps a positive infinitesimal; ordered lexicographically.
struct EpsRational {
    Rational value;
    Rational eps;

    EpsRational() = default;
    EpsRational(Rational v, Rational e = 0) : value(std::move(v)), eps(std::move(e)) {}

    friend EpsRational operator*(const EpsRational& a, std::size_t n) {
        const Rational k(static_cast<long>(n));
        return {a.value * k, a.eps * k};
    }
    friend bool operator<(const EpsRational& a, const EpsRational& b) {
        return a.value != b.value ? a.value < b.value : a.eps < b.eps;
    }
    friend bool operator<=(const EpsRational& a, const EpsRational& b) { return !(b < a); }
    friend bool operator==(const EpsRational& a, const EpsRational& b) = default;
    bool positive() const { return Rational(0) < value || (value == 0 && Rational(0) < eps); }
};

inline std::string to_string(const EpsRational& x) {
    if (x.eps == 0) return sfpas::to_string(x.value);
    return sfpas::to_string(x.value) + (x.eps > 0 ? "+" : "") + sfpas::to_string(x.eps) + "eps";
}

struct StrommeViolation {
    ExactMatrix u1;  // columns: basis of U_1
    ExactMatrix v1;  // columns: basis of V_1
    int clause = 0;  // 1 or 2
};

namespace detail {

inline ExactMatrix span_basis(const ExactMatrix& gens) {
    if (gens.cols() == 0) return gens;
    return column_space_basis(gens);
}

inline ExactMatrix hcat(const ExactMatrix& a, const ExactMatrix& b) {
    if (a.cols() == 0) return b;
    if (b.cols() == 0) return a;
    return a.hstack(b);
}

}  // namespace detail

/// Searches U_1 over U, kernels of k, l, k + l, k - l, coordinate
/// subspaces and `trials` random Gaussian-integer subspaces, with the
/// smallest admissible V_1 for each clause. Returns the first pair that
/// violates the strict inequalities. A nullopt result proves nothing.
inline std::optional<StrommeViolation> stromme_refuter(const StrommeTriple& t, const EpsRational& s,
                                                       const EpsRational& tt, std::uint64_t seed,
                                                       std::size_t trials) {
    t.validate();
    if (!s.positive() || !tt.positive()) throw InvalidInput("stromme_refuter needs s, t > 0");

    std::vector<ExactMatrix> candidates;
    candidates.push_back(ExactMatrix::identity(t.u));
    const ExactScalar one(Rational(1));
    for (const ExactMatrix& a : {t.k, t.l, ExactMatrix(t.k + t.l), ExactMatrix(t.k - t.l)}) {
        auto ker = kernel_basis(a);
        if (!ker.empty()) candidates.push_back(columns_to_matrix(ker, t.u));
    }
    if (t.u <= 10)
        for (std::uint32_t mask = 1; mask + 1 < (1u << t.u); ++mask) {
            std::vector<std::size_t> cols;
            for (std::size_t j = 0; j < t.u; ++j)
                if (mask >> j & 1u) cols.push_back(j);
            candidates.push_back(ExactMatrix::identity(t.u).select_columns(cols));
        }
    std::mt19937_64 rng(seed);
    if (t.u > 0) {
        std::uniform_int_distribution<std::size_t> dim(1, t.u);
        std::uniform_int_distribution<int> entry(-3, 3);
        for (std::size_t n = 0; n < trials; ++n) {
            const std::size_t d = dim(rng);
            ExactMatrix b(t.u, d);
            for (std::size_t i = 0; i < t.u; ++i)
                for (std::size_t j = 0; j < d; ++j) {
                    const int re = entry(rng);
                    const int im = entry(rng);
                    b(i, j) = ExactScalar(Rational(re), Rational(im));
                }
            candidates.push_back(detail::span_basis(b));
        }
    }
    candidates.push_back(ExactMatrix(t.u, 0));

    for (const auto& raw : candidates) {
        const ExactMatrix u1 = detail::span_basis(raw);
        const std::size_t du1 = u1.cols();
        const ExactMatrix image = du1 ? detail::hcat(t.k * u1, t.l * u1) : ExactMatrix(t.v, 0);

        if (du1 > 0) {
            const ExactMatrix v1 = detail::span_basis(image);
            if (s * v1.cols() <= tt * du1) return StrommeViolation{u1, v1, 1};
        }

        const ExactMatrix v1 = detail::span_basis(detail::hcat(image, t.m));
        if (du1 == t.u && v1.cols() == t.v) continue;
        if (tt * (t.u - du1) <= s * (t.v - v1.cols())) return StrommeViolation{u1, v1, 2};
    }
    return std::nullopt;
}

}  // namespace sfpas::family
