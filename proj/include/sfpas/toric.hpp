#pragma once

#include "sfpas/lp.hpp"
#include "sfpas/matrix.hpp"
#include "sfpas/quiver.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace sfpas::toric {

using Cone = std::vector<std::size_t>;  // sorted 0-based ray indices

/// Integer matrix v : Z^r -> Z^m of full row rank m.
class ToricMatrix {
public:
    explicit ToricMatrix(RationalMatrix v) : kernel_(quiver::TorusKernel::from_weights(v)) {
        if (v.rows() == 0 || v.cols() == 0) throw InvalidInput("toric matrix must be nonempty");
    }

    const RationalMatrix& v() const { return kernel_.weights; }
    std::size_t m() const { return kernel_.weights.rows(); }
    std::size_t r() const { return kernel_.weights.cols(); }
    /// r x (r - m) integer basis of ker v; coker coordinates of a are K^T a.
    const RationalMatrix& kernel() const { return kernel_.kernel; }
    const quiver::TorusKernel& torus() const { return kernel_; }

    std::vector<Rational> column(std::size_t j) const {
        std::vector<Rational> c(m());
        for (std::size_t i = 0; i < m(); ++i) c[i] = v()(i, j);
        return c;
    }

    std::vector<Rational> coker_coordinates(const std::vector<Rational>& a) const {
        check_level(a);
        return kernel_.coker_coordinates(a);
    }

    void check_level(const std::vector<Rational>& a) const {
        if (a.size() != r())
            throw InvalidInput("level representative has " + std::to_string(a.size()) + " entries, expected " +
                               std::to_string(r()));
    }

private:
    quiver::TorusKernel kernel_;
};

struct Fan {
    std::vector<Cone> max_cones;
};

inline void check_fan_indices(const Fan& fan, const ToricMatrix& v) {
    for (const auto& c : fan.max_cones) {
        if (c.empty()) throw InvalidInput("fan contains an empty cone");
        for (std::size_t k = 0; k < c.size(); ++k) {
            if (c[k] >= v.r()) throw InvalidInput("fan ray index " + std::to_string(c[k] + 1) + " out of range");
            if (k && c[k] <= c[k - 1]) throw InvalidInput("cone ray indices must be strictly increasing");
        }
    }
}

namespace detail {

inline RationalMatrix generators(const ToricMatrix& v, const Cone& c) { return v.v().select_columns(c); }

inline Rational dot(const std::vector<Rational>& a, const std::vector<Rational>& b) {
    Rational s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/// Solves the square system A x = b exactly; nullopt if singular.
inline std::optional<std::vector<Rational>> solve(const RationalMatrix& a, const std::vector<Rational>& b) {
    const std::size_t n = a.rows();
    RationalMatrix aug(n, n + 1);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) aug(i, j) = a(i, j);
        aug(i, n) = b[i];
    }
    const auto piv = rref_in_place(aug);
    if (piv.size() != n || piv.back() != n - 1) return std::nullopt;
    std::vector<Rational> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = aug(i, n);
    return x;
}

/// Normal of the hyperplane spanned by m - 1 independent columns.
inline std::vector<Rational> ridge_normal(const ToricMatrix& v, const Cone& ridge) {
    RationalMatrix g = generators(v, ridge).transpose();  // (m-1) x m
    if (ridge.empty()) g = RationalMatrix(0, v.m());
    auto ker = kernel_basis(g);
    std::vector<Rational> n(v.m());
    for (std::size_t i = 0; i < v.m(); ++i) n[i] = ker.front()(i, 0);
    return n;
}

inline int sign_of(const Rational& x) { return x > 0 ? 1 : (x < 0 ? -1 : 0); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Conditions on v

struct P1Result {
    bool ok = true;
    std::optional<std::size_t> offending_column;
    std::string diagnostic;
};

/// Every column is primitive (gcd of entries 1).
inline P1Result check_P1(const ToricMatrix& v) {
    for (std::size_t j = 0; j < v.r(); ++j) {
        BigInt g = 0;
        for (std::size_t i = 0; i < v.m(); ++i) g = boost::multiprecision::gcd(g, boost::multiprecision::numerator(v.v()(i, j)));
        if (g != 1) {
            P1Result res{false, j, ""};
            res.diagnostic = g == 0 ? "column " + std::to_string(j + 1) + " is zero"
                                    : "column " + std::to_string(j + 1) + " has content " + g.str();
            return res;
        }
    }
    return {};
}

struct P2Result {
    bool ok = true;
    std::vector<Rational> certificate;  // nonzero x >= 0 in im(v^T) when !ok
};

/// The row space of v meets the nonnegative orthant only in 0.
inline P2Result check_P2(const ToricMatrix& v) {
    // Variables y in Q^m (free); x = v^T y.
    lp::Problem p(v.m(), lp::VariableKind::Free);
    std::vector<Rational> total(v.m());
    for (std::size_t j = 0; j < v.r(); ++j) {
        const auto col = v.column(j);
        p.add(col, lp::Relation::GreaterEqual, 0);
        for (std::size_t i = 0; i < v.m(); ++i) total[i] += col[i];
    }
    p.add(total, lp::Relation::LessEqual, 1);
    p.set_objective(total);
    const auto s = p.maximize();
    P2Result res;
    if (s.status == lp::Status::Optimal && s.objective > 0) {
        res.ok = false;
        for (std::size_t j = 0; j < v.r(); ++j) res.certificate.push_back(detail::dot(v.column(j), s.x));
    }
    return res;
}

// ---------------------------------------------------------------------------
// Fans

struct FanValidation {
    bool simplicial = false;
    bool is_fan = false;
    bool complete = false;
    std::string diagnostic;
};

namespace detail {

/// True iff cone(a) and cone(b) meet exactly in the cone over the common
/// rays. Both cones must be simplicial.
inline bool meet_in_common_face(const ToricMatrix& v, const Cone& a, const Cone& b) {
    const std::size_t na = a.size(), nb = b.size();
    lp::Problem p(na + nb);
    for (std::size_t i = 0; i < v.m(); ++i) {
        std::vector<Rational> row(na + nb);
        for (std::size_t k = 0; k < na; ++k) row[k] = v.v()(i, a[k]);
        for (std::size_t k = 0; k < nb; ++k) row[na + k] = -v.v()(i, b[k]);
        p.add(row, lp::Relation::Equal, 0);
    }
    std::vector<Rational> obj(na + nb), sum(na + nb, Rational(1));
    for (std::size_t k = 0; k < na; ++k)
        if (!std::binary_search(b.begin(), b.end(), a[k])) obj[k] = 1;
    for (std::size_t k = 0; k < nb; ++k)
        if (!std::binary_search(a.begin(), a.end(), b[k])) obj[na + k] = 1;
    p.add(sum, lp::Relation::LessEqual, 1);
    p.set_objective(obj);
    const auto s = p.maximize();
    return s.status == lp::Status::Optimal && s.objective == 0;
}

inline std::vector<Cone> ridges_of(const Cone& c) {
    std::vector<Cone> out;
    for (std::size_t skip = 0; skip < c.size(); ++skip) {
        Cone r;
        for (std::size_t k = 0; k < c.size(); ++k)
            if (k != skip) r.push_back(c[k]);
        out.push_back(std::move(r));
    }
    return out;
}

/// Deterministic rational directions used for the coverage check.
inline std::vector<std::vector<Rational>> sample_directions(std::size_t m, std::size_t count) {
    std::mt19937_64 rng(0x5eed);
    std::uniform_int_distribution<int> e(-1000, 1000);
    std::vector<std::vector<Rational>> out;
    while (out.size() < count) {
        std::vector<Rational> d(m);
        bool nonzero = false;
        for (auto& x : d) {
            x = e(rng);
            nonzero = nonzero || x != 0;
        }
        if (nonzero) out.push_back(std::move(d));
    }
    return out;
}

inline bool covers(const ToricMatrix& v, const Cone& c, const std::vector<Rational>& d) {
    auto lam = solve(generators(v, c), d);
    if (!lam) return false;
    return std::all_of(lam->begin(), lam->end(), [](const Rational& x) { return x >= 0; });
}

}  // namespace detail

/// Simplicial: independent generators per cone. Fan: every pair of cones
/// meets in the cone over its common rays (exact LP). Complete: all cones
/// have dimension m, every ridge lies in exactly two cones, the adjacency
/// graph is connected, and 1000 fixed directions are all covered.
inline FanValidation validate_fan(const Fan& fan, const ToricMatrix& v) {
    check_fan_indices(fan, v);
    FanValidation out;
    if (fan.max_cones.empty()) {
        out.diagnostic = "fan has no cones";
        return out;
    }
    out.simplicial = true;
    for (const auto& c : fan.max_cones)
        if (c.size() > v.m() || rank_exact(detail::generators(v, c)) != c.size()) {
            out.simplicial = false;
            out.diagnostic = "cone with dependent generators";
            return out;
        }
    out.is_fan = true;
    for (std::size_t i = 0; i < fan.max_cones.size() && out.is_fan; ++i)
        for (std::size_t j = i + 1; j < fan.max_cones.size(); ++j)
            if (fan.max_cones[i] == fan.max_cones[j] || !detail::meet_in_common_face(v, fan.max_cones[i], fan.max_cones[j])) {
                out.is_fan = false;
                out.diagnostic = "cones " + std::to_string(i + 1) + " and " + std::to_string(j + 1) +
                                 " do not meet in a common face";
                break;
            }
    if (!out.is_fan) return out;

    for (const auto& c : fan.max_cones)
        if (c.size() != v.m()) {
            out.diagnostic = "not all maximal cones are full-dimensional";
            return out;
        }
    std::map<Cone, std::vector<std::size_t>> ridge_owners;
    for (std::size_t i = 0; i < fan.max_cones.size(); ++i)
        for (auto& r : detail::ridges_of(fan.max_cones[i])) ridge_owners[r].push_back(i);
    std::vector<std::vector<std::size_t>> adj(fan.max_cones.size());
    for (const auto& [ridge, owners] : ridge_owners) {
        if (owners.size() != 2) {
            out.diagnostic = "a ridge lies in " + std::to_string(owners.size()) + " maximal cones";
            return out;
        }
        adj[owners[0]].push_back(owners[1]);
        adj[owners[1]].push_back(owners[0]);
    }
    std::vector<bool> seen(fan.max_cones.size(), false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
        const auto i = stack.back();
        stack.pop_back();
        for (auto j : adj[i])
            if (!seen[j]) {
                seen[j] = true;
                stack.push_back(j);
            }
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
        out.diagnostic = "adjacency graph of maximal cones is disconnected";
        return out;
    }
    for (const auto& d : detail::sample_directions(v.m(), 1000)) {
        bool hit = false;
        for (const auto& c : fan.max_cones)
            if (detail::covers(v, c, d)) {
                hit = true;
                break;
            }
        if (!hit) {
            out.diagnostic = "a sample direction is not covered";
            return out;
        }
    }
    out.complete = true;
    return out;
}

// ---------------------------------------------------------------------------
// Levels

/// The functional f on span(sigma) with <f, v_j> = -a_j for the rays j of
/// sigma, returned as the vector in span(sigma) representing it.
inline std::vector<Rational> face_functional(const Cone& sigma, const std::vector<Rational>& a, const ToricMatrix& v) {
    v.check_level(a);
    for (auto j : sigma)
        if (j >= v.r()) throw InvalidInput("cone ray index out of range");
    const RationalMatrix b = detail::generators(v, sigma);  // m x k
    const RationalMatrix gram = b.transpose() * b;
    std::vector<Rational> rhs;
    for (auto j : sigma) rhs.push_back(-a[j]);
    auto c = detail::solve(gram, rhs);
    if (!c) throw InvalidInput("cone generators are linearly dependent");
    std::vector<Rational> f(v.m());
    for (std::size_t i = 0; i < v.m(); ++i)
        for (std::size_t k = 0; k < sigma.size(); ++k) f[i] += b(i, k) * (*c)[k];
    return f;
}

struct KMembership {
    bool in_K = false;
    bool in_K0 = false;
};

/// Some a' = a + v^T y with a' >= 0; with `strict_on` the inequality is
/// strict on those indices (decided by a maximized slack).
inline std::optional<std::vector<Rational>> nonnegative_representative(const ToricMatrix& v, const std::vector<Rational>& a,
                                                                      const std::vector<bool>& allowed) {
    // Variables y (free, m of them). Constraints: a_j + (v^T y)_j >= 0 for
    // allowed j, = 0 otherwise.
    lp::Problem p(v.m(), lp::VariableKind::Free);
    for (std::size_t j = 0; j < v.r(); ++j) p.add(v.column(j), allowed[j] ? lp::Relation::GreaterEqual : lp::Relation::Equal, -a[j]);
    auto y = lp::find_feasible(p);
    if (!y) return std::nullopt;
    std::vector<Rational> b(v.r());
    for (std::size_t j = 0; j < v.r(); ++j) b[j] = a[j] + detail::dot(v.column(j), *y);
    return b;
}

/// K(Sigma) and K_0(Sigma) membership of p_v(a). The defining
/// inequalities <f_sigma^a, v_j> >= -a_j do not depend on the
/// representative, so they are evaluated on a for every maximal cone;
/// K additionally needs a nonnegative representative.
inline KMembership k_membership(const Fan& fan, const ToricMatrix& v, const std::vector<Rational>& a) {
    v.check_level(a);
    check_fan_indices(fan, v);
    KMembership out;
    bool weak = true, strict = true;
    for (const auto& sigma : fan.max_cones) {
        const auto f = face_functional(sigma, a, v);
        for (std::size_t j = 0; j < v.r(); ++j) {
            const Rational lhs = detail::dot(f, v.column(j));
            if (lhs < -a[j]) weak = false;
            if (!std::binary_search(sigma.begin(), sigma.end(), j) && !(lhs > -a[j])) strict = false;
        }
    }
    if (!weak) return out;
    out.in_K = nonnegative_representative(v, a, std::vector<bool>(v.r(), true)).has_value();
    out.in_K0 = out.in_K && strict;
    return out;
}

/// z with support `supp` lies in U(Sigma): some cone has every ray outside
/// it in the support. Faces of a cone only enlarge the requirement, so
/// maximal cones suffice.
inline bool u_membership(const std::vector<bool>& supp, const Fan& fan) {
    for (const auto& sigma : fan.max_cones) {
        bool ok = true;
        for (std::size_t j = 0; j < supp.size() && ok; ++j)
            if (!supp[j] && !std::binary_search(sigma.begin(), sigma.end(), j)) ok = false;
        if (ok) return true;
    }
    return false;
}

struct SemistableResult {
    bool semistable = false;
    bool stable = false;
    std::vector<Rational> certificate;  // b >= 0 with supp(b) in supp and p_v(b) = p_v(a)
};

/// Torus-weight criterion for a point z with the given support:
/// semistable iff p_v(a) = p_v(b) for some b >= 0 supported on supp;
/// stable iff moreover such b can be chosen positive on all of supp and
/// the images p_v(e_j), j in supp, span the cokernel.
inline SemistableResult semistable_lp(const std::vector<bool>& supp, const ToricMatrix& v, const std::vector<Rational>& a) {
    v.check_level(a);
    if (supp.size() != v.r()) throw InvalidInput("support pattern has wrong length");
    SemistableResult out;
    auto b = nonnegative_representative(v, a, supp);
    if (!b) return out;
    out.semistable = true;
    out.certificate = *b;

    // Maximize s subject to b_j >= s on supp, b_j = 0 off supp, s <= 1.
    lp::Problem p(v.m() + 1, lp::VariableKind::Free);
    for (std::size_t j = 0; j < v.r(); ++j) {
        std::vector<Rational> row = v.column(j);
        row.push_back(supp[j] ? Rational(-1) : Rational(0));
        p.add(row, supp[j] ? lp::Relation::GreaterEqual : lp::Relation::Equal, -a[j]);
    }
    std::vector<Rational> cap(v.m() + 1), obj(v.m() + 1);
    cap[v.m()] = 1;
    obj[v.m()] = 1;
    p.add(cap, lp::Relation::LessEqual, 1);
    p.set_objective(obj);
    const auto s = p.maximize();
    if (s.status != lp::Status::Optimal || !(s.objective > 0)) return out;

    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < v.r(); ++j)
        if (supp[j]) cols.push_back(j);
    const RationalMatrix kt = v.kernel().transpose().select_columns(cols);
    out.stable = rank_exact(kt) == v.kernel().cols();
    return out;
}

inline bool quotient_nonempty(const ToricMatrix& v, const std::vector<Rational>& a) {
    v.check_level(a);
    return nonnegative_representative(v, a, std::vector<bool>(v.r(), true)).has_value();
}

// ---------------------------------------------------------------------------
// Chamber search

constexpr std::size_t chamber_max_rays = 12;
constexpr std::size_t chamber_max_dim = 3;

namespace detail {

class FanSearch {
public:
    FanSearch(const ToricMatrix& v, const std::vector<Rational>& a) : v_(v), a_(a) {}

    std::optional<Fan> run() {
        const auto d0 = generic_direction();
        if (!d0) return std::nullopt;
        std::vector<std::size_t> idx(v_.m());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        do {
            Cone c(idx.begin(), idx.end());
            if (rank_exact(generators(v_, c)) != v_.m()) continue;
            auto lam = solve(generators(v_, c), *d0);
            if (!lam || !std::all_of(lam->begin(), lam->end(), [](const Rational& x) { return x > 0; })) continue;
            std::vector<Cone> cones{c};
            if (auto f = grow(cones)) return f;
        } while (next_subset(idx, v_.r()));
        return std::nullopt;
    }

private:
    static bool next_subset(std::vector<std::size_t>& idx, std::size_t n) {
        const std::size_t k = idx.size();
        for (std::size_t i = k; i-- > 0;)
            if (idx[i] < n - k + i) {
                ++idx[i];
                for (std::size_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
                return true;
            }
        return false;
    }

    /// A direction off every hyperplane spanned by m - 1 columns.
    std::optional<std::vector<Rational>> generic_direction() const {
        std::vector<std::vector<Rational>> normals;
        if (v_.m() == 1) {
            normals.push_back({Rational(1)});
        } else {
            std::vector<std::size_t> idx(v_.m() - 1);
            for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
            do {
                Cone r(idx.begin(), idx.end());
                if (rank_exact(generators(v_, r)) == r.size()) normals.push_back(ridge_normal(v_, r));
            } while (next_subset(idx, v_.r()));
        }
        for (const auto& d : sample_directions(v_.m(), 200)) {
            bool ok = true;
            for (const auto& n : normals) ok = ok && dot(n, d) != 0;
            if (ok) return d;
        }
        return std::nullopt;
    }

    std::optional<Cone> open_ridge(const std::vector<Cone>& cones, Cone& owner) const {
        std::map<Cone, std::pair<std::size_t, std::size_t>> count;  // ridge -> (count, owner)
        for (std::size_t i = 0; i < cones.size(); ++i)
            for (auto& r : ridges_of(cones[i])) {
                auto& e = count[r];
                ++e.first;
                e.second = i;
            }
        for (const auto& [ridge, e] : count)
            if (e.first == 1) {
                owner = cones[e.second];
                return ridge;
            }
        return std::nullopt;
    }

    std::optional<Fan> grow(std::vector<Cone>& cones) {
        if (++nodes_ > 200000) throw LimitExceeded("chamber search exceeded its node budget");
        Cone owner;
        const auto ridge = open_ridge(cones, owner);
        if (!ridge) {
            Fan f{cones};
            std::sort(f.max_cones.begin(), f.max_cones.end());
            if (k_membership(f, v_, a_).in_K0) return f;
            return std::nullopt;
        }
        const auto n = ridge_normal(v_, *ridge);
        std::size_t apex = 0;
        for (auto j : owner)
            if (!std::binary_search(ridge->begin(), ridge->end(), j)) apex = j;
        const int side = sign_of(dot(n, v_.column(apex)));
        for (std::size_t j = 0; j < v_.r(); ++j) {
            if (std::binary_search(ridge->begin(), ridge->end(), j)) continue;
            if (sign_of(dot(n, v_.column(j))) != -side) continue;
            Cone c = *ridge;
            c.insert(std::upper_bound(c.begin(), c.end(), j), j);
            if (std::find(cones.begin(), cones.end(), c) != cones.end()) continue;
            bool compatible = true;
            for (const auto& other : cones)
                if (!meet_in_common_face(v_, c, other)) {
                    compatible = false;
                    break;
                }
            if (!compatible) continue;
            cones.push_back(c);
            if (auto f = grow(cones)) return f;
            cones.pop_back();
        }
        return std::nullopt;
    }

    const ToricMatrix& v_;
    const std::vector<Rational>& a_;
    std::size_t nodes_ = 0;
};

}  // namespace detail

/// First complete simplicial fan on the columns of v (found by growing
/// cones across open ridges) whose K_0 contains p_v(a).
inline std::optional<Fan> chamber_fan_search(const ToricMatrix& v, const std::vector<Rational>& a) {
    v.check_level(a);
    if (v.r() > chamber_max_rays || v.m() > chamber_max_dim)
        throw LimitExceeded("chamber search supports r <= " + std::to_string(chamber_max_rays) + " and m <= " +
                            std::to_string(chamber_max_dim));
    return detail::FanSearch(v, a).run();
}

// ---------------------------------------------------------------------------
// Standard datasets

inline ToricMatrix projective_line() { return ToricMatrix(RationalMatrix{{Rational(1), Rational(-1)}}); }

inline ToricMatrix projective_plane() {
    return ToricMatrix(RationalMatrix{{Rational(1), Rational(0), Rational(-1)}, {Rational(0), Rational(1), Rational(-1)}});
}

inline ToricMatrix product_of_lines() {
    return ToricMatrix(RationalMatrix{{Rational(1), Rational(-1), Rational(0), Rational(0)},
                                      {Rational(0), Rational(0), Rational(1), Rational(-1)}});
}

inline Fan projective_line_fan() { return {{{0}, {1}}}; }
inline Fan projective_plane_fan() { return {{{0, 1}, {1, 2}, {0, 2}}}; }
inline Fan product_of_lines_fan() { return {{{0, 2}, {0, 3}, {1, 2}, {1, 3}}}; }

}  // namespace sfpas::toric
