#pragma once

#include "sfpas/exact_scalar.hpp"

#include <cstddef>
#include <ostream>
#include <stdexcept>
#include <utility>
#include <vector>

namespace sfpas {

/// Univariate polynomial over a field (Rational or ExactScalar),
/// coefficients stored low degree first with no trailing zeros.
template <class Field>
class Polynomial {
public:
    Polynomial() = default;
    Polynomial(int c) : Polynomial(Field(c)) {}
    Polynomial(Field c) {
        if (!sfpas::is_zero(c)) coeffs_.push_back(std::move(c));
    }
    explicit Polynomial(std::vector<Field> coeffs) : coeffs_(std::move(coeffs)) { trim(); }

    /// c * x^k
    static Polynomial monomial(Field c, std::size_t k) {
        std::vector<Field> v(k + 1);
        v[k] = std::move(c);
        return Polynomial(std::move(v));
    }

    bool is_zero() const { return coeffs_.empty(); }
    /// Degree; -1 for the zero polynomial.
    long degree() const { return static_cast<long>(coeffs_.size()) - 1; }
    const Field& leading() const { return coeffs_.back(); }
    const std::vector<Field>& coefficients() const { return coeffs_; }

    Field coefficient(std::size_t k) const { return k < coeffs_.size() ? coeffs_[k] : Field{}; }

    Field operator()(const Field& x) const {
        Field acc{};
        for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
        return acc;
    }

    Polynomial operator-() const {
        Polynomial p = *this;
        for (auto& c : p.coeffs_) c = Field{} - c;
        return p;
    }

    Polynomial& operator+=(const Polynomial& o) {
        if (o.coeffs_.size() > coeffs_.size()) coeffs_.resize(o.coeffs_.size());
        for (std::size_t i = 0; i < o.coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
        trim();
        return *this;
    }
    Polynomial& operator-=(const Polynomial& o) {
        if (o.coeffs_.size() > coeffs_.size()) coeffs_.resize(o.coeffs_.size());
        for (std::size_t i = 0; i < o.coeffs_.size(); ++i) coeffs_[i] -= o.coeffs_[i];
        trim();
        return *this;
    }
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
        if (a.is_zero() || b.is_zero()) return {};
        std::vector<Field> out(a.coeffs_.size() + b.coeffs_.size() - 1);
        for (std::size_t i = 0; i < a.coeffs_.size(); ++i) {
            if (sfpas::is_zero(a.coeffs_[i])) continue;
            for (std::size_t j = 0; j < b.coeffs_.size(); ++j) out[i + j] += a.coeffs_[i] * b.coeffs_[j];
        }
        return Polynomial(std::move(out));
    }
    Polynomial& operator*=(const Polynomial& o) { return *this = *this * o; }

    friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
    friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
    friend bool operator==(const Polynomial& a, const Polynomial& b) { return a.coeffs_ == b.coeffs_; }

    /// Euclidean division over the field: *this = q * d + r, deg r < deg d.
    std::pair<Polynomial, Polynomial> divmod(const Polynomial& d) const {
        if (d.is_zero()) throw std::domain_error("polynomial division by zero");
        Polynomial r = *this;
        if (r.degree() < d.degree()) return {Polynomial{}, r};
        std::vector<Field> q(static_cast<std::size_t>(r.degree() - d.degree() + 1));
        const Field inv_lead = Field(1) / d.leading();
        while (!r.is_zero() && r.degree() >= d.degree()) {
            const std::size_t shift = static_cast<std::size_t>(r.degree() - d.degree());
            Field c = r.leading() * inv_lead;
            for (std::size_t i = 0; i < d.coeffs_.size(); ++i) r.coeffs_[i + shift] -= c * d.coeffs_[i];
            q[shift] = c;
            r.trim();
        }
        return {Polynomial(std::move(q)), r};
    }

    /// Exact quotient; throws if the division leaves a remainder.
    friend Polynomial operator/(const Polynomial& a, const Polynomial& b) {
        auto [q, r] = a.divmod(b);
        if (!r.is_zero()) throw std::domain_error("inexact polynomial division");
        return q;
    }

    Polynomial monic() const {
        if (is_zero()) return {};
        Polynomial p = *this;
        const Field inv = Field(1) / leading();
        for (auto& c : p.coeffs_) c *= inv;
        return p;
    }

    friend std::ostream& operator<<(std::ostream& os, const Polynomial& p) {
        if (p.is_zero()) return os << "0";
        bool first = true;
        for (std::size_t k = p.coeffs_.size(); k-- > 0;) {
            if (sfpas::is_zero(p.coeffs_[k])) continue;
            if (!first) os << " + ";
            os << "(" << p.coeffs_[k] << ")";
            if (k > 0) os << "x^" << k;
            first = false;
        }
        return os;
    }

private:
    void trim() {
        while (!coeffs_.empty() && sfpas::is_zero(coeffs_.back())) coeffs_.pop_back();
    }

    std::vector<Field> coeffs_;
};

template <class Field>
bool is_zero(const Polynomial<Field>& p) {
    return p.is_zero();
}

/// Pseudo-remainder: lc(b)^(deg a - deg b + 1) * a mod b.
template <class Field>
Polynomial<Field> pseudo_remainder(const Polynomial<Field>& a, const Polynomial<Field>& b) {
    if (a.degree() < b.degree()) return a;
    const long delta = a.degree() - b.degree();
    Field scale(1);
    for (long i = 0; i <= delta; ++i) scale *= b.leading();
    return (Polynomial<Field>(scale) * a).divmod(b).second;
}

/// Monic gcd by the subresultant polynomial remainder sequence.
/// gcd(0, 0) = 0.
template <class Field>
Polynomial<Field> subresultant_gcd(Polynomial<Field> a, Polynomial<Field> b) {
    using Poly = Polynomial<Field>;
    if (a.degree() < b.degree()) std::swap(a, b);
    if (b.is_zero()) return a.monic();
    Field g(1), h(1);
    for (;;) {
        const long delta = a.degree() - b.degree();
        Poly r = pseudo_remainder(a, b);
        if (r.is_zero()) return b.monic();
        if (r.degree() == 0) return Poly(Field(1));
        Field h_pow(1);
        for (long i = 0; i < delta; ++i) h_pow *= h;
        a = std::move(b);
        b = r * Poly(Field(1) / (g * h_pow));
        g = a.leading();
        // h <- g^delta / h^(delta - 1)
        Field g_pow(1);
        for (long i = 0; i < delta; ++i) g_pow *= g;
        Field h_prev(1);
        for (long i = 0; i + 1 < delta; ++i) h_prev *= h;
        h = delta == 0 ? h : g_pow / h_prev;
    }
}

using ExactPolynomial = Polynomial<ExactScalar>;

}  // namespace sfpas
