#pragma once

#include "sfpas/rational.hpp"

#include <complex>
#include <ostream>
#include <string>

namespace sfpas {

/// Gaussian rational re + i*im. Components are kept in reduced form by
/// the underlying rational type.
class ExactScalar {
public:
    ExactScalar() = default;
    ExactScalar(Rational re, Rational im = 0) : re_(std::move(re)), im_(std::move(im)) {}
    ExactScalar(int re) : re_(re) {}
    ExactScalar(long re) : re_(re) {}
    ExactScalar(long long re) : re_(re) {}

    const Rational& re() const { return re_; }
    const Rational& im() const { return im_; }

    bool is_zero() const { return re_ == 0 && im_ == 0; }
    bool is_real() const { return im_ == 0; }

    ExactScalar conj() const { return {re_, -im_}; }
    /// |z|^2, always real.
    Rational norm() const { return re_ * re_ + im_ * im_; }

    ExactScalar operator-() const { return {-re_, -im_}; }

    ExactScalar& operator+=(const ExactScalar& o) {
        re_ += o.re_;
        im_ += o.im_;
        return *this;
    }
    ExactScalar& operator-=(const ExactScalar& o) {
        re_ -= o.re_;
        im_ -= o.im_;
        return *this;
    }
    ExactScalar& operator*=(const ExactScalar& o) {
        if (im_ == 0 && o.im_ == 0) {
            re_ *= o.re_;
            return *this;
        }
        Rational r = re_ * o.re_ - im_ * o.im_;
        Rational i = re_ * o.im_ + im_ * o.re_;
        re_ = std::move(r);
        im_ = std::move(i);
        return *this;
    }
    ExactScalar& operator/=(const ExactScalar& o) {
        if (o.is_zero()) throw std::domain_error("division by zero Gaussian rational");
        if (im_ == 0 && o.im_ == 0) {
            re_ /= o.re_;
            return *this;
        }
        Rational n = o.norm();
        Rational r = (re_ * o.re_ + im_ * o.im_) / n;
        Rational i = (im_ * o.re_ - re_ * o.im_) / n;
        re_ = std::move(r);
        im_ = std::move(i);
        return *this;
    }

    friend ExactScalar operator+(ExactScalar a, const ExactScalar& b) { return a += b; }
    friend ExactScalar operator-(ExactScalar a, const ExactScalar& b) { return a -= b; }
    friend ExactScalar operator*(ExactScalar a, const ExactScalar& b) { return a *= b; }
    friend ExactScalar operator/(ExactScalar a, const ExactScalar& b) { return a /= b; }
    friend bool operator==(const ExactScalar& a, const ExactScalar& b) {
        return a.re_ == b.re_ && a.im_ == b.im_;
    }

    std::complex<double> to_complex() const { return {to_double(re_), to_double(im_)}; }

    friend std::ostream& operator<<(std::ostream& os, const ExactScalar& z) {
        os << to_string(z.re_);
        if (z.im_ != 0) os << (z.im_.sign() > 0 ? "+" : "") << to_string(z.im_) << "i";
        return os;
    }

private:
    Rational re_;
    Rational im_;
};

inline ExactScalar conj(const ExactScalar& z) { return z.conj(); }
inline bool is_zero(const ExactScalar& z) { return z.is_zero(); }
inline bool is_zero(const Rational& q) { return q == 0; }

}  // namespace sfpas
