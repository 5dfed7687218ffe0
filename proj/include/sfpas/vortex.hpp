#pragma once

#include "sfpas/rational.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <future>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>

namespace sfpas::vortex {

/// tau_0 <= 0: the integrated equation has no solution.
struct Infeasible : LimitExceeded {
    using LimitExceeded::LimitExceeded;
};

struct TorusGrid {
    std::size_t N = 64;
    double L = 2.0 * std::numbers::pi;

    double volume() const { return L * L; }
    double spacing() const { return L / static_cast<double>(N); }
    std::size_t size() const { return N * N; }

    void validate() const {
        if (N < 16 || (N & (N - 1)) != 0) throw InvalidInput("grid size N must be a power of two and at least 16");
        if (!(L > 0) || !std::isfinite(L)) throw InvalidInput("side length L must be positive");
    }
};

struct Center {
    double x = 0.5, y = 0.5;  // fractional coordinates in [0, 1)
    int multiplicity = 1;
};

struct VortexProblem {
    TorusGrid grid;
    int d = 0;  // degree; n = -d zeros
    std::vector<Center> centers;
    double t = 0.0;
    double sigma = 0.0;      // 0 selects L / 16
    double amplitude = 1.0;  // overall factor of B_0

    double width() const { return sigma > 0 ? sigma : grid.L / 16.0; }

    void validate() const {
        grid.validate();
        if (d > 0) throw InvalidInput("degree must be <= 0");
        int total = 0;
        for (const auto& c : centers) {
            if (c.multiplicity < 1) throw InvalidInput("center multiplicities must be positive");
            if (!std::isfinite(c.x) || !std::isfinite(c.y)) throw InvalidInput("center coordinates must be finite");
            total += c.multiplicity;
        }
        if (total != -d)
            throw InvalidInput("center multiplicities sum to " + std::to_string(total) + ", expected " + std::to_string(-d));
        if (!(width() > 0) || !(width() < grid.L / 4)) throw InvalidInput("sigma must lie in (0, L/4)");
        if (!(amplitude > 0) || !std::isfinite(amplitude)) throw InvalidInput("amplitude must be positive");
        if (!std::isfinite(t)) throw InvalidInput("t must be finite");
    }
};

struct VortexConfig {
    double tol = 1e-8;
    std::size_t max_newton = 100;
    double damping = 0.8;
    double cg_tol = 1e-13;
    std::size_t max_cg = 1000;
};

struct VortexField {
    std::size_t N = 0;
    std::vector<double> u;  // row-major, u[i * N + j] at (x_j, y_i)
    double residual_sup = 0.0;
    bool converged = false;
    double tau0 = 0.0;
    std::size_t iterations = 0;
};

/// t* = -2 pi d / Vol; solutions exist for t > t*.
inline double bradlow_threshold(int d, double vol) {
    if (!(vol > 0)) throw InvalidInput("volume must be positive");
    return -2.0 * std::numbers::pi * d / vol;
}

inline double tau0(const VortexProblem& p) { return p.t + 2.0 * std::numbers::pi * p.d / p.grid.volume(); }

/// amplitude * prod_c (1 - exp(-dist^2 / sigma^2))^mult with periodic
/// distance; vanishes exactly at the centers.
inline std::vector<double> squared_section(const VortexProblem& p) {
    const auto& g = p.grid;
    const double s2 = p.width() * p.width();
    std::vector<double> b(g.size(), p.amplitude);
    for (std::size_t i = 0; i < g.N; ++i)
        for (std::size_t j = 0; j < g.N; ++j) {
            const double x = j * g.spacing(), y = i * g.spacing();
            for (const auto& c : p.centers) {
                auto wrap = [&](double delta) { return delta - g.L * std::round(delta / g.L); };
                const double dx = wrap(x - c.x * g.L), dy = wrap(y - c.y * g.L);
                const double w = -std::expm1(-(dx * dx + dy * dy) / s2);
                b[i * g.N + j] *= std::pow(w, c.multiplicity);
            }
        }
    return b;
}

namespace detail {

inline std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace detail

/// Periodic spectral Laplacian on an N x N grid of side L.
class SpectralLaplacian {
public:
    SpectralLaplacian(std::size_t n, double l) : n_(n), l_(l), nc_(n / 2 + 1) {
        real_ = fftw_alloc_real(n * n);
        spec_ = fftw_alloc_complex(n * nc_);
        {
            std::lock_guard lock(detail::planner_mutex());
            const int ni = static_cast<int>(n);
            fwd_ = fftw_plan_dft_r2c_2d(ni, ni, real_, spec_, FFTW_ESTIMATE);
            inv_ = fftw_plan_dft_c2r_2d(ni, ni, spec_, real_, FFTW_ESTIMATE);
        }
        k2_.resize(n * nc_);
        const double base = 2.0 * std::numbers::pi / l;
        for (std::size_t i = 0; i < n; ++i) {
            const double ky = base * (i <= n / 2 ? static_cast<double>(i) : static_cast<double>(i) - static_cast<double>(n));
            for (std::size_t j = 0; j < nc_; ++j) {
                const double kx = base * static_cast<double>(j);
                k2_[i * nc_ + j] = kx * kx + ky * ky;
            }
        }
    }
    SpectralLaplacian(const SpectralLaplacian&) = delete;
    SpectralLaplacian& operator=(const SpectralLaplacian&) = delete;
    ~SpectralLaplacian() {
        std::lock_guard lock(detail::planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(inv_);
        fftw_free(real_);
        fftw_free(spec_);
    }

    std::vector<double> apply(const std::vector<double>& u) {
        return filter(u, [](double k2) { return -k2; });
    }

    /// Solves (-Delta + shift) x = r in Fourier space (shift > 0).
    std::vector<double> solve_shifted(const std::vector<double>& r, double shift) {
        return filter(r, [shift](double k2) { return 1.0 / (k2 + shift); });
    }

    /// Fourier coefficients (normalized by N^2) of a real field.
    std::vector<std::complex<double>> forward(const std::vector<double>& u) {
        std::copy(u.begin(), u.end(), real_);
        fftw_execute(fwd_);
        std::vector<std::complex<double>> out(n_ * nc_);
        const double scale = 1.0 / static_cast<double>(n_ * n_);
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = {spec_[k][0] * scale, spec_[k][1] * scale};
        return out;
    }

    std::vector<double> backward(const std::vector<std::complex<double>>& c) {
        for (std::size_t k = 0; k < c.size(); ++k) {
            spec_[k][0] = c[k].real();
            spec_[k][1] = c[k].imag();
        }
        fftw_execute(inv_);
        return std::vector<double>(real_, real_ + n_ * n_);
    }

    std::size_t n() const { return n_; }

private:
    template <class F>
    std::vector<double> filter(const std::vector<double>& u, F symbol) {
        std::copy(u.begin(), u.end(), real_);
        fftw_execute(fwd_);
        const double scale = 1.0 / static_cast<double>(n_ * n_);
        for (std::size_t k = 0; k < n_ * nc_; ++k) {
            const double s = symbol(k2_[k]) * scale;
            spec_[k][0] *= s;
            spec_[k][1] *= s;
        }
        fftw_execute(inv_);
        return std::vector<double>(real_, real_ + n_ * n_);
    }

    std::size_t n_;
    double l_;
    std::size_t nc_;
    double* real_ = nullptr;
    fftw_complex* spec_ = nullptr;
    fftw_plan fwd_ = nullptr, inv_ = nullptr;
    std::vector<double> k2_;
};

namespace detail {

inline double mean(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double sup(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s = std::max(s, std::abs(v));
    return s;
}

/// F(u) = Delta u - (1/2) B e^{2u} + tau0.
inline std::vector<double> residual(SpectralLaplacian& lap, const std::vector<double>& u, const std::vector<double>& b, double tau) {
    auto f = lap.apply(u);
    for (std::size_t k = 0; k < f.size(); ++k) f[k] += tau - 0.5 * b[k] * std::exp(2.0 * u[k]);
    return f;
}

/// Preconditioned CG for (-Delta + w) x = r, preconditioner
/// (-Delta + mean w)^{-1}.
inline std::vector<double> pcg(SpectralLaplacian& lap, const std::vector<double>& w, const std::vector<double>& r,
                               const VortexConfig& cfg) {
    const double shift = std::max(mean(w), 1e-300);
    auto op = [&](const std::vector<double>& x) {
        auto y = lap.apply(x);
        for (std::size_t k = 0; k < y.size(); ++k) y[k] = -y[k] + w[k] * x[k];
        return y;
    };
    std::vector<double> x(r.size(), 0.0), res = r;
    auto z = lap.solve_shifted(res, shift);
    auto p = z;
    double rz = dot(res, z);
    const double stop = cfg.cg_tol * std::sqrt(dot(r, r));
    for (std::size_t it = 0; it < cfg.max_cg && std::sqrt(dot(res, res)) > stop; ++it) {
        const auto ap = op(p);
        const double alpha = rz / dot(p, ap);
        for (std::size_t k = 0; k < x.size(); ++k) {
            x[k] += alpha * p[k];
            res[k] -= alpha * ap[k];
        }
        z = lap.solve_shifted(res, shift);
        const double rz_next = dot(res, z);
        const double beta = rz_next / rz;
        rz = rz_next;
        for (std::size_t k = 0; k < p.size(); ++k) p[k] = z[k] + beta * p[k];
    }
    return x;
}

}  // namespace detail

/// Runs up to `steps` damped Newton iterations from u, stopping early
/// once the sup residual is below cfg.tol.
inline VortexField newton_from(const VortexProblem& p, std::vector<double> u, std::size_t steps, const VortexConfig& cfg) {
    p.validate();
    if (u.size() != p.grid.size()) throw InvalidInput("initial field has the wrong size");
    VortexField out;
    out.N = p.grid.N;
    out.tau0 = tau0(p);
    const auto b = squared_section(p);
    SpectralLaplacian lap(p.grid.N, p.grid.L);
    auto f = detail::residual(lap, u, b, out.tau0);
    std::size_t it = 0;
    while (detail::sup(f) >= cfg.tol && it < steps) {
        std::vector<double> w(u.size());
        for (std::size_t k = 0; k < u.size(); ++k) w[k] = b[k] * std::exp(2.0 * u[k]);
        // J = Delta - w; J delta = -F  <=>  (-Delta + w) delta = F.
        const auto delta = detail::pcg(lap, w, f, cfg);
        for (std::size_t k = 0; k < u.size(); ++k) u[k] += cfg.damping * delta[k];
        f = detail::residual(lap, u, b, out.tau0);
        ++it;
    }
    out.u = std::move(u);
    out.residual_sup = detail::sup(f);
    out.converged = out.residual_sup < cfg.tol;
    out.iterations = it;
    return out;
}

/// Solves Delta u = (1/2) B_0 e^{2u} - tau_0 on the periodic grid by damped
/// Newton from the constant u_0 = (1/2) ln(2 tau_0 / mean B_0).
inline VortexField solve_vortex(const VortexProblem& p, const VortexConfig& cfg = {}) {
    p.validate();
    if (!(cfg.tol > 0) || !(cfg.damping > 0) || cfg.damping > 1)
        throw InvalidInput("tolerance must be positive and damping in (0, 1]");
    const double tau = tau0(p);
    if (tau <= 0)
        throw Infeasible("infeasible: tau0 = " + std::to_string(tau) + " <= 0 (t must exceed " +
                         std::to_string(bradlow_threshold(p.d, p.grid.volume())) + ")");
    const auto b = squared_section(p);
    const double u0 = 0.5 * std::log(2.0 * tau / detail::mean(b));
    return newton_from(p, std::vector<double>(p.grid.size(), u0), cfg.max_newton, cfg);
}

/// |mean((1/2) B_0 e^{2u}) - tau_0|.
inline double quantization_check(const VortexField& f, const VortexProblem& p) {
    if (!f.converged) throw InvalidInput("quantization check needs a converged field");
    const auto b = squared_section(p);
    if (b.size() != f.u.size()) throw InvalidInput("field does not match the problem grid");
    double s = 0.0;
    for (std::size_t k = 0; k < b.size(); ++k) s += 0.5 * b[k] * std::exp(2.0 * f.u[k]);
    return std::abs(s / static_cast<double>(b.size()) - f.tau0);
}

/// Trigonometric interpolation of an N x N field onto an M x M grid
/// (M >= N) by zero padding; the Nyquist modes are split symmetrically.
inline std::vector<double> refine(const std::vector<double>& u, std::size_t n, std::size_t m, double l) {
    if (m < n || u.size() != n * n) throw InvalidInput("refine: bad sizes");
    SpectralLaplacian coarse(n, l), fine(m, l);
    const auto c = coarse.forward(u);
    const std::size_t nc = n / 2 + 1, mc = m / 2 + 1;
    std::vector<std::complex<double>> out(m * mc);
    auto dest_row = [&](std::size_t i) { return i <= n / 2 ? i : m - (n - i); };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < nc; ++j) {
            std::complex<double> v = c[i * nc + j];
            const bool ny_i = (i == n / 2), ny_j = (j == n / 2);
            if (ny_j && m > n) v *= 0.5;
            if (ny_i && m > n) {
                v *= 0.5;
                out[(m - n / 2) * mc + j] += v;
            }
            out[dest_row(i) * mc + j] += v;
        }
    auto r = fine.backward(out);
    return r;
}

struct ScanRow {
    double t = 0.0;
    bool converged = false;
    bool infeasible = false;
    double residual = 0.0;
    std::size_t iterations = 0;
};

/// Solves independent problems at evenly spaced t in [t_from, t_to].
inline std::vector<ScanRow> threshold_scan(const VortexProblem& base, double t_from, double t_to, std::size_t steps,
                                           const VortexConfig& cfg = {}) {
    base.validate();
    if (steps == 0) throw InvalidInput("scan needs at least one step");
    std::vector<std::future<ScanRow>> jobs;
    for (std::size_t k = 0; k < steps; ++k) {
        VortexProblem p = base;
        p.t = steps == 1 ? t_from : t_from + (t_to - t_from) * static_cast<double>(k) / static_cast<double>(steps - 1);
        jobs.push_back(std::async(std::launch::async, [p, cfg] {
            ScanRow row;
            row.t = p.t;
            try {
                const auto f = solve_vortex(p, cfg);
                row.converged = f.converged;
                row.residual = f.residual_sup;
                row.iterations = f.iterations;
            } catch (const Infeasible&) {
                row.infeasible = true;
            }
            return row;
        }));
    }
    std::vector<ScanRow> out;
    for (auto& j : jobs) out.push_back(j.get());
    return out;
}

}  // namespace sfpas::vortex
