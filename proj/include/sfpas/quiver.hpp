#pragma once

#include "sfpas/matrix.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace sfpas {

enum class StabilityVerdict { Stable, StrictlySemistable, Unstable, Borderline };

inline const char* to_string(StabilityVerdict v) {
    switch (v) {
        case StabilityVerdict::Stable: return "Stable";
        case StabilityVerdict::StrictlySemistable: return "StrictlySemistable";
        case StabilityVerdict::Unstable: return "Unstable";
        case StabilityVerdict::Borderline: return "Borderline";
    }
    return "?";
}

}  // namespace sfpas

namespace sfpas::quiver {

struct Arrow {
    std::string id;
    std::size_t source;
    std::size_t target;
};

class Quiver {
public:
    Quiver() = default;
    explicit Quiver(std::vector<std::string> vertices) : vertices_(std::move(vertices)) {
        for (std::size_t i = 0; i < vertices_.size(); ++i)
            for (std::size_t j = 0; j < i; ++j)
                if (vertices_[i] == vertices_[j]) throw InvalidInput("duplicate vertex id '" + vertices_[i] + "'");
    }

    std::size_t add_arrow(std::string id, const std::string& source, const std::string& target) {
        for (const auto& a : arrows_)
            if (a.id == id) throw InvalidInput("duplicate arrow id '" + id + "'");
        arrows_.push_back({std::move(id), vertex_index(source), vertex_index(target)});
        return arrows_.size() - 1;
    }

    std::size_t vertex_index(const std::string& id) const {
        for (std::size_t i = 0; i < vertices_.size(); ++i)
            if (vertices_[i] == id) return i;
        throw InvalidInput("unknown vertex '" + id + "'");
    }
    std::size_t arrow_index(const std::string& id) const {
        for (std::size_t i = 0; i < arrows_.size(); ++i)
            if (arrows_[i].id == id) return i;
        throw InvalidInput("unknown arrow '" + id + "'");
    }

    const std::vector<std::string>& vertices() const { return vertices_; }
    const std::vector<Arrow>& arrows() const { return arrows_; }

private:
    std::vector<std::string> vertices_;
    std::vector<Arrow> arrows_;
};

/// dim W_v per vertex and dim W_a^0 per arrow (twist, default 1).
struct QuiverDims {
    std::vector<std::size_t> vertex_dim;
    std::vector<std::size_t> twist_dim;
};

/// K = product of U(W_v) over a nonempty vertex subset.
struct FullVertexProduct {
    std::vector<std::size_t> vertices;  // sorted, unique
};

/// K = kernel of a torus epimorphism with integer weight matrix v (m x r).
/// Arrow j carries the coordinate z_j; all dimensions are 1.
struct TorusKernel {
    RationalMatrix weights;  // m x r, integer entries, rank m
    RationalMatrix kernel;   // r x (r - m), primitive integer columns spanning ker(v)

    static TorusKernel from_weights(RationalMatrix v) {
        for (const auto& x : v.data())
            if (boost::multiprecision::denominator(x) != 1) throw InvalidInput("torus weight matrix must be integral");
        if (rank_exact(v) != v.rows()) throw InvalidInput("torus weight matrix must have full row rank");
        TorusKernel tk;
        auto basis = kernel_basis(v);
        for (auto& col : basis) {
            // Clear denominators, then divide by the content.
            BigInt lcm = 1, content = 0;
            for (std::size_t i = 0; i < col.rows(); ++i) {
                const BigInt& d = boost::multiprecision::denominator(col(i, 0));
                lcm = lcm / boost::multiprecision::gcd(lcm, d) * d;
            }
            for (std::size_t i = 0; i < col.rows(); ++i) {
                col(i, 0) *= Rational(lcm);
                content = boost::multiprecision::gcd(content, boost::multiprecision::numerator(col(i, 0)));
            }
            if (content != 0)
                for (std::size_t i = 0; i < col.rows(); ++i) col(i, 0) /= Rational(content);
        }
        tk.kernel = columns_to_matrix(basis, v.cols());
        tk.weights = std::move(v);
        return tk;
    }

    std::size_t rays() const { return weights.cols(); }
    std::size_t coker_dim() const { return kernel.cols(); }

    /// Coordinates of p_v(x) in coker((v)^*) with respect to the kernel
    /// basis: K^T x.
    std::vector<Rational> coker_coordinates(const std::vector<Rational>& x) const {
        std::vector<Rational> y(kernel.cols());
        for (std::size_t k = 0; k < kernel.cols(); ++k)
            for (std::size_t j = 0; j < kernel.rows(); ++j) y[k] += kernel(j, k) * x[j];
        return y;
    }
};

using SymmetrySpec = std::variant<FullVertexProduct, TorusKernel>;

/// Level: FullVertexProduct -> one value t_v per vertex of S (same order
/// as FullVertexProduct::vertices); TorusKernel -> a representative
/// a in Q^r of the class p_v(a).
struct Level {
    std::vector<Rational> values;
};

template <class Matrix>
struct QuiverPoint {
    std::vector<Matrix> maps;  // indexed by arrow
};

using ExactPoint = QuiverPoint<ExactMatrix>;
using FloatPoint = QuiverPoint<FloatMatrix>;

inline FloatPoint to_float(const ExactPoint& p) {
    FloatPoint out;
    for (const auto& m : p.maps) out.maps.push_back(sfpas::to_float(m));
    return out;
}

class QuiverProblem {
public:
    QuiverProblem(Quiver quiver, QuiverDims dims, SymmetrySpec symmetry)
        : quiver_(std::move(quiver)), dims_(std::move(dims)), symmetry_(std::move(symmetry)) {
        validate();
    }

    const Quiver& quiver() const { return quiver_; }
    const QuiverDims& dims() const { return dims_; }
    const SymmetrySpec& symmetry() const { return symmetry_; }

    std::size_t rows_of(std::size_t arrow) const {
        const auto& a = quiver_.arrows()[arrow];
        return dims_.vertex_dim[a.target] * dims_.twist_dim[arrow];
    }
    std::size_t cols_of(std::size_t arrow) const { return dims_.vertex_dim[quiver_.arrows()[arrow].source]; }

    /// Position of vertex v inside the symmetry subset, if any.
    std::optional<std::size_t> factor_of(std::size_t vertex) const {
        if (const auto* full = std::get_if<FullVertexProduct>(&symmetry_)) {
            auto it = std::find(full->vertices.begin(), full->vertices.end(), vertex);
            if (it != full->vertices.end()) return static_cast<std::size_t>(it - full->vertices.begin());
        }
        return std::nullopt;
    }

    template <class Matrix>
    void check_point(const QuiverPoint<Matrix>& p) const {
        if (p.maps.size() != quiver_.arrows().size()) throw InvalidInput("point has wrong number of arrow maps");
        for (std::size_t a = 0; a < p.maps.size(); ++a)
            if (static_cast<std::size_t>(p.maps[a].rows()) != rows_of(a) ||
                static_cast<std::size_t>(p.maps[a].cols()) != cols_of(a))
                throw InvalidInput("map for arrow '" + quiver_.arrows()[a].id + "' has shape " +
                                   std::to_string(p.maps[a].rows()) + "x" + std::to_string(p.maps[a].cols()) +
                                   ", expected " + std::to_string(rows_of(a)) + "x" + std::to_string(cols_of(a)));
    }

    void check_level(const Level& lvl) const {
        std::size_t expected = std::visit(
            [](const auto& s) {
                if constexpr (std::is_same_v<std::decay_t<decltype(s)>, FullVertexProduct>)
                    return s.vertices.size();
                else
                    return s.rays();
            },
            symmetry_);
        if (lvl.values.size() != expected)
            throw InvalidInput("level has " + std::to_string(lvl.values.size()) + " entries, expected " +
                               std::to_string(expected));
    }

    /// Real dimension of the Lie algebra of K.
    std::size_t lie_dimension() const {
        if (const auto* full = std::get_if<FullVertexProduct>(&symmetry_)) {
            std::size_t n = 0;
            for (auto v : full->vertices) n += dims_.vertex_dim[v] * dims_.vertex_dim[v];
            return n;
        }
        return std::get<TorusKernel>(symmetry_).coker_dim();
    }

private:
    void validate() {
        const std::size_t nv = quiver_.vertices().size(), na = quiver_.arrows().size();
        if (dims_.vertex_dim.size() != nv) throw InvalidInput("dims must cover every vertex");
        if (dims_.twist_dim.empty()) dims_.twist_dim.assign(na, 1);
        if (dims_.twist_dim.size() != na) throw InvalidInput("twists must cover every arrow");
        for (auto d : dims_.vertex_dim)
            if (d == 0) throw InvalidInput("vertex dimensions must be positive");
        for (auto d : dims_.twist_dim)
            if (d == 0) throw InvalidInput("twist dimensions must be positive");
        if (auto* full = std::get_if<FullVertexProduct>(&symmetry_)) {
            if (full->vertices.empty()) throw InvalidInput("symmetry vertex subset must be nonempty");
            std::sort(full->vertices.begin(), full->vertices.end());
            if (std::adjacent_find(full->vertices.begin(), full->vertices.end()) != full->vertices.end())
                throw InvalidInput("symmetry vertex subset has duplicates");
            if (full->vertices.back() >= nv) throw InvalidInput("symmetry vertex out of range");
        } else {
            const auto& tk = std::get<TorusKernel>(symmetry_);
            if (tk.rays() != na) throw InvalidInput("torus kernel needs one weight column per arrow");
            for (auto d : dims_.vertex_dim)
                if (d != 1) throw InvalidInput("torus kernel symmetry requires all vertex dimensions 1");
            for (auto d : dims_.twist_dim)
                if (d != 1) throw InvalidInput("torus kernel symmetry requires all twist dimensions 1");
        }
    }

    Quiver quiver_;
    QuiverDims dims_;
    SymmetrySpec symmetry_;
};

// ---------------------------------------------------------------------------
// Matrix helpers shared by the exact and float paths

namespace detail {

template <class Matrix>
struct Ops;

template <>
struct Ops<ExactMatrix> {
    using Scalar = ExactScalar;
    static ExactMatrix zero(std::size_t r, std::size_t c) { return ExactMatrix(r, c); }
    static ExactMatrix identity(std::size_t n) { return ExactMatrix::identity(n); }
    static Scalar real(const Rational& q) { return ExactScalar(q); }
    static Scalar half() { return ExactScalar(Rational(1, 2)); }
    static std::size_t rows(const ExactMatrix& m) { return m.rows(); }
    static std::size_t cols(const ExactMatrix& m) { return m.cols(); }
    static Scalar get(const ExactMatrix& m, std::size_t i, std::size_t j) { return m(i, j); }
    static void set(ExactMatrix& m, std::size_t i, std::size_t j, Scalar s) { m(i, j) = std::move(s); }
};

template <>
struct Ops<FloatMatrix> {
    using Scalar = std::complex<double>;
    static FloatMatrix zero(std::size_t r, std::size_t c) {
        return FloatMatrix::Zero(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
    static FloatMatrix identity(std::size_t n) {
        return FloatMatrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    }
    static Scalar real(const Rational& q) { return {to_double(q), 0.0}; }
    static Scalar half() { return {0.5, 0.0}; }
    static std::size_t rows(const FloatMatrix& m) { return static_cast<std::size_t>(m.rows()); }
    static std::size_t cols(const FloatMatrix& m) { return static_cast<std::size_t>(m.cols()); }
    static Scalar get(const FloatMatrix& m, std::size_t i, std::size_t j) {
        return m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    static void set(FloatMatrix& m, std::size_t i, std::size_t j, Scalar s) {
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s;
    }
};

/// Partial trace over the twist factor: (d*tw) x (d*tw) -> d x d, with
/// row index i*tw + k for W_t (x) W^0.
template <class Matrix>
Matrix partial_trace(const Matrix& m, std::size_t d, std::size_t tw) {
    using O = Ops<Matrix>;
    if (tw == 1) return m;
    Matrix out = O::zero(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            typename O::Scalar acc{};
            for (std::size_t k = 0; k < tw; ++k) acc += O::get(m, i * tw + k, j * tw + k);
            O::set(out, i, j, acc);
        }
    return out;
}

/// x (x) Id_tw in the same index convention.
template <class Matrix>
Matrix kron_identity(const Matrix& x, std::size_t tw) {
    using O = Ops<Matrix>;
    if (tw == 1) return x;
    const std::size_t d = O::rows(x);
    Matrix out = O::zero(d * tw, d * tw);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            for (std::size_t k = 0; k < tw; ++k) O::set(out, i * tw + k, j * tw + k, O::get(x, i, j));
    return out;
}

inline double frob2(const FloatMatrix& m) { return m.squaredNorm(); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Moment map

/// Moment map value with the factor i dropped. FullVertexProduct: one
/// Hermitian block per vertex of S,
///   (1/2)(sum_{s(a)=v} f_a^* f_a - sum_{t(a)=v} Tr_{W_a^0}(f_a f_a^*)) - t_v Id.
/// TorusKernel: one 1x1 block per cokernel coordinate of
///   p_v((1/2)|z_j|^2 - a_j).
template <class Matrix>
HermitianTuple<Matrix> moment_map(const QuiverProblem& problem, const QuiverPoint<Matrix>& p, const Level& lvl) {
    using O = detail::Ops<Matrix>;
    problem.check_point(p);
    problem.check_level(lvl);
    const auto& arrows = problem.quiver().arrows();
    HermitianTuple<Matrix> mu;

    if (const auto* tk = std::get_if<TorusKernel>(&problem.symmetry())) {
        const std::size_t r = tk->rays();
        std::vector<typename O::Scalar> x(r);
        for (std::size_t j = 0; j < r; ++j) {
            const auto z = O::get(p.maps[j], 0, 0);
            using std::conj;
            x[j] = O::half() * z * conj(z) - O::real(lvl.values[j]);
        }
        for (std::size_t k = 0; k < tk->coker_dim(); ++k) {
            typename O::Scalar y{};
            for (std::size_t j = 0; j < r; ++j) y += O::real(tk->kernel(j, k)) * x[j];
            Matrix block = O::zero(1, 1);
            O::set(block, 0, 0, y);
            mu.blocks.push_back(std::move(block));
        }
        return mu;
    }

    const auto& full = std::get<FullVertexProduct>(problem.symmetry());
    for (std::size_t k = 0; k < full.vertices.size(); ++k) {
        const std::size_t v = full.vertices[k];
        const std::size_t d = problem.dims().vertex_dim[v];
        Matrix acc = O::zero(d, d);
        for (std::size_t a = 0; a < arrows.size(); ++a) {
            if (arrows[a].source == v) acc = acc + adjoint(p.maps[a]) * p.maps[a];
            if (arrows[a].target == v)
                acc = acc - detail::partial_trace(Matrix(p.maps[a] * adjoint(p.maps[a])), d, problem.dims().twist_dim[a]);
        }
        mu.blocks.push_back(O::half() * acc - O::real(lvl.values[k]) * O::identity(d));
    }
    return mu;
}

inline double energy(const FloatHermitianTuple& mu) {
    double e = 0.0;
    for (const auto& b : mu.blocks) e += b.squaredNorm();
    return e;
}

/// <A, B> = sum_v Re Tr(A_v B_v).
inline double pairing(const FloatHermitianTuple& a, const FloatHermitianTuple& b) {
    if (a.blocks.size() != b.blocks.size()) throw InvalidInput("pairing: block count mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < a.blocks.size(); ++k) s += (a.blocks[k] * b.blocks[k]).trace().real();
    return s;
}

/// Real inner product Re h(p, q) = Re sum_a Tr(p_a^* q_a).
inline double real_inner(const FloatPoint& p, const FloatPoint& q) {
    double s = 0.0;
    for (std::size_t a = 0; a < p.maps.size(); ++a) s += (p.maps[a].adjoint() * q.maps[a]).trace().real();
    return s;
}

/// Symplectic form omega(p, q) = -Im h(p, q).
inline double symplectic_form(const FloatPoint& p, const FloatPoint& q) {
    double s = 0.0;
    for (std::size_t a = 0; a < p.maps.size(); ++a) s += (p.maps[a].adjoint() * q.maps[a]).trace().imag();
    return -s;
}

inline double norm(const FloatPoint& p) { return std::sqrt(real_inner(p, p)); }

inline FloatPoint axpy(const FloatPoint& p, double s, const FloatPoint& d) {
    FloatPoint out = p;
    for (std::size_t a = 0; a < out.maps.size(); ++a) out.maps[a] += s * d.maps[a];
    return out;
}

/// Fundamental vector field of a Hermitian xi (the Lie algebra element is
/// -i xi): the derivative of exp(-i s xi) . p at s = 0. Arrow a transforms
/// as f_a -> (g_t (x) 1) f_a g_s^{-1}, so the field is
///   i f_a xi_{s(a)} - i (xi_{t(a)} (x) 1) f_a.
/// For TorusKernel, xi holds one 1x1 block per kernel coordinate c_k and
/// z_j moves by i (K c)_j z_j.
inline FloatPoint infinitesimal_action(const QuiverProblem& problem, const FloatPoint& p, const FloatHermitianTuple& xi) {
    const std::complex<double> I(0.0, 1.0);
    const auto& arrows = problem.quiver().arrows();
    FloatPoint out = p;
    if (const auto* tk = std::get_if<TorusKernel>(&problem.symmetry())) {
        for (std::size_t j = 0; j < tk->rays(); ++j) {
            double weight = 0.0;
            for (std::size_t k = 0; k < tk->coker_dim(); ++k) weight += to_double(tk->kernel(j, k)) * xi.blocks[k](0, 0).real();
            out.maps[j] = I * weight * p.maps[j];
        }
        return out;
    }
    for (std::size_t a = 0; a < arrows.size(); ++a) {
        FloatMatrix v = FloatMatrix::Zero(p.maps[a].rows(), p.maps[a].cols());
        if (auto k = problem.factor_of(arrows[a].source)) v += I * p.maps[a] * xi.blocks[*k];
        if (auto k = problem.factor_of(arrows[a].target))
            v -= I * detail::kron_identity(xi.blocks[*k], problem.dims().twist_dim[a]) * p.maps[a];
        out.maps[a] = v;
    }
    return out;
}

/// Gradient of E = ||mu||^2 with respect to Re h. It lies in the
/// imaginary (complexified-orbit) directions: grad = 2 J X_mu.
inline FloatPoint energy_gradient(const QuiverProblem& problem, const FloatPoint& p, const FloatHermitianTuple& mu) {
    const auto& arrows = problem.quiver().arrows();
    FloatPoint g = p;
    if (const auto* tk = std::get_if<TorusKernel>(&problem.symmetry())) {
        for (std::size_t j = 0; j < tk->rays(); ++j) {
            double weight = 0.0;
            for (std::size_t k = 0; k < tk->coker_dim(); ++k) weight += to_double(tk->kernel(j, k)) * mu.blocks[k](0, 0).real();
            g.maps[j] = 2.0 * weight * p.maps[j];
        }
        return g;
    }
    for (std::size_t a = 0; a < arrows.size(); ++a) {
        FloatMatrix v = FloatMatrix::Zero(p.maps[a].rows(), p.maps[a].cols());
        if (auto k = problem.factor_of(arrows[a].source)) v += p.maps[a] * mu.blocks[*k];
        if (auto k = problem.factor_of(arrows[a].target))
            v -= detail::kron_identity(mu.blocks[*k], problem.dims().twist_dim[a]) * p.maps[a];
        g.maps[a] = 2.0 * v;
    }
    return g;
}

/// Orthonormal basis of i k (Hermitian blocks, or unit kernel coordinates
/// for a torus).
inline std::vector<FloatHermitianTuple> lie_algebra_basis(const QuiverProblem& problem) {
    std::vector<FloatHermitianTuple> basis;
    if (const auto* tk = std::get_if<TorusKernel>(&problem.symmetry())) {
        for (std::size_t k = 0; k < tk->coker_dim(); ++k) {
            FloatHermitianTuple xi;
            for (std::size_t l = 0; l < tk->coker_dim(); ++l) xi.blocks.push_back(FloatMatrix::Constant(1, 1, l == k ? 1.0 : 0.0));
            basis.push_back(std::move(xi));
        }
        return basis;
    }
    const auto& full = std::get<FullVertexProduct>(problem.symmetry());
    const double r = 1.0 / std::sqrt(2.0);
    for (std::size_t f = 0; f < full.vertices.size(); ++f) {
        const auto d = static_cast<Eigen::Index>(problem.dims().vertex_dim[full.vertices[f]]);
        auto blank = [&] {
            FloatHermitianTuple xi;
            for (auto v : full.vertices) {
                const auto dv = static_cast<Eigen::Index>(problem.dims().vertex_dim[v]);
                xi.blocks.push_back(FloatMatrix::Zero(dv, dv));
            }
            return xi;
        };
        for (Eigen::Index i = 0; i < d; ++i)
            for (Eigen::Index j = i; j < d; ++j) {
                if (i == j) {
                    auto xi = blank();
                    xi.blocks[f](i, i) = 1.0;
                    basis.push_back(std::move(xi));
                    continue;
                }
                auto sym = blank();
                sym.blocks[f](i, j) = r;
                sym.blocks[f](j, i) = r;
                basis.push_back(std::move(sym));
                auto anti = blank();
                anti.blocks[f](i, j) = std::complex<double>(0.0, r);
                anti.blocks[f](j, i) = std::complex<double>(0.0, -r);
                basis.push_back(std::move(anti));
            }
    }
    return basis;
}

/// Smallest singular value of xi -> xi_F(p) on an orthonormal basis of i k.
/// Zero (up to rounding) iff the stabilizer of p has positive dimension.
inline double stabilizer_sigma_min(const QuiverProblem& problem, const FloatPoint& p) {
    const auto basis = lie_algebra_basis(problem);
    if (basis.empty()) return std::numeric_limits<double>::infinity();
    Eigen::Index real_dim = 0;
    for (const auto& m : p.maps) real_dim += 2 * m.size();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(real_dim, static_cast<Eigen::Index>(basis.size()));
    for (std::size_t c = 0; c < basis.size(); ++c) {
        const FloatPoint v = infinitesimal_action(problem, p, basis[c]);
        Eigen::Index row = 0;
        for (const auto& m : v.maps)
            for (Eigen::Index k = 0; k < m.size(); ++k) {
                a(row++, static_cast<Eigen::Index>(c)) = m.data()[k].real();
                a(row++, static_cast<Eigen::Index>(c)) = m.data()[k].imag();
            }
    }
    if (a.rows() < a.cols()) return 0.0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    return svd.singularValues()(svd.singularValues().size() - 1);
}

// ---------------------------------------------------------------------------
// Kempf-Ness flow

struct FlowConfig {
    double step = 0.1;
    std::size_t max_iter = 100000;
    double tol = 1e-8;
    std::uint64_t seed = 0;
    /// Threshold on the smallest singular value of the infinitesimal
    /// action separating Stable from StrictlySemistable (heuristic).
    double stabilizer_threshold = 1e-6;
    /// Relative singular-value cutoff fixing the rank of each arrow map
    /// at the start of the flow; 0 disables rank enforcement.
    double rank_tol = 1e-9;
    bool record_trace = false;
};

struct FlowResult {
    FloatPoint final_point;
    double final_energy = 0.0;
    std::size_t iterations = 0;
    StabilityVerdict verdict = StabilityVerdict::Borderline;
    double sigma_min = 0.0;
    std::string termination;  // "converged", "plateau", "max_iter", "divergence"
    std::vector<double> energy_trace;  // accepted energies, when requested
};

/// Verdict from a final energy. Energies below tol^2 count as reaching
/// the zero set; energies above 10 * tol at termination count as a
/// positive plateau; anything in between is Borderline.
inline StabilityVerdict classify_energy(double energy, double sigma_min, const FlowConfig& cfg) {
    if (!std::isfinite(energy)) return StabilityVerdict::Unstable;
    if (energy < cfg.tol * cfg.tol)
        return sigma_min > cfg.stabilizer_threshold ? StabilityVerdict::Stable : StabilityVerdict::StrictlySemistable;
    if (energy > 10.0 * cfg.tol) return StabilityVerdict::Unstable;
    return StabilityVerdict::Borderline;
}

/// Moves p by the complexified group element exp(2 h mu): arrow a becomes
/// (exp(2h mu_t) (x) 1) f_a exp(-2h mu_s). To first order this is
/// p - h grad E, and it stays on the orbit of p.
inline FloatPoint group_step(const QuiverProblem& problem, const FloatPoint& p, const FloatHermitianTuple& mu, double h) {
    FloatPoint out = p;
    if (const auto* tk = std::get_if<TorusKernel>(&problem.symmetry())) {
        for (std::size_t j = 0; j < tk->rays(); ++j) {
            double weight = 0.0;
            for (std::size_t k = 0; k < tk->coker_dim(); ++k) weight += to_double(tk->kernel(j, k)) * mu.blocks[k](0, 0).real();
            out.maps[j] = std::exp(-2.0 * h * weight) * p.maps[j];
        }
        return out;
    }
    std::vector<FloatMatrix> grow, shrink;
    for (const auto& m : mu.blocks) {
        Eigen::SelfAdjointEigenSolver<FloatMatrix> es(m);
        const Eigen::VectorXd lam = es.eigenvalues();
        const FloatMatrix& v = es.eigenvectors();
        grow.push_back(v * (2.0 * h * lam).array().exp().matrix().cast<std::complex<double>>().asDiagonal() * v.adjoint());
        shrink.push_back(v * (-2.0 * h * lam).array().exp().matrix().cast<std::complex<double>>().asDiagonal() * v.adjoint());
    }
    const auto& arrows = problem.quiver().arrows();
    for (std::size_t a = 0; a < arrows.size(); ++a) {
        if (auto k = problem.factor_of(arrows[a].source)) out.maps[a] = out.maps[a] * shrink[*k];
        if (auto k = problem.factor_of(arrows[a].target))
            out.maps[a] = detail::kron_identity(grow[*k], problem.dims().twist_dim[a]) * out.maps[a];
    }
    return out;
}

namespace detail {

inline std::size_t numerical_rank(const FloatMatrix& m, double rel_tol) {
    if (m.size() == 0) return 0;
    Eigen::JacobiSVD<FloatMatrix> svd(m);
    const auto& s = svd.singularValues();
    std::size_t r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > rel_tol * s(0)) ++r;
    return s(0) > 0 ? r : 0;
}

inline void truncate_rank(FloatMatrix& m, std::size_t rank) {
    if (rank >= static_cast<std::size_t>(std::min(m.rows(), m.cols()))) return;
    Eigen::JacobiSVD<FloatMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::VectorXd s = svd.singularValues();
    for (Eigen::Index i = static_cast<Eigen::Index>(rank); i < s.size(); ++i) s(i) = 0.0;
    m = svd.matrixU() * s.cast<std::complex<double>>().asDiagonal() * svd.matrixV().adjoint();
}

}  // namespace detail

/// Descent on E(p) = ||mu(p)||^2 by group steps with Armijo backtracking
/// (c = 1e-4, halving). Each iteration starts from min(cfg.step, 2 * last
/// accepted step), so accepted energies never increase. The rank of each
/// arrow map is an orbit invariant: it is read off the start point (with
/// cfg.rank_tol) and re-imposed after every step, which keeps rounding
/// noise from being amplified along destabilizing directions.
inline FlowResult kempf_ness_flow(const QuiverProblem& problem, const FloatPoint& start, const Level& lvl,
                                  const FlowConfig& cfg) {
    problem.check_point(start);
    constexpr double armijo = 1e-4;
    constexpr std::size_t window = 100;
    FlowResult res;
    FloatPoint p = start;
    std::vector<std::size_t> ranks;
    for (const auto& m : p.maps) ranks.push_back(cfg.rank_tol > 0 ? detail::numerical_rank(m, cfg.rank_tol) : SIZE_MAX);
    for (std::size_t a = 0; a < p.maps.size(); ++a) detail::truncate_rank(p.maps[a], ranks[a]);
    FloatHermitianTuple mu = moment_map(problem, p, lvl);
    double e = energy(mu);
    std::deque<double> history{e};
    if (cfg.record_trace) res.energy_trace.push_back(e);
    double step = cfg.step;
    res.termination = "max_iter";
    std::size_t it = 0;
    for (; it < cfg.max_iter; ++it) {
        if (!std::isfinite(e)) {
            res.termination = "divergence";
            break;
        }
        if (e < cfg.tol * cfg.tol) {
            res.termination = "converged";
            break;
        }
        const FloatPoint g = energy_gradient(problem, p, mu);
        const double g2 = real_inner(g, g);
        if (g2 == 0.0) {
            res.termination = "plateau";
            break;
        }
        step = std::min(cfg.step, 2.0 * step);
        bool accepted = false;
        while (step > 1e-300) {
            FloatPoint trial = group_step(problem, p, mu, step);
            for (std::size_t a = 0; a < trial.maps.size(); ++a) detail::truncate_rank(trial.maps[a], ranks[a]);
            FloatHermitianTuple trial_mu = moment_map(problem, trial, lvl);
            const double te = energy(trial_mu);
            if (std::isfinite(te) && te <= e - armijo * step * g2) {
                p = std::move(trial);
                mu = std::move(trial_mu);
                e = te;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            res.termination = "plateau";
            break;
        }
        if (cfg.record_trace) res.energy_trace.push_back(e);
        history.push_back(e);
        if (history.size() > window + 1) history.pop_front();
        if (history.size() == window + 1 && history.front() - e <= 1e-14 * history.front()) {
            res.termination = "plateau";
            ++it;
            break;
        }
    }
    res.iterations = it;
    res.final_point = std::move(p);
    res.final_energy = e;
    if (!std::isfinite(e)) res.termination = "divergence";
    res.sigma_min = e < cfg.tol * cfg.tol ? stabilizer_sigma_min(problem, res.final_point) : 0.0;
    res.verdict = classify_energy(e, res.sigma_min, cfg);
    return res;
}

inline StabilityVerdict numerical_stability_verdict(const QuiverProblem& problem, const FloatPoint& p, const Level& lvl,
                                                    const FlowConfig& cfg) {
    return kempf_ness_flow(problem, p, lvl, cfg).verdict;
}

/// Relative error of the moment-map identity
///   d/ds <mu(p + s w), xi> |_{s=0} = omega(xi_F(p), w),
/// left side by a central difference with step h.
inline double hamiltonian_check(const QuiverProblem& problem, const FloatPoint& p, const Level& lvl,
                                const FloatHermitianTuple& xi, const FloatPoint& w, double h) {
    if (!(h > 0.0 && h <= 1e-3)) throw InvalidInput("hamiltonian_check: h must lie in (0, 1e-3]");
    problem.check_point(w);
    const double plus = pairing(moment_map(problem, axpy(p, h, w), lvl), xi);
    const double minus = pairing(moment_map(problem, axpy(p, -h, w), lvl), xi);
    const double lhs = (plus - minus) / (2.0 * h);
    const double rhs = symplectic_form(infinitesimal_action(problem, p, xi), w);
    return std::abs(lhs - rhs) / (std::abs(lhs) + std::abs(rhs) + 1e-12);
}

/// Entries i.i.d. standard complex Gaussian, then scaled to unit norm.
template <class Rng>
FloatPoint random_point(const QuiverProblem& problem, Rng& rng) {
    std::normal_distribution<double> normal;
    FloatPoint p;
    const std::size_t na = problem.quiver().arrows().size();
    for (std::size_t a = 0; a < na; ++a) {
        FloatMatrix m(static_cast<Eigen::Index>(problem.rows_of(a)), static_cast<Eigen::Index>(problem.cols_of(a)));
        for (Eigen::Index k = 0; k < m.size(); ++k) {
            const double re = normal(rng);
            const double im = normal(rng);
            m.data()[k] = {re, im};
        }
        p.maps.push_back(std::move(m));
    }
    const double n = norm(p);
    if (n > 0)
        for (auto& m : p.maps) m /= n;
    return p;
}

/// Random Hermitian tuple in i k with i.i.d. Gaussian coordinates.
template <class Rng>
FloatHermitianTuple random_lie_element(const QuiverProblem& problem, Rng& rng) {
    std::normal_distribution<double> normal;
    const auto basis = lie_algebra_basis(problem);
    FloatHermitianTuple xi = basis.front();
    for (auto& b : xi.blocks) b.setZero();
    for (const auto& e : basis) {
        const double c = normal(rng);
        for (std::size_t k = 0; k < xi.blocks.size(); ++k) xi.blocks[k] += c * e.blocks[k];
    }
    return xi;
}

inline Level zero_level(const QuiverProblem& problem) {
    Level lvl;
    if (const auto* full = std::get_if<FullVertexProduct>(&problem.symmetry()))
        lvl.values.assign(full->vertices.size(), Rational(0));
    else
        lvl.values.assign(std::get<TorusKernel>(problem.symmetry()).rays(), Rational(0));
    return lvl;
}

/// Searches for a nonzero solution of mu_0(p) = 0 by running the flow at
/// level 0 from `trials` random unit points. Returns a unit-normalized
/// witness if some flow limit has energy below tol^2 while its norm stays
/// above 1e-2. A nullopt result does not prove properness.
inline std::optional<FloatPoint> properness_refuter(const QuiverProblem& problem, const FlowConfig& cfg,
                                                    std::size_t trials) {
    std::mt19937_64 rng(cfg.seed);
    const Level lvl = zero_level(problem);
    for (std::size_t t = 0; t < trials; ++t) {
        const FloatPoint start = random_point(problem, rng);
        const FlowResult res = kempf_ness_flow(problem, start, lvl, cfg);
        const double n = norm(res.final_point);
        if (res.final_energy < cfg.tol * cfg.tol && n > 1e-2) {
            FloatPoint w = res.final_point;
            for (auto& m : w.maps) m /= n;
            return w;
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Builders for the standard families

/// Chain V_1 -> V_2 -> ... -> V_{m+1}; K acts on the first m vertices.
inline QuiverProblem flag_problem(const std::vector<std::size_t>& dims) {
    if (dims.size() < 2) throw InvalidInput("flag chain needs at least two spaces");
    std::vector<std::string> names;
    for (std::size_t i = 0; i < dims.size(); ++i) names.push_back("V" + std::to_string(i + 1));
    Quiver q(names);
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) q.add_arrow("f" + std::to_string(i + 1), names[i], names[i + 1]);
    FullVertexProduct s;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) s.vertices.push_back(i);
    return QuiverProblem(std::move(q), QuiverDims{dims, {}}, s);
}

/// Hom(C^r, C^{r0}) with K = U(r) on the source.
inline QuiverProblem grassmann_problem(std::size_t r, std::size_t r0) { return flag_problem({r, r0}); }

/// U =k,l=> V <=m= W with K = U(U) x U(V). Level values: (t, -s).
inline QuiverProblem stromme_problem(std::size_t u, std::size_t v, std::size_t w) {
    Quiver q({"U", "V", "W"});
    q.add_arrow("k", "U", "V");
    q.add_arrow("l", "U", "V");
    q.add_arrow("m", "W", "V");
    return QuiverProblem(std::move(q), QuiverDims{{u, v, w}, {}}, FullVertexProduct{{0, 1}});
}

/// Star quiver with one framing vertex and r arrows, torus kernel of v.
inline QuiverProblem toric_problem(const RationalMatrix& v) {
    std::vector<std::string> names{"O"};
    for (std::size_t j = 0; j < v.cols(); ++j) names.push_back("C" + std::to_string(j + 1));
    Quiver q(names);
    for (std::size_t j = 0; j < v.cols(); ++j) q.add_arrow("z" + std::to_string(j + 1), "C" + std::to_string(j + 1), "O");
    return QuiverProblem(std::move(q), QuiverDims{std::vector<std::size_t>(v.cols() + 1, 1), {}},
                         TorusKernel::from_weights(v));
}

}  // namespace sfpas::quiver
