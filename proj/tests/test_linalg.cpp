#include "sfpas/json_io.hpp"
#include "sfpas/lp.hpp"
#include "sfpas/matrix.hpp"
#include "sfpas/polynomial.hpp"

#include <gtest/gtest.h>

#include <Eigen/SVD>

#include <random>

using namespace sfpas;

namespace {

ExactMatrix int_matrix(std::initializer_list<std::initializer_list<int>> rows) {
    std::size_t r = rows.size(), c = rows.begin()->size();
    ExactMatrix m(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
        std::size_t j = 0;
        for (int x : row) m(i, j++) = ExactScalar(Rational(x));
        ++i;
    }
    return m;
}

ExactMatrix random_int_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c, int lo, int hi, bool complex) {
    std::uniform_int_distribution<int> dist(lo, hi);
    ExactMatrix m(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) {
            Rational im = complex ? Rational(dist(rng)) : Rational(0);
            m(i, j) = ExactScalar(Rational(dist(rng)), im);
        }
    return m;
}

std::size_t float_rank(const ExactMatrix& m) {
    if (m.rows() == 0 || m.cols() == 0) return 0;
    Eigen::JacobiSVD<FloatMatrix> svd(to_float(m));
    std::size_t r = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > 1e-9) ++r;
    return r;
}

}  // namespace

TEST(Rational, ParseAndPrint) {
    EXPECT_EQ(to_string(parse_rational("6/4")), "3/2");
    EXPECT_EQ(to_string(parse_rational("-2")), "-2");
    EXPECT_EQ(to_string(parse_rational("0/5")), "0");
    EXPECT_THROW(parse_rational("1/0"), InvalidInput);
    EXPECT_THROW(parse_rational("x"), InvalidInput);
    EXPECT_THROW(parse_rational(""), InvalidInput);
}

TEST(ExactScalar, Arithmetic) {
    ExactScalar i(Rational(0), Rational(1));
    EXPECT_EQ(i * i, ExactScalar(Rational(-1)));
    ExactScalar z(Rational(3), Rational(4));
    EXPECT_EQ(z * z.conj(), ExactScalar(Rational(25)));
    EXPECT_EQ(ExactScalar(Rational(1)) / z, ExactScalar(Rational(3, 25), Rational(-4, 25)));
    EXPECT_THROW(z / ExactScalar(), std::domain_error);
}

TEST(RankExact, SpecExamples) {
    EXPECT_EQ(rank_exact(ExactMatrix::identity(2)), 2u);
    EXPECT_EQ(rank_exact(ExactMatrix(3, 2)), 0u);
    EXPECT_EQ(rank_exact(int_matrix({{1, 0}, {0, 1}, {1, 1}})), 2u);
}

TEST(RankExact, AgreesWithSingularValues) {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> dim(1, 6);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t r = dim(rng), c = dim(rng);
        ExactMatrix m = random_int_matrix(rng, r, c, -5, 5, trial % 2 == 1);
        // Force rank deficiency in a third of the cases.
        if (trial % 3 == 0 && r > 1)
            for (std::size_t j = 0; j < c; ++j) m(r - 1, j) = m(0, j) * ExactScalar(Rational(2)) - m(r - 2, j);
        EXPECT_EQ(rank_exact(m), float_rank(m)) << "trial " << trial;
    }
}

TEST(RankExact, AdjointInvariant) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        ExactMatrix m = random_int_matrix(rng, 1 + trial % 5, 1 + (trial / 5) % 5, -2, 2, true);
        EXPECT_EQ(rank_exact(m), rank_exact(adjoint(m)));
    }
}

TEST(KernelBasis, SpecExamples) {
    EXPECT_TRUE(kernel_basis(ExactMatrix::identity(3)).empty());
    EXPECT_EQ(kernel_basis(ExactMatrix(2, 2)).size(), 2u);
    auto k = kernel_basis(int_matrix({{1, 1}}));
    ASSERT_EQ(k.size(), 1u);
    EXPECT_EQ(k[0](0, 0), ExactScalar(Rational(-1)) * k[0](1, 0));
    EXPECT_FALSE(k[0](1, 0).is_zero());
}

TEST(KernelBasis, RankNullity) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t r = 1 + trial % 5, c = 1 + (trial / 5) % 6;
        ExactMatrix m = random_int_matrix(rng, r, c, -2, 2, trial % 2 == 0);
        auto basis = kernel_basis(m);
        EXPECT_EQ(c - rank_exact(m), basis.size());
        for (const auto& b : basis) EXPECT_TRUE((m * b).is_zero());
    }
}

TEST(HermitianEigen, Examples) {
    FloatMatrix d = FloatMatrix::Zero(2, 2);
    d(0, 0) = 1;
    d(1, 1) = 2;
    auto e = hermitian_eigen(d);
    EXPECT_NEAR(e.eigenvalues[0], 1.0, 1e-14);
    EXPECT_NEAR(e.eigenvalues[1], 2.0, 1e-14);

    FloatMatrix x = FloatMatrix::Zero(2, 2);
    x(0, 1) = x(1, 0) = 1;
    e = hermitian_eigen(x);
    EXPECT_NEAR(e.eigenvalues[0], -1.0, 1e-14);
    EXPECT_NEAR(e.eigenvalues[1], 1.0, 1e-14);

    e = hermitian_eigen(FloatMatrix::Zero(3, 3));
    for (double l : e.eigenvalues) EXPECT_EQ(l, 0.0);

    FloatMatrix bad = FloatMatrix::Zero(2, 2);
    bad(0, 1) = 1;
    EXPECT_THROW(hermitian_eigen(bad), std::invalid_argument);
}

TEST(HermitianEigen, Reconstruction) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n;
    const double tol = 1e-12;
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index k = 1 + trial % 6;
        FloatMatrix a(k, k);
        for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = {n(rng), n(rng)};
        FloatMatrix h = (a + a.adjoint()) / 2.0;
        auto e = hermitian_eigen(h, tol);
        Eigen::VectorXd lam = Eigen::Map<Eigen::VectorXd>(e.eigenvalues.data(), k);
        FloatMatrix rec = e.eigenvectors * lam.cast<std::complex<double>>().asDiagonal() * e.eigenvectors.adjoint();
        EXPECT_LE((rec - h).norm(), 10 * tol * std::max(1.0, h.norm()) * 10);
        for (std::size_t i = 1; i < e.eigenvalues.size(); ++i) EXPECT_LE(e.eigenvalues[i - 1], e.eigenvalues[i]);
    }
}

TEST(Projector, IdempotentAndSelfAdjoint) {
    ExactMatrix b = int_matrix({{1, 0}, {1, 1}, {0, 2}});
    ExactMatrix p = orthogonal_projector(b);
    EXPECT_EQ(p * p, p);
    EXPECT_EQ(adjoint(p), p);
    EXPECT_EQ(p * b, b);
}

TEST(Polynomial, SubresultantGcd) {
    using P = Polynomial<Rational>;
    // (x - 1)(x + 2) and (x - 1)(x - 3)
    P a(std::vector<Rational>{-2, 1, 1});
    P b(std::vector<Rational>{3, -4, 1});
    P g = subresultant_gcd(a, b);
    EXPECT_EQ(g, P(std::vector<Rational>{-1, 1}));
    EXPECT_EQ(subresultant_gcd(a, P(Rational(3))).degree(), 0);
    EXPECT_EQ(subresultant_gcd(P(), b), b.monic());

    // Products of random linear factors: the gcd is the product of the
    // shared factors.
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<int> root(-4, 4);
    for (int trial = 0; trial < 50; ++trial) {
        P common(Rational(1)), x(Rational(1)), y(Rational(1));
        std::vector<int> ra, rb;
        for (int k = 0; k < 2; ++k) common *= P(std::vector<Rational>{Rational(-root(rng)), 1});
        x = common * P(std::vector<Rational>{Rational(10), 1});
        y = common * P(std::vector<Rational>{Rational(-10), 1}) * P(std::vector<Rational>{Rational(11), 1});
        EXPECT_EQ(subresultant_gcd(x, y), common.monic());
    }
}

TEST(Polynomial, BareissOverPolynomials) {
    using P = ExactPolynomial;
    const P x = P::monomial(ExactScalar(Rational(1)), 1);
    DenseMatrix<P> m(2, 2);
    m(0, 0) = x;
    m(0, 1) = P(1);
    m(1, 0) = P(1);
    m(1, 1) = x;
    // det = x^2 - 1
    P det = bareiss_determinant(m);
    EXPECT_EQ(det, x * x - P(1));
    EXPECT_EQ(bareiss_rank(m), 2u);
    m(1, 1) = P();
    m(1, 0) = P();
    EXPECT_EQ(bareiss_rank(m), 1u);
}

TEST(LinearProgram, SmallProblems) {
    lp::Problem p(2);
    p.set_objective({1, 1});
    p.add({1, 2}, lp::Relation::LessEqual, 4);
    p.add({3, 1}, lp::Relation::LessEqual, 6);
    auto s = p.maximize();
    ASSERT_EQ(s.status, lp::Status::Optimal);
    EXPECT_EQ(s.objective, Rational(14, 5));

    lp::Problem inf(1);
    inf.add({1}, lp::Relation::GreaterEqual, 2);
    inf.add({1}, lp::Relation::LessEqual, 1);
    EXPECT_EQ(inf.maximize().status, lp::Status::Infeasible);

    lp::Problem unb(1, lp::VariableKind::Free);
    unb.set_objective({-1});
    unb.add({1}, lp::Relation::LessEqual, 0);
    EXPECT_EQ(unb.maximize().status, lp::Status::Unbounded);

    lp::Problem eq(2, lp::VariableKind::Free);
    eq.set_objective({0, 1});
    eq.add({1, 1}, lp::Relation::Equal, -3);
    eq.add({1, 0}, lp::Relation::GreaterEqual, -1);
    s = eq.maximize();
    ASSERT_EQ(s.status, lp::Status::Optimal);
    EXPECT_EQ(s.x[1], Rational(-2));
}

TEST(LinearProgram, AgreesWithVertexEnumeration) {
    // 2-variable LPs: brute force over intersections of constraint pairs.
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<int> c(-4, 4);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::array<Rational, 3>> rows;  // a x + b y <= r
        for (int k = 0; k < 4; ++k) rows.push_back({Rational(c(rng)), Rational(c(rng)), Rational(c(rng) + 4)});
        rows.push_back({Rational(-1), Rational(0), Rational(0)});
        rows.push_back({Rational(0), Rational(-1), Rational(0)});
        rows.push_back({Rational(1), Rational(1), Rational(10)});
        std::array<Rational, 2> obj{Rational(c(rng)), Rational(c(rng))};

        lp::Problem p(2);
        p.set_objective({obj[0], obj[1]});
        for (std::size_t k = 0; k + 3 < rows.size(); ++k)
            p.add({rows[k][0], rows[k][1]}, lp::Relation::LessEqual, rows[k][2]);
        p.add({1, 1}, lp::Relation::LessEqual, 10);
        auto s = p.maximize();

        std::optional<Rational> best;
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t j = i + 1; j < rows.size(); ++j) {
                Rational det = rows[i][0] * rows[j][1] - rows[i][1] * rows[j][0];
                if (det == 0) continue;
                Rational x = (rows[i][2] * rows[j][1] - rows[i][1] * rows[j][2]) / det;
                Rational y = (rows[i][0] * rows[j][2] - rows[i][2] * rows[j][0]) / det;
                bool ok = true;
                for (const auto& r : rows) ok = ok && r[0] * x + r[1] * y <= r[2];
                if (!ok) continue;
                Rational v = obj[0] * x + obj[1] * y;
                if (!best || v > *best) best = v;
            }
        if (!best) {
            EXPECT_EQ(s.status, lp::Status::Infeasible);
        } else {
            ASSERT_EQ(s.status, lp::Status::Optimal);
            EXPECT_EQ(s.objective, *best);
        }
    }
}

TEST(JsonIo, RoundTrip) {
    ExactMatrix m(2, 2);
    m(0, 0) = ExactScalar(Rational(1, 2), Rational(-3));
    m(1, 1) = ExactScalar(Rational(7));
    auto j = json_io::encode(m);
    EXPECT_EQ(json_io::decode_matrix(j), m);
    EXPECT_EQ(json_io::decode_rational(nlohmann::json("-4/6")), Rational(-2, 3));
    EXPECT_THROW(json_io::decode_rational(nlohmann::json(0.5)), InvalidInput);
    EXPECT_THROW(json_io::decode_matrix(nlohmann::json::parse("[[1,2],[3]]")), InvalidInput);
}
