#include "sfpas/family.hpp"
#include "support/instances.hpp"
#include "support/stromme_oracle.hpp"
#include "support/triple_enumeration.hpp"

#include <gtest/gtest.h>

using namespace sfpas;
using namespace sfpas::family;

namespace {

ExactMatrix ints(std::size_t rows, std::size_t cols, std::initializer_list<int> entries) {
    ExactMatrix m(rows, cols);
    auto it = entries.begin();
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = ExactScalar(Rational(*it++));
    return m;
}

StrommeTriple basic_triple() {
    // u = 1, v = 2, w = 2: k = e1, l = e2, m = identity.
    return {1, 2, 2, ints(2, 1, {1, 0}), ints(2, 1, {0, 1}), ExactMatrix::identity(2)};
}

StrommeTriple from_ints(const oracle::IntTriple& t) {
    StrommeTriple s;
    s.u = static_cast<std::size_t>(t.u);
    s.v = static_cast<std::size_t>(t.v);
    s.w = static_cast<std::size_t>(t.w);
    s.k = ExactMatrix(s.v, s.u);
    s.l = ExactMatrix(s.v, s.u);
    s.m = ExactMatrix(s.v, s.w);
    for (std::size_t r = 0; r < s.v; ++r) {
        for (std::size_t c = 0; c < s.u; ++c) {
            s.k(r, c) = ExactScalar(Rational(t.k[r * s.u + c]));
            s.l(r, c) = ExactScalar(Rational(t.l[r * s.u + c]));
        }
        for (std::size_t c = 0; c < s.w; ++c) s.m(r, c) = ExactScalar(Rational(t.m[r * s.w + c]));
    }
    return s;
}

StrommeTriple random_triple(std::mt19937_64& rng, std::size_t u, std::size_t v, std::size_t w, int range) {
    std::uniform_int_distribution<int> e(-range, range);
    StrommeTriple t{u, v, w, ExactMatrix(v, u), ExactMatrix(v, u), ExactMatrix(v, w)};
    for (auto* m : {&t.k, &t.l, &t.m})
        for (std::size_t r = 0; r < m->rows(); ++r)
            for (std::size_t c = 0; c < m->cols(); ++c) (*m)(r, c) = ExactScalar(Rational(e(rng)));
    return t;
}

}  // namespace

TEST(FlagStable, Grassmann) {
    FlagChain c{{2, 3}, {ints(3, 2, {1, 0, 0, 1, 1, 1})}, {Rational(1)}};
    auto v = flag_stable(c);
    EXPECT_EQ(v.verdict, StabilityVerdict::Stable);
    EXPECT_FALSE(v.witness.has_value());
}

TEST(FlagStable, KernelGivesWitness) {
    FlagChain c{{2, 2, 3}, {ints(2, 2, {1, 1, 1, 1}), ints(3, 2, {1, 0, 0, 1, 0, 0})}, {Rational(1), Rational(1)}};
    auto v = flag_stable(c);
    EXPECT_EQ(v.verdict, StabilityVerdict::Unstable);
    ASSERT_TRUE(v.witness.has_value());
    EXPECT_EQ(v.witness->pairing, Rational(-1));
    EXPECT_EQ(v.witness->map_index, 0u);
    EXPECT_TRUE(v.witness->xi.blocks[1].is_zero());
    EXPECT_TRUE(witness_filtration_holds(c, v.witness->xi));
}

TEST(FlagStable, GenericIncreasingChain) {
    FlagChain c{{1, 2, 3}, {ints(2, 1, {2, -1}), ints(3, 2, {1, 2, 0, 1, 3, -1})}, {Rational(1), Rational(1, 2)}};
    EXPECT_EQ(flag_stable(c).verdict, StabilityVerdict::Stable);
}

TEST(FlagStable, RejectsNonPositiveLevel) {
    FlagChain c{{1, 1}, {ints(1, 1, {1})}, {Rational(0)}};
    EXPECT_THROW(flag_stable(c), NonPositiveLevel);
    c.levels = {Rational(-1, 2)};
    EXPECT_THROW(flag_stable(c), NonPositiveLevel);
    FlagChain bad{{1, 2}, {ints(1, 1, {1})}, {Rational(1)}};
    EXPECT_THROW(flag_stable(bad), InvalidInput);
}

TEST(FlagStable, WitnessesSatisfyFiltrationCondition) {
    std::mt19937_64 rng(17);
    int unstable = 0;
    for (int trial = 0; trial < 150; ++trial) {
        auto c = fixtures::random_flag_chain(rng);
        auto v = flag_stable(c);
        if (v.verdict != StabilityVerdict::Unstable) continue;
        ++unstable;
        ASSERT_TRUE(v.witness.has_value());
        EXPECT_LT(v.witness->pairing, 0);
        Rational pairing = 0;
        for (std::size_t i = 0; i < c.levels.size(); ++i) {
            Rational tr = 0;
            for (std::size_t k = 0; k < c.dims[i]; ++k) tr += v.witness->xi.blocks[i](k, k).re();
            pairing += c.levels[i] * tr;
        }
        EXPECT_EQ(pairing, v.witness->pairing);
        EXPECT_TRUE(witness_filtration_holds(c, v.witness->xi)) << "trial " << trial;
    }
    EXPECT_GT(unstable, 20);
}

TEST(FlagStable, FiltrationRejectsWrongDirection) {
    FlagChain c{{2, 2}, {ExactMatrix::identity(2)}, {Rational(1)}};
    ExactHermitianTuple xi{{ints(2, 2, {-1, 0, 0, 0})}};
    EXPECT_FALSE(witness_filtration_holds(c, xi));
    ExactHermitianTuple positive{{ints(2, 2, {1, 0, 0, 2})}};
    EXPECT_TRUE(witness_filtration_holds(c, positive));
}

TEST(Grassmann, QuotientTable) {
    EXPECT_EQ(grassmann_quotient_type(Rational(1)), GrassmannQuotient::Grassmannian);
    EXPECT_EQ(grassmann_quotient_type(Rational(0)), GrassmannQuotient::Point);
    EXPECT_EQ(grassmann_quotient_type(Rational(-1, 2)), GrassmannQuotient::Empty);
}

TEST(Stromme, SpecExamples) {
    auto c = stromme_check(basic_triple());
    EXPECT_TRUE(c.cond1);
    EXPECT_TRUE(c.cond2);
    EXPECT_TRUE(c.is_triple);

    auto t = basic_triple();
    t.m = ExactMatrix(2, 2);
    EXPECT_FALSE(stromme_check(t).cond2);

    t = basic_triple();
    t.k = ExactMatrix(2, 1);
    t.l = ExactMatrix(2, 1);
    EXPECT_FALSE(stromme_check(t).cond1);
}

TEST(Stromme, RootAtInfinity) {
    // u = v = 1, w = 0: minor is x k + y l = y; vanishes at (1 : 0).
    StrommeTriple t{1, 1, 0, ints(1, 1, {0}), ints(1, 1, {1}), ExactMatrix(1, 0)};
    auto c = stromme_check(t);
    EXPECT_TRUE(c.cond1);
    EXPECT_FALSE(c.cond2);
    // x + y vanishes at (1 : -1).
    t.k = ints(1, 1, {1});
    EXPECT_FALSE(stromme_check(t).cond2);
}

TEST(Stromme, DimensionChecks) {
    auto t = basic_triple();
    t.w = 0;
    EXPECT_THROW(stromme_check(t), InvalidInput);
    t = basic_triple();
    t.k = ExactMatrix(3, 1);
    EXPECT_THROW(stromme_check(t), InvalidInput);
    StrommeTriple big{9, 9, 0, ExactMatrix(9, 9), ExactMatrix(9, 9), ExactMatrix(9, 0)};
    EXPECT_THROW(stromme_check(big), LimitExceeded);
}

TEST(Stromme, QuotInvariants) {
    auto q = quot_invariants(basic_triple());
    EXPECT_EQ(q.rank, 1u);
    EXPECT_EQ(q.degree, 1u);

    StrommeTriple surj{0, 2, 3, ExactMatrix(2, 0), ExactMatrix(2, 0), ints(2, 3, {1, 0, 1, 0, 1, 1})};
    q = quot_invariants(surj);
    EXPECT_EQ(q.rank, 2u);
    EXPECT_EQ(q.degree, 0u);

    std::mt19937_64 rng(8);
    auto generic = random_triple(rng, 2, 3, 3, 5);
    ASSERT_TRUE(stromme_check(generic).is_triple);
    q = quot_invariants(generic);
    EXPECT_EQ(q.rank, 1u);
    EXPECT_EQ(q.degree, 2u);

    auto t = basic_triple();
    t.m = ExactMatrix(2, 2);
    EXPECT_THROW(quot_invariants(t), NotATriple);
}

TEST(Stromme, AgreesWithOracleOnSmallShapes) {
    std::size_t visited = 0;
    for (auto shape : oracle::stromme_shapes(1, 2, 2)) {
        oracle::TripleEnumerator en(shape);
        visited += en.for_each([&](const oracle::IntTriple& it) {
            auto c = stromme_check(from_ints(it));
            EXPECT_EQ(c.cond1, oracle::cond1(it));
            EXPECT_EQ(c.cond2, oracle::cond2(it));
        });
    }
    EXPECT_GT(visited, 100u);
}

TEST(Stromme, AgreesWithOracleOnRandomLargerTriples) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t u = 1 + trial % 3, r = trial % 2, w = r + trial % 2 + 1;
        auto t = random_triple(rng, u, u + r, w, 1);
        oracle::IntTriple it{static_cast<int>(t.u), static_cast<int>(t.v), static_cast<int>(t.w), {}, {}, {}};
        for (std::size_t i = 0; i < t.v; ++i) {
            for (std::size_t j = 0; j < t.u; ++j) {
                it.k.push_back(static_cast<int>(boost::multiprecision::numerator(t.k(i, j).re())));
                it.l.push_back(static_cast<int>(boost::multiprecision::numerator(t.l(i, j).re())));
            }
            for (std::size_t j = 0; j < t.w; ++j) it.m.push_back(static_cast<int>(boost::multiprecision::numerator(t.m(i, j).re())));
        }
        auto c = stromme_check(t);
        EXPECT_EQ(c.cond1, oracle::cond1(it)) << trial;
        EXPECT_EQ(c.cond2, oracle::cond2(it)) << trial;
    }
}

TEST(StrommeRefuter, NoWitnessForTriple) {
    EXPECT_FALSE(stromme_refuter(basic_triple(), EpsRational(2), EpsRational(1), 0, 500).has_value());
    EXPECT_FALSE(stromme_refuter(basic_triple(), EpsRational(1, 1), EpsRational(1), 0, 500).has_value());
}

TEST(StrommeRefuter, ZeroMViolatesClauseTwo) {
    auto t = basic_triple();
    t.m = ExactMatrix(2, 2);
    auto w = stromme_refuter(t, EpsRational(2), EpsRational(1), 0, 50);
    ASSERT_TRUE(w.has_value());
    EXPECT_EQ(w->clause, 2);
    // Here im k + im l = V, so U_1 = U is excluded and the violation is at
    // U_1 = 0, V_1 = 0: t * 1 <= s * 2.
    EXPECT_EQ(w->u1.cols(), 0u);
    EXPECT_EQ(w->v1.cols(), 0u);
}

TEST(StrommeRefuter, ZeroMWithSmallPencilImage) {
    // k = l = e1 (u = 1, v = 2): V_1 = span(e1) is proper, so U_1 = U
    // violates clause 2.
    StrommeTriple t{1, 2, 1, ints(2, 1, {1, 0}), ints(2, 1, {1, 0}), ExactMatrix(2, 1)};
    auto w = stromme_refuter(t, EpsRational(2), EpsRational(1), 0, 10);
    ASSERT_TRUE(w.has_value());
    EXPECT_EQ(w->clause, 2);
    EXPECT_EQ(w->u1.cols(), 1u);
    EXPECT_EQ(w->v1.cols(), 1u);
}

TEST(StrommeRefuter, EmptyUSurjectiveM) {
    StrommeTriple t{0, 2, 2, ExactMatrix(2, 0), ExactMatrix(2, 0), ExactMatrix::identity(2)};
    EXPECT_FALSE(stromme_refuter(t, EpsRational(2), EpsRational(1), 3, 100).has_value());
}

TEST(StrommeRefuter, ConsistentWithTriplesNearOne) {
    std::mt19937_64 rng(31);
    int triples = 0;
    for (int trial = 0; trial < 12; ++trial) {
        auto t = random_triple(rng, 1 + trial % 2, 1 + trial % 2 + trial % 3 % 2, 2, 1);
        if (!stromme_check(t).is_triple) continue;
        ++triples;
        for (std::uint64_t seed = 0; seed < 10; ++seed)
            EXPECT_FALSE(stromme_refuter(t, EpsRational(Rational(101, 100)), EpsRational(1), seed, 500).has_value());
        EXPECT_FALSE(stromme_refuter(t, EpsRational(1, 1), EpsRational(1), 0, 500).has_value());
    }
    EXPECT_GT(triples, 2);
}
