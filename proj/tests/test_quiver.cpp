#include "sfpas/family.hpp"
#include "sfpas/quiver.hpp"
#include "support/instances.hpp"

#include <gtest/gtest.h>

#include <Eigen/QR>

#include <random>

using namespace sfpas;
using namespace sfpas::quiver;

namespace {

ExactMatrix scalar(const Rational& x) {
    ExactMatrix m(1, 1);
    m(0, 0) = ExactScalar(x);
    return m;
}

FloatMatrix fscalar(std::complex<double> z) { return FloatMatrix::Constant(1, 1, z); }

FloatMatrix random_unitary(std::mt19937_64& rng, Eigen::Index n) {
    std::normal_distribution<double> g;
    FloatMatrix a(n, n);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = {g(rng), g(rng)};
    Eigen::HouseholderQR<FloatMatrix> qr(a);
    return qr.householderQ() * FloatMatrix::Identity(n, n);
}

QuiverProblem twisted_problem() {
    Quiver q({"A", "B", "C"});
    q.add_arrow("x", "A", "B");
    q.add_arrow("y", "B", "C");
    q.add_arrow("z", "C", "A");
    return QuiverProblem(std::move(q), QuiverDims{{2, 3, 2}, {2, 1, 3}}, FullVertexProduct{{0, 1}});
}

QuiverProblem cycle_problem() {
    Quiver q({"P", "Q"});
    q.add_arrow("forward", "P", "Q");
    q.add_arrow("backward", "Q", "P");
    return QuiverProblem(std::move(q), QuiverDims{{1, 1}, {}}, FullVertexProduct{{0}});
}

RationalMatrix int_rmatrix(std::initializer_list<std::initializer_list<int>> rows) {
    RationalMatrix m(rows.size(), rows.begin()->size());
    std::size_t i = 0;
    for (const auto& row : rows) {
        std::size_t j = 0;
        for (int x : row) m(i, j++) = Rational(x);
        ++i;
    }
    return m;
}

}  // namespace

TEST(Quiver, RejectsBadStructure) {
    EXPECT_THROW(Quiver({"a", "a"}), InvalidInput);
    Quiver q({"a", "b"});
    q.add_arrow("f", "a", "b");
    EXPECT_THROW(q.add_arrow("f", "a", "b"), InvalidInput);
    EXPECT_THROW(q.add_arrow("g", "a", "c"), InvalidInput);
    EXPECT_THROW(QuiverProblem(q, QuiverDims{{1}, {}}, FullVertexProduct{{0}}), InvalidInput);
    EXPECT_THROW(QuiverProblem(q, QuiverDims{{1, 1}, {}}, FullVertexProduct{{}}), InvalidInput);
    EXPECT_THROW(QuiverProblem(q, QuiverDims{{1, 2}, {}}, TorusKernel::from_weights(int_rmatrix({{1}}))),
                 InvalidInput);
    EXPECT_THROW(TorusKernel::from_weights(int_rmatrix({{1, 1}, {2, 2}})), InvalidInput);
}

TEST(MomentMap, ScalarGrassmannZeroAtHalfNormSquared) {
    auto prob = grassmann_problem(1, 1);
    ExactPoint p{{scalar(Rational(3))}};
    auto mu = moment_map(prob, p, Level{{Rational(9, 2)}});
    EXPECT_TRUE(mu.blocks[0].is_zero());
}

TEST(MomentMap, GrassmannIsometryScaled) {
    // f = sqrt(2t) times an isometry with t = 2: columns of norm 2.
    auto prob = grassmann_problem(2, 3);
    ExactMatrix f(3, 2);
    f(0, 0) = ExactScalar(Rational(2));
    f(1, 1) = ExactScalar(Rational(0), Rational(2));
    ExactPoint p{{f}};
    EXPECT_TRUE(moment_map(prob, p, Level{{Rational(2)}}).blocks[0].is_zero());
}

TEST(MomentMap, FlagChainZeroMaps) {
    auto prob = flag_problem({2, 3, 1});
    ExactPoint p{{ExactMatrix(3, 2), ExactMatrix(1, 3)}};
    auto mu = moment_map(prob, p, Level{{Rational(1), Rational(1)}});
    ASSERT_EQ(mu.blocks.size(), 2u);
    EXPECT_EQ(mu.blocks[0], ExactScalar(Rational(-1)) * ExactMatrix::identity(2));
    EXPECT_EQ(mu.blocks[1], ExactScalar(Rational(-1)) * ExactMatrix::identity(3));
}

TEST(MomentMap, LevelEntersAsShift) {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 30; ++trial) {
        auto chain = fixtures::random_flag_chain(rng);
        auto prob = flag_problem(chain.dims);
        auto at_t = moment_map(prob, chain.as_point(), chain.as_level());
        auto at_0 = moment_map(prob, chain.as_point(), zero_level(prob));
        for (std::size_t i = 0; i < at_t.blocks.size(); ++i)
            EXPECT_EQ(at_t.blocks[i], at_0.blocks[i] - ExactScalar(chain.levels[i]) * ExactMatrix::identity(chain.dims[i]));
    }
}

TEST(MomentMap, ExactAndFloatAgree) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 30; ++trial) {
        auto chain = fixtures::random_flag_chain(rng);
        auto prob = flag_problem(chain.dims);
        auto exact = moment_map(prob, chain.as_point(), chain.as_level());
        auto flt = moment_map(prob, to_float(chain.as_point()), chain.as_level());
        for (std::size_t i = 0; i < exact.blocks.size(); ++i)
            EXPECT_LE((sfpas::to_float(exact.blocks[i]) - flt.blocks[i]).norm(), 1e-12);
    }
}

TEST(MomentMap, Equivariance) {
    std::mt19937_64 rng(3);
    for (std::size_t trial = 0; trial < 100; ++trial) {
        QuiverProblem prob = trial % 2 ? twisted_problem() : flag_problem({1 + trial % 4, 2 + trial % 3, 4});
        FloatPoint p = random_point(prob, rng);
        for (auto& m : p.maps) m *= 1.0 + trial % 5;
        const auto& full = std::get<FullVertexProduct>(prob.symmetry());
        std::vector<FloatMatrix> g;
        for (std::size_t v = 0; v < prob.quiver().vertices().size(); ++v) {
            const auto d = static_cast<Eigen::Index>(prob.dims().vertex_dim[v]);
            g.push_back(prob.factor_of(v) ? random_unitary(rng, d) : FloatMatrix::Identity(d, d));
        }
        FloatPoint gp = p;
        for (std::size_t a = 0; a < gp.maps.size(); ++a) {
            const auto& arrow = prob.quiver().arrows()[a];
            gp.maps[a] = quiver::detail::kron_identity(g[arrow.target], prob.dims().twist_dim[a]) * p.maps[a] *
                         g[arrow.source].adjoint();
        }
        Level lvl{std::vector<Rational>(full.vertices.size(), Rational(1, 3))};
        auto mu = moment_map(prob, p, lvl);
        auto gmu = moment_map(prob, gp, lvl);
        const double scale = 1.0 + real_inner(p, p);
        for (std::size_t k = 0; k < full.vertices.size(); ++k) {
            const auto& gv = g[full.vertices[k]];
            EXPECT_LE((gmu.blocks[k] - gv * mu.blocks[k] * gv.adjoint()).norm(), 1e-9 * scale);
        }
    }
}

TEST(MomentMap, ToricProjectsToCokernel) {
    auto prob = toric_problem(int_rmatrix({{1, -1}}));
    ExactPoint p{{scalar(Rational(1)), scalar(Rational(2))}};
    // coker coordinate: (1/2 - a1) + (2 - a2)
    auto mu = moment_map(prob, p, Level{{Rational(1, 2), Rational(2)}});
    ASSERT_EQ(mu.blocks.size(), 1u);
    EXPECT_TRUE(mu.blocks[0].is_zero());
    mu = moment_map(prob, p, Level{{Rational(0), Rational(0)}});
    EXPECT_EQ(mu.blocks[0](0, 0), ExactScalar(Rational(5, 2)));
}

TEST(Flow, ScalarGrassmannConverges) {
    auto prob = grassmann_problem(1, 1);
    FlowConfig cfg;
    auto res = kempf_ness_flow(prob, FloatPoint{{fscalar(1.0)}}, Level{{Rational(1, 2)}}, cfg);
    EXPECT_LT(res.final_energy, cfg.tol * cfg.tol);
    EXPECT_NEAR(std::norm(res.final_point.maps[0](0, 0)), 1.0, 1e-7);

    res = kempf_ness_flow(prob, FloatPoint{{fscalar({0.2, 0.1})}}, Level{{Rational(1, 2)}}, cfg);
    EXPECT_LT(res.final_energy, cfg.tol * cfg.tol);
    EXPECT_NEAR(std::norm(res.final_point.maps[0](0, 0)), 1.0, 1e-7);
    EXPECT_EQ(res.verdict, StabilityVerdict::Stable);
}

TEST(Flow, OriginIsFixed) {
    auto prob = grassmann_problem(1, 1);
    FlowConfig cfg;
    auto res = kempf_ness_flow(prob, FloatPoint{{fscalar(0.0)}}, Level{{Rational(1, 2)}}, cfg);
    EXPECT_DOUBLE_EQ(res.final_energy, 0.25);
    EXPECT_EQ(res.verdict, StabilityVerdict::Unstable);
}

TEST(Flow, EnergyIsMonotone) {
    std::mt19937_64 rng(4);
    FlowConfig cfg;
    cfg.record_trace = true;
    cfg.max_iter = 3000;
    for (int trial = 0; trial < 20; ++trial) {
        auto chain = fixtures::random_flag_chain(rng);
        auto prob = flag_problem(chain.dims);
        auto res = kempf_ness_flow(prob, to_float(chain.as_point()), chain.as_level(), cfg);
        ASSERT_FALSE(res.energy_trace.empty());
        for (std::size_t i = 1; i < res.energy_trace.size(); ++i) EXPECT_LE(res.energy_trace[i], res.energy_trace[i - 1]);
        EXPECT_GE(res.final_energy, 0.0);
    }
}

TEST(Flow, FlagVerdictsMatchInjectivity) {
    FlowConfig cfg;
    // f1 = [1;0;1], f2 = identity-like 3x3 -> injective chain.
    family::FlagChain good{{1, 3, 3}, {}, {Rational(1), Rational(2)}};
    ExactMatrix f1(3, 1);
    f1(0, 0) = ExactScalar(Rational(1));
    f1(2, 0) = ExactScalar(Rational(1));
    good.maps = {f1, ExactMatrix::identity(3)};
    auto prob = flag_problem(good.dims);
    EXPECT_EQ(numerical_stability_verdict(prob, to_float(good.as_point()), good.as_level(), cfg), StabilityVerdict::Stable);

    family::FlagChain bad = good;
    bad.maps[1](2, 2) = ExactScalar();
    EXPECT_EQ(numerical_stability_verdict(prob, to_float(bad.as_point()), bad.as_level(), cfg), StabilityVerdict::Unstable);
}

TEST(Flow, AgreesWithExactFlagTest) {
    std::mt19937_64 rng(5);
    FlowConfig cfg;
    int borderline = 0;
    for (int trial = 0; trial < 25; ++trial) {
        auto chain = fixtures::random_flag_chain(rng);
        auto exact = family::flag_stable(chain).verdict;
        auto numeric = numerical_stability_verdict(flag_problem(chain.dims), to_float(chain.as_point()), chain.as_level(), cfg);
        if (numeric == StabilityVerdict::Borderline) {
            ++borderline;
            continue;
        }
        EXPECT_EQ(exact, numeric) << "trial " << trial;
    }
    EXPECT_LE(borderline, 1);
}

TEST(Hamiltonian, ScalarGrassmann) {
    auto prob = grassmann_problem(1, 1);
    FloatPoint p{{fscalar(1.0)}};
    FloatHermitianTuple xi{{fscalar(1.0)}};
    FloatPoint w{{fscalar(1.0)}};
    EXPECT_LT(hamiltonian_check(prob, p, Level{{Rational(1)}}, xi, w, 1e-5), 1e-6);
    // The imaginary direction is the one paired with the action.
    FloatPoint wi{{fscalar({0.0, 1.0})}};
    EXPECT_LT(hamiltonian_check(prob, p, Level{{Rational(1)}}, xi, wi, 1e-5), 1e-6);
    EXPECT_THROW(hamiltonian_check(prob, p, Level{{Rational(1)}}, xi, w, 1e-2), InvalidInput);
}

TEST(Hamiltonian, OriginBothSidesVanish) {
    auto prob = flag_problem({2, 2});
    std::mt19937_64 rng(6);
    FloatPoint zero{{FloatMatrix::Zero(2, 2)}};
    FloatPoint w = random_point(prob, rng);
    auto xi = random_lie_element(prob, rng);
    EXPECT_LT(hamiltonian_check(prob, zero, zero_level(prob), xi, w, 1e-5), 1e-6);
}

TEST(Hamiltonian, RandomInstancesAllShapes) {
    std::mt19937_64 rng(7);
    std::vector<QuiverProblem> problems{flag_problem({2, 3, 3}), twisted_problem(),
                                        toric_problem(int_rmatrix({{1, 0, -1, 0}, {0, 1, 0, -1}}))};
    for (int trial = 0; trial < 60; ++trial) {
        const auto& prob = problems[trial % problems.size()];
        FloatPoint p = random_point(prob, rng);
        FloatPoint w = random_point(prob, rng);
        auto xi = random_lie_element(prob, rng);
        Level lvl = zero_level(prob);
        for (auto& x : lvl.values) x = Rational(trial % 3, 2);
        EXPECT_LT(hamiltonian_check(prob, p, lvl, xi, w, 1e-5), 1e-5) << "trial " << trial;
    }
}

TEST(Properness, GrassmannHasNoWitness) {
    FlowConfig cfg;
    cfg.max_iter = 20000;
    EXPECT_FALSE(properness_refuter(grassmann_problem(1, 1), cfg, 5).has_value());
    EXPECT_FALSE(properness_refuter(grassmann_problem(2, 3), cfg, 5).has_value());
}

TEST(Properness, CycleHasWitness) {
    FlowConfig cfg;
    auto w = properness_refuter(cycle_problem(), cfg, 5);
    ASSERT_TRUE(w.has_value());
    EXPECT_NEAR(std::norm(w->maps[0](0, 0)), std::norm(w->maps[1](0, 0)), 1e-7);
    EXPECT_NEAR(norm(*w), 1.0, 1e-12);
}

TEST(Stabilizer, DetectsContinuousStabilizer) {
    // Both vertices of a cycle acted on: the diagonal U(1) fixes every point.
    Quiver q({"P", "Q"});
    q.add_arrow("forward", "P", "Q");
    q.add_arrow("backward", "Q", "P");
    QuiverProblem prob(std::move(q), QuiverDims{{1, 1}, {}}, FullVertexProduct{{0, 1}});
    FloatPoint p{{fscalar(1.0), fscalar(1.0)}};
    EXPECT_LT(stabilizer_sigma_min(prob, p), 1e-12);
    EXPECT_GT(stabilizer_sigma_min(grassmann_problem(2, 2), FloatPoint{{FloatMatrix::Identity(2, 2)}}), 0.5);
}
