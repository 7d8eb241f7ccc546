#include "support.hpp"

#include "roughcal/diagnostics.hpp"
#include "roughcal/errors.hpp"
#include "roughcal/tensor.hpp"

#include <gtest/gtest.h>

using namespace roughcal;
using roughcal::testing::Instance;
using roughcal::testing::nearby_state;
using roughcal::testing::random_instance;
using roughcal::testing::turbulent;
using roughcal::testing::well_posed_instance;

namespace {

// Source feeding two sensed nodes in series.
Instance series_toy(double eps1, double eps2)
{
    std::vector<NodeSpec> nodes{{"R", 0.0, true, false, 40.0}, {"a", 1.0, false, true, {}}, {"b", 2.0, false, true, {}}};
    Network net = build_network(nodes, {{"1", "R", "a", 30, 0.05, {}}, {"2", "a", "b", 20, 0.04, {}}});
    Vec eps(2);
    eps << eps1, eps2;
    Vec q(2), hs(1);
    q << 1.5e-3, 2.0e-3;
    hs << 40.0;
    auto gm = generate_measurements(net, eps, {q}, {hs});
    Problem pb(net, gm.sets);
    Vec truth = roughcal::testing::planted_state(pb, eps, gm);
    return {std::move(net), std::move(eps), std::move(gm), std::move(pb), std::move(truth)};
}

SolverConfig tight()
{
    SolverConfig c;
    c.eps_f = 1e-15;
    c.eps_x = 1e-15;
    return c;
}

}  // namespace

TEST(NewtonDirection, ZeroResidualGivesZeroStep)
{
    Mat J(3, 2);
    J << 1, 2, 3, 4, 5, 7;
    EXPECT_TRUE(newton_direction(J, Vec::Zero(3)).isZero(0.0));
}

TEST(NewtonDirection, SquareSystemMatchesDirectSolve)
{
    std::mt19937_64 rng(31);
    std::normal_distribution<double> n01;
    for (int trial = 0; trial < 20; ++trial) {
        const Mat J = Mat::NullaryExpr(5, 5, [&] { return n01(rng); });
        const Vec f = Vec::NullaryExpr(5, [&] { return n01(rng); });
        const Vec expected = -J.fullPivLu().solve(f);
        EXPECT_LT((newton_direction(J, f) - expected).norm(), 1e-9 * expected.norm());
    }
}

TEST(NewtonDirection, OverdeterminedIsLeastSquares)
{
    std::mt19937_64 rng(32);
    std::normal_distribution<double> n01;
    const Mat J = Mat::NullaryExpr(7, 3, [&] { return n01(rng); });
    const Vec f = Vec::NullaryExpr(7, [&] { return n01(rng); });
    const Vec expected = -(J.transpose() * J).ldlt().solve(J.transpose() * f);
    EXPECT_LT((newton_direction(J, f) - expected).norm(), 1e-10 * expected.norm());
}

TEST(NewtonDirection, RankDeficientThrows)
{
    Mat J(3, 2);
    J << 1, 1, 2, 2, 3, 3;
    try {
        newton_direction(J, Vec::Ones(3));
        FAIL() << "expected SingularError";
    } catch (const SingularError& e) {
        EXPECT_GT(e.condition(), 1e10);
    }
}

TEST(Newton, RecoversPlantedRoughnessOnSeriesToy)
{
    const Instance in = series_toy(2e-4, 1e-3);
    Vec x0 = in.truth;
    x0.head(2) << 1e-3, 2e-4;
    const auto res = solve_newton(in.pb, make_state(in.pb, x0), tight());
    EXPECT_LT((res.x.head(2) - in.eps).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Newton, FixedPointAtTruth)
{
    const Instance in = series_toy(3e-4, 6e-4);
    const auto res = solve_newton(in.pb, make_state(in.pb, in.truth), SolverConfig{});
    EXPECT_LE(res.iterations, 1);
    EXPECT_EQ(res.reason, Termination::converged);
    EXPECT_EQ(res.x, in.truth);
}

TEST(Newton, ScalingDoesNotChangeConvergedResult)
{
    const Instance in = series_toy(2e-4, 1e-3);
    Vec x0 = in.truth;
    x0.head(2) << 5e-4, 5e-4;
    SolverConfig cfg = tight();
    cfg.eps_f = 1e-13;
    const auto a = solve_newton(in.pb, make_state(in.pb, x0), cfg);
    cfg.scaling_enabled = false;
    const auto b = solve_newton(in.pb, make_state(in.pb, x0), cfg);
    EXPECT_LE(a.v, 1e-13);
    EXPECT_LE(b.v, 1e-13);
}

TEST(Newton, InvalidConfig)
{
    const Instance in = series_toy(2e-4, 1e-3);
    SolverConfig bad;
    bad.backtrack_factor = 1.5;
    EXPECT_THROW(solve_newton(in.pb, make_state(in.pb, in.truth), bad), InputError);
}

TEST(Newton, AcceptedStepsDecreaseResidual)
{
    std::mt19937_64 rng(33);
    RandomNetworkOptions o;
    o.n_j = 4;
    o.n_l = 5;
    o.n_p = 3;
    const auto in = random_instance(rng, o, 2);
    const CalibrationState st = make_state_unbounded_heads(in.pb, nearby_state(in, rng));
    std::vector<double> seen;
    auto record = [&](const Vec& x, const ResidualReport& r) {
        if (!seen.empty()) EXPECT_LT(r.v, seen.back());
        seen.push_back(r.v);
        return Vec(newton_direction(jacobian(in.pb, x), r.f));
    };
    const auto res = descend(in.pb, st, SolverConfig{}, record);
    ASSERT_FALSE(seen.empty());
    EXPECT_LE(res.v, seen.front());
}

TEST(Tensor, ZeroDirectionReproducesResidualAndJacobian)
{
    std::mt19937_64 rng(41);
    RandomNetworkOptions o;
    o.n_j = 5;
    o.n_l = 8;
    o.n_p = 3;
    for (int trial = 0; trial < 10; ++trial) {
        const auto in = random_instance(rng, o, 2);
        const Vec x = nearby_state(in, rng);
        const TensorModel model(in.pb, x);
        const Vec zero = Vec::Zero(in.pb.n_x());
        const auto rep = residual(in.pb, x);
        EXPECT_LE((model.residual(zero).stacked - rep.f).norm(), 1e-12 * rep.f.norm());
        const Mat J = jacobian(in.pb, x);
        EXPECT_LE((model.jacobian(zero) - J).norm(), 1e-12 * J.norm());
    }
}

TEST(Tensor, JacobianMatchesDifferencesOfModel)
{
    std::mt19937_64 rng(42);
    std::normal_distribution<double> n01;
    RandomNetworkOptions o;
    o.n_j = 4;
    o.n_l = 6;
    o.n_p = 2;
    const auto in = random_instance(rng, o, 2);
    const TensorModel model(in.pb, nearby_state(in, rng));
    for (int trial = 0; trial < 5; ++trial) {
        Vec d(in.pb.n_x());
        for (int k = 0; k < d.size(); ++k) d(k) = n01(rng) * (k < in.pb.n_l() ? 1e-4 : 0.1);
        const Mat JT = model.jacobian(d);
        for (int k = 0; k < d.size(); ++k) {
            const double h = k < in.pb.n_l() ? 1e-7 : 1e-4;
            Vec dp = d, dm = d;
            dp(k) += h;
            dm(k) -= h;
            const Vec col = (model.residual(dp).stacked - model.residual(dm).stacked) / (2 * h);
            EXPECT_LT((col - JT.col(k)).norm(), 1e-5 * std::max(JT.col(k).norm(), 1e-12));
        }
    }
}

TEST(Tensor, SinglePipeHandExpansion)
{
    std::vector<NodeSpec> nodes{{"R", 0.0, true, false, 20.0}, {"a", 0.0, false, false, {}}};
    const Network net = build_network(nodes, {{"1", "R", "a", 10, 0.05, {}}});
    MeasurementSet m{1, Vec(0), Vec::Constant(1, 2e-3), Vec::Constant(1, 20.0)};
    const Problem pb(net, {m});
    Vec x(2);
    x << 2e-4, 17.0;
    const TensorModel model(pb, x);
    const auto p = model.bundles()[0].at(0);
    const double f0 = residual(pb, x).f(0);
    const double de = 3e-5, dhN = 0.4;
    const double u = dhN;
    const double expect = 0.5 * p.p_eps2 * de * de - de * p.p_epsdh * u + 0.5 * p.p_dh2 * u * u + p.p_eps * de -
                          p.p_dh * u + f0;
    Vec d(2);
    d << de, dhN;
    EXPECT_NEAR(model.residual(d).stacked(0), expect, 1e-15 + 1e-12 * std::abs(expect));
    const double je = p.p_eps2 * de + p.p_eps - p.p_epsdh * u;
    const double jh = p.p_dh2 * u - p.p_dh - p.p_epsdh * de;
    EXPECT_NEAR(model.jacobian(d)(0, 0), je, 1e-12 * std::abs(je));
    EXPECT_NEAR(model.jacobian(d)(0, 1), jh, 1e-12 * std::abs(jh));
}

TEST(Tensor, BruteForceHessianEquivalence)
{
    std::mt19937_64 rng(43);
    std::normal_distribution<double> n01;
    RandomNetworkOptions o;
    o.n_j = 3;
    o.n_l = 5;
    o.n_p = 2;
    for (int trial = 0; trial < 5; ++trial) {
        const auto in = roughcal::testing::turbulent_instance(rng, o, 2);
        Vec x = nearby_state(in, rng);
        while (!turbulent(in.pb, x)) x = nearby_state(in, rng);
        Vec d(in.pb.n_x());
        for (int k = 0; k < d.size(); ++k) d(k) = n01(rng) * (k < in.pb.n_l() ? 1e-4 : 0.1);
        const Vec model = TensorModel(in.pb, x).residual(d).stacked;
        const Vec brute = bruteforce_tensor_residual(in.pb, x, d);
        EXPECT_LT((model - brute).norm(), 1e-4 * model.norm());
    }
}

TEST(Tensor, DirectionNeverWorseThanStart)
{
    std::mt19937_64 rng(44);
    RandomNetworkOptions o;
    o.n_j = 4;
    o.n_l = 6;
    o.n_p = 3;
    for (int trial = 0; trial < 10; ++trial) {
        const auto in = well_posed_instance(rng, o, 2);
        const auto dir = solve_tensor_direction(in.pb, nearby_state(in, rng));
        EXPECT_LE(dir.norm, dir.norm0);
        EXPECT_FALSE(dir.fallback);
    }
}

TEST(Tensor, ZeroDirectionAtExactSolution)
{
    std::mt19937_64 rng(45);
    RandomNetworkOptions o;
    o.n_j = 4;
    o.n_l = 6;
    o.n_p = 3;
    for (int trial = 0; trial < 5; ++trial) {
        const auto in = well_posed_instance(rng, o, 2);
        ASSERT_LT(residual(in.pb, in.truth).v, 1e-12);
        const auto dir = solve_tensor_direction(in.pb, in.truth);
        EXPECT_LE(dir.d.norm(), 1e-6 * (1.0 + in.truth.norm()));
    }
}

TEST(Tensor, RecoversPlantedRoughnessOnSeriesToy)
{
    const Instance in = series_toy(2e-4, 1e-3);
    Vec x0 = in.truth;
    x0.head(2) << 1e-3, 2e-4;
    const auto res = solve_tensor(in.pb, make_state(in.pb, x0), tight());
    EXPECT_LT((res.x.head(2) - in.eps).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Tensor, FixedPointAtTruth)
{
    const Instance in = series_toy(3e-4, 6e-4);
    const auto res = solve_tensor(in.pb, make_state(in.pb, in.truth), SolverConfig{});
    EXPECT_LE(res.iterations, 1);
    EXPECT_EQ(res.x, in.truth);
}
