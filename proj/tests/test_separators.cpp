#include "support.hpp"

#include "roughcal/separators.hpp"
#include "roughcal/tensor.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <algorithm>

using namespace roughcal;
using roughcal::testing::random_instance;

namespace {

// Derivatives whose pipe conic is 2x^2 + 5xy + 2y^2 - x + y - 1.
const PipeDerivatives kExample{-1.0, -1.0, 4.0, -5.0, 4.0};
constexpr double kExampleF0 = -1.0;

RandomNetworkOptions small_options()
{
    RandomNetworkOptions o;
    o.n_j = 3;
    o.n_l = 5;
    o.n_p = 2;
    return o;
}

// Bundles with p_epsdh^2 = p_eps2 p_dh2 and p_eps2 p_dh = p_epsdh p_eps on every pipe.
std::vector<FlowDerivativeBundle> degenerate_bundles(const Problem& pb, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.5, 2.0);
    std::uniform_int_distribution<int> eighths(4, 16);
    std::vector<FlowDerivativeBundle> out;
    for (int i = 0; i < pb.n_m(); ++i) {
        FlowDerivativeBundle b;
        const int n = pb.n_l();
        b.p_eps.resize(n);
        b.p_dh.resize(n);
        b.p_eps2.resize(n);
        b.p_epsdh.resize(n);
        b.p_dh2.resize(n);
        for (int j = 0; j < n; ++j) {
            // dyadic roots keep p_epsdh^2 - p_eps2 p_dh2 exactly zero
            const double r = eighths(rng) / 8.0, t = eighths(rng) / 8.0, sign = u(rng) > 1.25 ? 1.0 : -1.0;
            const double pee = r * r;
            b.p_eps2(j) = pee;
            b.p_dh2(j) = t * t;
            b.p_epsdh(j) = sign * r * t;
            b.p_eps(j) = -u(rng);
            b.p_dh(j) = b.p_epsdh(j) * b.p_eps(j) / pee;
        }
        out.push_back(std::move(b));
    }
    return out;
}

}  // namespace

TEST(Separators, DeterminantsMatchCofactorOracle)
{
    std::mt19937_64 rng(61);
    std::normal_distribution<double> n01;
    for (int i = 0; i < 200; ++i) {
        const PipeDerivatives p{n01(rng), n01(rng), n01(rng), n01(rng), n01(rng)};
        const double f0 = n01(rng);
        Eigen::Matrix3d m;
        m << p.p_eps2, -p.p_epsdh, p.p_eps, -p.p_epsdh, p.p_dh2, -p.p_dh, p.p_eps, -p.p_dh, 2 * f0;
        const auto d = determinants(p, f0);
        EXPECT_NEAR(d.delta, 0.5 * m.determinant(), 1e-12 * std::max(1.0, std::abs(m.determinant())));
        EXPECT_NEAR(d.delta_hat, p.p_eps2 * p.p_dh2 - p.p_epsdh * p.p_epsdh, 1e-14);
        // the pipe conic carries the same determinant up to the factor 1/8
        EXPECT_NEAR(pipe_conic(p, f0).delta(), d.delta / 4.0, 1e-12 * std::max(1.0, std::abs(d.delta)));
    }
}

TEST(Separators, ExampleConicAndFeasibleTriples)
{
    const Conic q = pipe_conic(kExample, kExampleF0);
    EXPECT_DOUBLE_EQ(q.a, 2.0);
    EXPECT_DOUBLE_EQ(q.h, 2.5);
    EXPECT_DOUBLE_EQ(q.b, 2.0);
    EXPECT_DOUBLE_EQ(q.f, -0.5);
    EXPECT_DOUBLE_EQ(q.g, 0.5);
    EXPECT_DOUBLE_EQ(q.c, -1.0);
    std::vector<std::string> names;
    for (const auto& s : separator_pairs(kExample, kExampleF0)) names.push_back(s.signs.str());
    std::sort(names.begin(), names.end());
    EXPECT_EQ(names, (std::vector<std::string>{"++-", "--+"}));
}

TEST(Separators, PairsReproduceTensorCoefficients)
{
    std::mt19937_64 rng(62);
    std::normal_distribution<double> n01;
    for (int i = 0; i < 100; ++i) {
        const PipeDerivatives p{n01(rng), n01(rng), std::abs(n01(rng)) + 0.1, n01(rng), n01(rng)};
        const double f0 = n01(rng);
        for (const auto& s : separator_pairs(p, f0, 1.0)) {
            EXPECT_NEAR(std::abs(s.ec + s.bf + p.p_epsdh), 0.0, 1e-12);
            EXPECT_NEAR(std::abs(s.ec * s.bf - 0.25 * p.p_eps2 * p.p_dh2), 0.0, 1e-10);
            EXPECT_NEAR(std::abs(s.bw + s.ev - p.p_eps), 0.0, 1e-12);
            EXPECT_NEAR(std::abs(s.bw * s.ev - 0.5 * f0 * p.p_eps2), 0.0, 1e-10);
            EXPECT_NEAR(std::abs(s.fv + s.cw + p.p_dh), 0.0, 1e-12);
            EXPECT_NEAR(std::abs(s.fv * s.cw - 0.5 * f0 * p.p_dh2), 0.0, 1e-10);
            EXPECT_DOUBLE_EQ(s.be, 0.5 * p.p_eps2);
        }
    }
}

TEST(Separators, RootDiagnosticMatchesDeterminants)
{
    std::mt19937_64 rng(63);
    const auto in = random_instance(rng, small_options(), 2);
    const Vec x = roughcal::testing::nearby_state(in, rng);
    const auto b = bundles(in.pb, x);
    const auto rd = root_diagnostic(in.pb, x);
    for (int i = 0; i < in.pb.n_m(); ++i)
        for (int j = 0; j < in.pb.n_l(); ++j) {
            const auto d = determinants(b[i].at(j), 0.0);
            EXPECT_NEAR(rd.delta_expr[i](j), 2.0 * d.delta, 1e-12 * std::max(1.0, std::abs(d.delta)));
            EXPECT_NEAR(rd.delta_hat_expr[i](j), -d.delta_hat, 1e-12 * std::max(1.0, std::abs(d.delta_hat)));
        }
}

TEST(Separators, KernelFormAgreesWithTensorResidualOnDegenerateBundles)
{
    std::mt19937_64 rng(64);
    std::normal_distribution<double> n01;
    for (int trial = 0; trial < 20; ++trial) {
        const auto in = random_instance(rng, small_options(), 2);
        const auto& pb = in.pb;
        const auto b = degenerate_bundles(pb, rng);
        std::vector<Vec> f(pb.n_m()), alpha(pb.n_m());
        for (int i = 0; i < pb.n_m(); ++i) {
            f[i] = Vec::NullaryExpr(pb.n_j(), [&] { return n01(rng); });
            alpha[i] = Vec::NullaryExpr(pb.n_l() - pb.n_j(), [&] { return n01(rng); });
        }
        const auto kr = kernel_rhs(pb, f, alpha);
        const auto sep = separator_table(pb, b, kr.fbar0);
        const auto kt = kernel_transform(pb, b, sep, f, alpha);
        const Vec d = Vec::NullaryExpr(pb.n_x(), [&] { return n01(rng); });
        const Vec tr = TensorModel(pb, b, f).residual(d).stacked;
        for (int v = 0; v < (1 << pb.n_m()); ++v) {
            const CVec kf = kernel_form(pb, kt, v, d);
            EXPECT_LT((kf - tr.cast<cd>()).norm(), 1e-8 * std::max(1.0, tr.norm())) << "variant " << v;
        }
    }
}

TEST(Separators, PseudoInverseIsMoorePenrose)
{
    std::mt19937_64 rng(65);
    std::normal_distribution<double> n01;
    const CMat m = CMat::NullaryExpr(6, 4, [&] { return cd(n01(rng), n01(rng)); });
    const CMat p = pseudo_inverse(m);
    EXPECT_LT((m * p * m - m).norm(), 1e-12 * m.norm());
    EXPECT_LT((p * m * p - p).norm(), 1e-12 * p.norm());
    EXPECT_LT(((m * p).adjoint() - m * p).norm(), 1e-12);
    EXPECT_LT(((p * m).adjoint() - p * m).norm(), 1e-12);
}

TEST(Separators, BetaEquationHasPlantedRoot)
{
    std::mt19937_64 rng(66);
    std::normal_distribution<double> n01;
    const int rows = 9, n = 4, k = 2;
    const CMat M = CMat::NullaryExpr(rows, n, [&] { return cd(n01(rng), 0.0); });
    const CVec s = CVec::NullaryExpr(rows, [&] { return cd(n01(rng), 0.0); });
    const Mat S_b = Mat::NullaryExpr(rows, k, [&] { return n01(rng); });
    const Vec d = Vec::NullaryExpr(n, [&] { return n01(rng); });
    const Vec alpha = Vec::NullaryExpr(k, [&] { return n01(rng); });
    const CVec w = M * d.cast<cd>();
    // choose r_f so that 0.5 w^2 + s w + r_f - S_b alpha = 0
    const CVec r = -(0.5 * w.cwiseProduct(w) + s.cwiseProduct(w) - (S_b * alpha).cast<cd>());
    ASSERT_LT(r.imag().norm(), 1e-14);
    const auto bt = beta_transform(M, s, S_b, r.real());
    EXPECT_LT(bt.inversion_defect, 1e-10);
    EXPECT_LT(bt.beta_equation(w).norm(), 1e-10 * w.norm());
    CVec expected(n + k);
    expected << d.cast<cd>(), alpha.cast<cd>();
    EXPECT_LT((bt.recover(w) - expected).norm(), 1e-10 * expected.norm());
}

TEST(Separators, CandidateCountAndShapes)
{
    std::mt19937_64 rng(67);
    RandomNetworkOptions o;
    o.n_j = 3;
    o.n_l = 4;
    o.n_p = 2;
    const auto in = random_instance(rng, o, 2);
    const Vec x = roughcal::testing::nearby_state(in, rng);
    const auto rep = residual(in.pb, x);
    const auto b = bundles(in.pb, x);
    const auto kr = kernel_rhs(in.pb, rep.per_set);
    const auto cands = candidate_directions(in.pb, separator_table(in.pb, b, kr.fbar0));
    ASSERT_EQ(cands.size(), 4u);
    for (const auto& c : cands) {
        EXPECT_EQ(c.pairing.size(), 2u);
        if (c.ok) EXPECT_EQ(c.d.size(), in.pb.n_x());
        else EXPECT_FALSE(c.diagnostic.empty());
    }
}
