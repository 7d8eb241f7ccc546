#include "support.hpp"

#include "roughcal/calibration.hpp"
#include "roughcal/errors.hpp"
#include "roughcal/report.hpp"

#include <gtest/gtest.h>

#include <json.hpp>

#include <fstream>

using namespace roughcal;
using roughcal::testing::random_instance;

#ifndef ROUGHCAL_DATA_DIR
#define ROUGHCAL_DATA_DIR "data"
#endif

namespace {

const std::string kData = ROUGHCAL_DATA_DIR;

Problem benchmark()
{
    const Network net = load_network(kData + "/threecycle.net");
    return Problem(net, load_measurements(kData + "/threecycle_meas.csv", net.topo));
}

}  // namespace

TEST(Campaign, LaunchStreamsAreReproducibleAndDistinct)
{
    auto a = launch_rng(7, 3), b = launch_rng(7, 3), c = launch_rng(7, 4), d = launch_rng(8, 3);
    const auto va = a();
    EXPECT_EQ(va, b());
    EXPECT_NE(va, c());
    EXPECT_NE(va, d());
}

TEST(Campaign, PerturbRedrawsLargeRoughnessAndKeepsHeads)
{
    const Problem pb = benchmark();
    Vec x = default_x0(pb);
    const auto st = make_state(pb, x);
    x(0) = 0.09 * pb.pipes().diameter(0);
    x(1) = 0.01 * pb.pipes().diameter(1);
    CampaignConfig cfg;
    auto rng = launch_rng(1, 0);
    for (int k = 0; k < 200; ++k) {
        const Vec y = perturb(x, pb, st, cfg, rng);
        EXPECT_TRUE(st.within(y));
        EXPECT_LE(y(0), 0.05 * pb.pipes().diameter(0));
        EXPECT_LT(std::abs(y(1) - x(1)), 6 * 0.0005 * pb.pipes().diameter(1));
        EXPECT_EQ(y.tail(pb.n_x() - pb.n_l()), x.tail(pb.n_x() - pb.n_l()));
    }
}

TEST(Campaign, BestRunBookkeeping)
{
    const Problem pb = benchmark();
    std::ifstream in(kData + "/threecycle_x0.json");
    const auto x0 = make_state(pb, parse_state(nlohmann::json::parse(in), pb));
    CampaignConfig cfg;
    cfg.launches = 1;
    cfg.inner_runs = 6;
    cfg.method = Method::newton;
    const auto lr = run_launch(pb, x0, cfg, 0);
    ASSERT_EQ(lr.run_v.size(), 6u);
    ASSERT_GE(lr.best_run, 1);
    EXPECT_DOUBLE_EQ(lr.v_best, *std::min_element(lr.run_v.begin(), lr.run_v.end()));
    EXPECT_DOUBLE_EQ(lr.run_v[lr.best_run - 1], lr.v_best);
    double sum = 0.0;
    for (int r = 0; r < lr.best_run; ++r) sum += lr.run_iterations[r];
    EXPECT_DOUBLE_EQ(lr.avg_iter_to_best, sum / lr.best_run);
    EXPECT_LT(lr.v_best, residual(pb, x0.x).v);
}

TEST(Campaign, ParallelMatchesSerial)
{
    const Problem pb = benchmark();
    const auto x0 = make_state(pb, default_x0(pb));
    CampaignConfig cfg;
    cfg.launches = 4;
    cfg.inner_runs = 3;
    cfg.seed = 99;
    const auto serial = run_campaign(pb, x0, cfg);
    cfg.parallel = 3;
    const auto parallel = run_campaign(pb, x0, cfg);
    ASSERT_EQ(serial.launches.size(), parallel.launches.size());
    for (size_t l = 0; l < serial.launches.size(); ++l) {
        EXPECT_EQ(serial.launches[l].run_v, parallel.launches[l].run_v);
        EXPECT_EQ(serial.launches[l].x_best, parallel.launches[l].x_best);
    }
    EXPECT_EQ(serial.best_launch, parallel.best_launch);
    EXPECT_EQ(serial.best_v, parallel.best_v);
}

TEST(Campaign, RejectsBadConfig)
{
    const Problem pb = benchmark();
    const auto x0 = make_state(pb, default_x0(pb));
    CampaignConfig cfg;
    cfg.launches = 0;
    EXPECT_THROW(run_campaign(pb, x0, cfg), InputError);
    cfg = {};
    cfg.threshold_frac = 2.0;
    EXPECT_THROW(run_campaign(pb, x0, cfg), InputError);
    cfg = {};
    cfg.solver.eps_f = -1.0;
    EXPECT_THROW(run_campaign(pb, x0, cfg), InputError);
}

TEST(Campaign, PlantedRecoveryOnTree)
{
    std::mt19937_64 rng(81);
    RandomNetworkOptions o;
    o.n_j = 4;
    o.n_l = 4;
    o.n_p = 4;
    const auto in = random_instance(rng, o, 1);
    Vec x = in.truth;
    x.head(in.pb.n_l()) = 0.01 * in.pb.pipes().diameter;
    CampaignConfig cfg;
    cfg.launches = 1;
    cfg.inner_runs = 2;
    cfg.solver.eps_f = 1e-15;
    cfg.solver.eps_x = 1e-15;
    cfg.eps_f_floor = 1e-16;
    cfg.eps_x_floor = 1e-16;
    const auto cr = run_campaign(in.pb, make_state(in.pb, x), cfg);
    EXPECT_LT((cr.best_x.head(in.pb.n_l()) - in.eps).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Report, StateRoundTripAndSchema)
{
    const Problem pb = benchmark();
    const Vec x = default_x0(pb);
    EXPECT_TRUE(parse_state(state_json(pb, x), pb).isApprox(x, 1e-14));
    EXPECT_THROW(parse_state(nlohmann::json{{"eps_mm", {1.0}}}, pb), InputError);

    CampaignConfig cfg;
    cfg.launches = 2;
    cfg.inner_runs = 2;
    const auto x0 = make_state(pb, x);
    const auto cr = run_campaign(pb, x0, cfg);
    const auto rep = campaign_report(pb, cfg, x0, cr);
    EXPECT_EQ(rep["schema"], "roughcal.calibration.v1");
    EXPECT_EQ(rep["launches"].size(), 2u);
    for (const char* key : {"v_m3s", "v_lps", "iter_of_best", "avg_iter_to_best", "eps_mm", "h_N_m"})
        EXPECT_TRUE(rep["launches"][0].contains(key)) << key;
    EXPECT_EQ(rep["method"], "tensor");
    const std::string table = campaign_table(pb, cr);
    EXPECT_NE(table.find("v [m3/s]"), std::string::npos);
    EXPECT_NE(table.find("iter of best"), std::string::npos);
}
