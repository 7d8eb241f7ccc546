#include "roughcal/calibration.hpp"

#include "roughcal/errors.hpp"
#include "roughcal/log.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace roughcal {

void CampaignConfig::check() const
{
    if (launches < 1 || inner_runs < 1) throw InputError("launch and run counts must be at least 1");
    for (double v : {perturb_small_sigma_frac, threshold_frac})
        if (!(v > 0.0 && v < 1.0)) throw InputError("perturbation fractions must lie in (0,1)");
    if (!(tighten_factor > 0.0 && tighten_factor <= 1.0)) throw InputError("tighten factor must lie in (0,1]");
    solver.check();
}

std::mt19937_64 launch_rng(std::uint64_t seed, int launch)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(launch), 0x5eedu};
    return std::mt19937_64(seq);
}

Vec perturb(const Vec& x, const Problem& pb, const CalibrationState& bounds, const CampaignConfig& cfg,
            std::mt19937_64& rng)
{
    Vec out = x;
    const Vec& d = pb.pipes().diameter;
    for (int j = 0; j < pb.n_l(); ++j) {
        const double limit = cfg.threshold_frac * d(j);
        if (out(j) > limit) {
            out(j) = std::uniform_real_distribution<double>(0.0, limit)(rng);
        } else {
            out(j) += std::normal_distribution<double>(0.0, cfg.perturb_small_sigma_frac * d(j))(rng);
        }
    }
    return bounds.clamp(out);
}

SolveResult solve(const Problem& pb, const CalibrationState& x0, Method method, const SolverConfig& cfg,
                  const InnerConfig& inner)
{
    return method == Method::tensor ? solve_tensor(pb, x0, cfg, inner) : solve_newton(pb, x0, cfg);
}

LaunchResult run_launch(const Problem& pb, const CalibrationState& x0, const CampaignConfig& cfg, int launch)
{
    auto rng = launch_rng(cfg.seed, launch);
    SolverConfig sc = cfg.solver;
    LaunchResult lr;
    lr.x_best = x0.x;
    lr.v_best = std::numeric_limits<double>::infinity();
    CalibrationState start = x0;
    for (int r = 0; r < cfg.inner_runs; ++r) {
        if (r > 0) start.x = perturb(lr.x_best, pb, x0, cfg, rng);
        SolveResult res;
        try {
            res = solve(pb, start, cfg.method, sc, cfg.inner);
        } catch (const std::exception& e) {
            warn(std::string("launch ") + std::to_string(launch + 1) + " run " + std::to_string(r + 1) +
                 " failed: " + e.what());
            res.reason = Termination::start_failed;
            res.v = std::numeric_limits<double>::infinity();
        }
        if (res.reason == Termination::start_failed) ++lr.failures;
        lr.run_iterations.push_back(res.iterations);
        lr.run_v.push_back(res.v);
        lr.run_reason.push_back(res.reason);
        if (std::isfinite(res.v) && res.v < lr.v_best) {
            lr.v_best = res.v;
            lr.x_best = res.x;
            lr.best_run = r + 1;
            sc.eps_f = std::max(cfg.eps_f_floor, sc.eps_f * cfg.tighten_factor);
            sc.eps_x = std::max(cfg.eps_x_floor, sc.eps_x * cfg.tighten_factor);
        }
    }
    if (lr.best_run > 0) {
        double sum = 0.0;
        for (int r = 0; r < lr.best_run; ++r) sum += lr.run_iterations[r];
        lr.avg_iter_to_best = sum / lr.best_run;
    }
    return lr;
}

CampaignResult run_campaign(const Problem& pb, const CalibrationState& x0, const CampaignConfig& cfg)
{
    cfg.check();
    CampaignResult cr;
    cr.launches.resize(cfg.launches);
    const int workers = std::clamp(cfg.parallel, 1, cfg.launches);
    if (workers == 1) {
        for (int l = 0; l < cfg.launches; ++l) cr.launches[l] = run_launch(pb, x0, cfg, l);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (int l = next++; l < cfg.launches; l = next++) cr.launches[l] = run_launch(pb, x0, cfg, l);
            });
        for (auto& th : pool) th.join();
    }
    cr.best_v = std::numeric_limits<double>::infinity();
    cr.best_x = x0.x;
    for (int l = 0; l < cfg.launches; ++l) {
        if (cr.launches[l].v_best < cr.best_v) {
            cr.best_v = cr.launches[l].v_best;
            cr.best_x = cr.launches[l].x_best;
            cr.best_launch = l;
        }
    }
    if (cr.best_launch < 0) throw SolveError("every run of the campaign failed");
    return cr;
}

}  // namespace roughcal
