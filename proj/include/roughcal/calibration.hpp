#pragma once

#include "roughcal/newton.hpp"
#include "roughcal/tensor.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace roughcal {

enum class Method { newton, tensor };

struct CampaignConfig {
    int launches = 13;
    int inner_runs = 50;
    Method method = Method::tensor;
    std::uint64_t seed = 0;
    double perturb_small_sigma_frac = 0.0005;
    double threshold_frac = 0.05;
    double tighten_factor = 0.7;
    double eps_f_floor = 1e-9;
    double eps_x_floor = 1e-12;
    int parallel = 1;
    SolverConfig solver;
    InnerConfig inner;

    void check() const;
};

struct LaunchResult {
    Vec x_best;
    double v_best = 0.0;
    int best_run = 0;               // 1-based run that produced x_best
    double avg_iter_to_best = 0.0;  // mean solver iterations over runs 1..best_run
    std::vector<int> run_iterations;
    std::vector<double> run_v;
    std::vector<Termination> run_reason;
    int failures = 0;
};

struct CampaignResult {
    std::vector<LaunchResult> launches;
    int best_launch = -1;
    Vec best_x;
    double best_v = 0.0;
};

std::mt19937_64 launch_rng(std::uint64_t seed, int launch);

// Re-draw roughness above the threshold, jitter the rest, clamp to bounds.
Vec perturb(const Vec& x, const Problem& pb, const CalibrationState& bounds, const CampaignConfig& cfg,
            std::mt19937_64& rng);

SolveResult solve(const Problem& pb, const CalibrationState& x0, Method method, const SolverConfig& cfg,
                  const InnerConfig& inner = {});

LaunchResult run_launch(const Problem& pb, const CalibrationState& x0, const CampaignConfig& cfg, int launch);
CampaignResult run_campaign(const Problem& pb, const CalibrationState& x0, const CampaignConfig& cfg);

}  // namespace roughcal
