#pragma once

#include "roughcal/network.hpp"

#include <iosfwd>
#include <vector>

namespace roughcal {

struct SteadyState {
    Vec h;     // pressure heads of inner nodes, m
    Vec head;  // piezometric heads of inner nodes, m
    Vec Q;     // pipe flows, m^3/s
    int iterations = 0;
    double max_residual = 0.0;  // max nodal imbalance, m^3/s
    std::vector<int> non_turbulent;
};

// h_guess holds pressure heads; empty selects a depth-based guess.
SteadyState solve_steady(const Network& net, const Vec& eps, const Vec& q, const Vec& h_s,
                         const Vec& h_guess = {});

struct GeneratedMeasurements {
    std::vector<MeasurementSet> sets;
    std::vector<SteadyState> truth;
};

GeneratedMeasurements generate_measurements(const Network& net, const Vec& eps,
                                            const std::vector<Vec>& demands,
                                            const std::vector<Vec>& h_s_list);

// Hidden ground truth: all heads and flows per set, JSON.
void write_truth(std::ostream& out, const Network& net, const Vec& eps, const GeneratedMeasurements& gm);

}  // namespace roughcal
