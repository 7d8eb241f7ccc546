#pragma once

#include "roughcal/newton.hpp"
#include "roughcal/system.hpp"

#include <vector>

namespace roughcal {

struct InnerConfig {
    double lambda0 = 1e-3;
    double lambda_up = 10.0;
    double lambda_down = 10.0;
    int max_iter = 100;
    double grad_tol = 1e-12;
};

struct TensorResidual {
    std::vector<Vec> per_set;  // A times the per-pipe residual
    Vec stacked;
};

// Quadratic model of the residual around a fixed state, evaluated in the direction d.
class TensorModel {
public:
    TensorModel(const Problem& pb, std::vector<FlowDerivativeBundle> b, std::vector<Vec> f_slices);
    TensorModel(const Problem& pb, const Vec& x);

    // Per-pipe residual before multiplication with A, one vector per set.
    std::vector<Vec> residual_bar(const Vec& d) const;
    TensorResidual residual(const Vec& d) const;
    Mat jacobian(const Vec& d) const;

    const std::vector<FlowDerivativeBundle>& bundles() const { return b_; }
    const std::vector<Vec>& f_slices() const { return f_; }

private:
    const Problem& pb_;
    std::vector<FlowDerivativeBundle> b_;
    std::vector<Vec> f_;
    std::vector<Vec> r_;
};

TensorResidual tensor_residual(const Problem& pb, const Vec& d, const std::vector<FlowDerivativeBundle>& b,
                               const std::vector<Vec>& f_slices);
Mat tensor_jacobian(const Problem& pb, const Vec& d, const std::vector<FlowDerivativeBundle>& b);

struct TensorDirection {
    Vec d;
    Vec d0;
    double norm0 = 0.0;  // ||m(d0)||_2
    double norm = 0.0;   // ||m(d)||_2
    int inner_iterations = 0;
    bool fallback = false;
};

TensorDirection solve_tensor_direction(const Problem& pb, const Vec& x, const InnerConfig& cfg = {});

SolveResult solve_tensor(const Problem& pb, const CalibrationState& x0, const SolverConfig& cfg,
                         const InnerConfig& inner = {});

}  // namespace roughcal
