#pragma once

#include "roughcal/flow.hpp"
#include "roughcal/network.hpp"

#include <vector>

namespace roughcal {

// Network, measurement sets and the constant matrices shared by every iteration.
class Problem {
public:
    Problem(Network net, std::vector<MeasurementSet> sets);

    const Network& network() const { return net_; }
    const NetworkTopology& topo() const { return net_.topo; }
    const PipeCatalog& pipes() const { return net_.pipes; }
    const std::vector<MeasurementSet>& sets() const { return sets_; }

    int n_l() const { return net_.topo.n_l; }
    int n_j() const { return net_.topo.n_j; }
    int n_free() const { return net_.topo.n_free(); }
    int n_m() const { return static_cast<int>(sets_.size()); }
    int n_x() const { return n_l() + n_m() * n_free(); }
    int h_offset(int set) const { return n_l() + set * n_free(); }

    const Mat& A() const { return A_; }
    // A^T times the transposed complement selector, n_l x n_free.
    const Mat& dh_map() const { return dh_map_; }
    const Mat& S() const { return S_; }

    Vec eps(const Vec& x) const { return x.head(n_l()); }
    Vec h_N(const Vec& x, int set) const { return x.segment(h_offset(set), n_free()); }
    Vec head_loss(const Vec& x, int set) const;

    // diag(c_l) A^T L^{-1} f with L = A diag(c_l) A^T.
    Vec project(const Vec& f) const;

private:
    Network net_;
    std::vector<MeasurementSet> sets_;
    Mat A_;
    Mat dh_map_;
    Mat S_;
    Eigen::LLT<Mat> L_;
};

struct CalibrationState {
    Vec x;
    Vec lower;
    Vec upper;

    Vec clamp(const Vec& y) const { return y.cwiseMax(lower).cwiseMin(upper); }
    bool within(const Vec& y) const;
};

// Roughness in [0, 0.1 d]; h_N within the range of neighbouring known heads.
CalibrationState make_state(const Problem& pb, const Vec& x);
// Roughness in [0, 0.1 d]; h_N unbounded.
CalibrationState make_state_unbounded_heads(const Problem& pb, const Vec& x);

struct ResidualReport {
    Vec f;                   // m^3/s
    double v = 0.0;          // L1 norm, m^3/s
    std::vector<Vec> per_set;
};

std::vector<FlowDerivativeBundle> bundles(const Problem& pb, const Vec& x);
ResidualReport residual(const Problem& pb, const Vec& x);
Mat jacobian(const Problem& pb, const Vec& x);
Mat jacobian(const Problem& pb, const std::vector<FlowDerivativeBundle>& b);

struct KernelRhs {
    std::vector<Vec> fbar0;  // per set, length n_l
    Vec r_f;                 // stacked projections without the kernel shift
};

// alpha may be empty (treated as zero) or one vector of length n_l - n_j per set.
KernelRhs kernel_rhs(const Problem& pb, const std::vector<Vec>& f_slices,
                     const std::vector<Vec>& alpha = {});

int numerical_rank(const Mat& m, double rel_tol = 1e-10);

}  // namespace roughcal
