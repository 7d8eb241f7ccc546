#include "roughcal/system.hpp"

#include "roughcal/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace roughcal {

Problem::Problem(Network net, std::vector<MeasurementSet> sets) : net_(std::move(net)), sets_(std::move(sets))
{
    const auto& t = net_.topo;
    for (size_t i = 0; i < sets_.size(); ++i) {
        const auto& m = sets_[i];
        if (m.y_h.size() != t.n_p || m.q.size() != t.n_j || m.h_s.size() != t.n_s)
            throw InputError("measurement set " + std::to_string(m.id) + " does not match the network");
    }
    A_ = t.incidence.cast<double>();
    dh_map_ = A_.transpose() * t.sensor_complement.cast<double>().transpose();
    S_ = t.cycle.cast<double>();
    L_.compute(A_ * net_.pipes.c_l.asDiagonal() * A_.transpose());
    if (L_.info() != Eigen::Success) throw InputError("L = A diag(c_l) A^T is not positive definite");
}

Vec Problem::head_loss(const Vec& x, int set) const
{
    const auto& m = sets_[set];
    return roughcal::head_loss(net_.topo, net_.topo.elevations, m.h_s, m.y_h, h_N(x, set));
}

Vec Problem::project(const Vec& f) const
{
    return net_.pipes.c_l.asDiagonal() * (A_.transpose() * L_.solve(f));
}

bool CalibrationState::within(const Vec& y) const
{
    return (y.array() >= lower.array()).all() && (y.array() <= upper.array()).all();
}

CalibrationState make_state_unbounded_heads(const Problem& pb, const Vec& x)
{
    if (x.size() != pb.n_x()) throw InputError("state vector has wrong length");
    CalibrationState s;
    s.x = x;
    s.lower = Vec::Constant(pb.n_x(), -std::numeric_limits<double>::infinity());
    s.upper = Vec::Constant(pb.n_x(), std::numeric_limits<double>::infinity());
    s.lower.head(pb.n_l()).setZero();
    s.upper.head(pb.n_l()) = 0.1 * pb.pipes().diameter;
    return s;
}

CalibrationState make_state(const Problem& pb, const Vec& x)
{
    CalibrationState s = make_state_unbounded_heads(pb, x);
    const auto& t = pb.topo();
    std::vector<int> sensor_row(t.n_j, -1);
    for (int r = 0; r < t.n_p; ++r) sensor_row[t.sensed[r]] = r;

    for (int i = 0; i < pb.n_m(); ++i) {
        const auto& m = pb.sets()[i];
        // Known piezometric head at a pipe end, NaN when unknown.
        auto known = [&](int end) {
            if (end < 0) return m.h_s(-end - 1);
            if (sensor_row[end] >= 0) return m.y_h(sensor_row[end]);
            return std::numeric_limits<double>::quiet_NaN();
        };
        double lo_all = std::min(m.y_h.size() ? m.y_h.minCoeff() : m.h_s.minCoeff(), m.h_s.minCoeff());
        double hi_all = std::max(m.y_h.size() ? m.y_h.maxCoeff() : m.h_s.maxCoeff(), m.h_s.maxCoeff());
        for (int r = 0; r < t.n_free(); ++r) {
            const int n = t.unsensed[r];
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            int count = 0;
            for (int p = 0; p < t.n_l; ++p) {
                int other;
                if (t.pipe_from[p] == n) other = t.pipe_to[p];
                else if (t.pipe_to[p] == n) other = t.pipe_from[p];
                else continue;
                const double h = known(other);
                if (std::isnan(h)) continue;
                lo = std::min(lo, h);
                hi = std::max(hi, h);
                ++count;
            }
            if (count < 2) {
                lo = lo_all;
                hi = hi_all;
            }
            const int k = pb.h_offset(i) + r;
            s.lower(k) = lo - t.elevations(n);
            s.upper(k) = hi - t.elevations(n);
        }
    }
    return s;
}

std::vector<FlowDerivativeBundle> bundles(const Problem& pb, const Vec& x)
{
    std::vector<FlowDerivativeBundle> out;
    out.reserve(pb.n_m());
    const Vec e = pb.eps(x);
    for (int i = 0; i < pb.n_m(); ++i) {
        try {
            out.push_back(derivatives(e, pb.head_loss(x, i), pb.pipes()));
        } catch (const DomainError& err) {
            throw DomainError(std::string(err.what()) + " (set " + std::to_string(i + 1) + ")", err.pipes(), i);
        }
    }
    return out;
}

ResidualReport residual(const Problem& pb, const Vec& x)
{
    if (x.size() != pb.n_x()) throw InputError("residual: state vector has wrong length");
    ResidualReport rep;
    rep.f.resize(pb.n_m() * pb.n_j());
    const Vec e = pb.eps(x);
    for (int i = 0; i < pb.n_m(); ++i) {
        const Vec dh = pb.head_loss(x, i);
        std::vector<int> bad;
        for (int j = 0; j < dh.size(); ++j)
            if (dh(j) == 0.0) bad.push_back(j);
        if (!bad.empty())
            throw DomainError("zero head loss in set " + std::to_string(i + 1), bad, i);
        Vec fi = pb.A() * flows(e, dh, pb.pipes()) - pb.sets()[i].q;
        rep.f.segment(i * pb.n_j(), pb.n_j()) = fi;
        rep.per_set.push_back(std::move(fi));
    }
    rep.v = rep.f.lpNorm<1>();
    return rep;
}

Mat jacobian(const Problem& pb, const std::vector<FlowDerivativeBundle>& b)
{
    Mat J = Mat::Zero(pb.n_m() * pb.n_j(), pb.n_x());
    for (int i = 0; i < pb.n_m(); ++i) {
        const int r = i * pb.n_j();
        J.block(r, 0, pb.n_j(), pb.n_l()) = pb.A() * b[i].p_eps.asDiagonal();
        J.block(r, pb.h_offset(i), pb.n_j(), pb.n_free()) =
            -pb.A() * b[i].p_dh.asDiagonal() * pb.dh_map();
    }
    return J;
}

Mat jacobian(const Problem& pb, const Vec& x) { return jacobian(pb, bundles(pb, x)); }

KernelRhs kernel_rhs(const Problem& pb, const std::vector<Vec>& f_slices, const std::vector<Vec>& alpha)
{
    if (static_cast<int>(f_slices.size()) != pb.n_m()) throw InputError("kernel_rhs: one slice per set");
    if (!alpha.empty() && static_cast<int>(alpha.size()) != pb.n_m())
        throw InputError("kernel_rhs: one alpha per set");
    KernelRhs out;
    out.r_f.resize(pb.n_m() * pb.n_l());
    for (int i = 0; i < pb.n_m(); ++i) {
        Vec r = pb.project(f_slices[i]);
        out.r_f.segment(i * pb.n_l(), pb.n_l()) = r;
        if (!alpha.empty()) r -= pb.S().transpose() * alpha[i];
        out.fbar0.push_back(std::move(r));
    }
    return out;
}

int numerical_rank(const Mat& m, double rel_tol)
{
    if (m.size() == 0) return 0;
    Eigen::JacobiSVD<Mat> svd(m);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return 0;
    int r = 0;
    for (int i = 0; i < s.size(); ++i) r += s(i) > rel_tol * s(0);
    return r;
}

}  // namespace roughcal
