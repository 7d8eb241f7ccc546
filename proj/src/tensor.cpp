#include "roughcal/tensor.hpp"

#include "roughcal/errors.hpp"
#include "roughcal/log.hpp"

#include <cmath>

namespace roughcal {

TensorModel::TensorModel(const Problem& pb, std::vector<FlowDerivativeBundle> b, std::vector<Vec> f_slices)
    : pb_(pb), b_(std::move(b)), f_(std::move(f_slices))
{
    if (static_cast<int>(b_.size()) != pb.n_m() || static_cast<int>(f_.size()) != pb.n_m())
        throw InputError("tensor model: one bundle and one residual slice per set");
    for (const auto& f : f_) r_.push_back(pb.project(f));
}

TensorModel::TensorModel(const Problem& pb, const Vec& x)
    : TensorModel(pb, roughcal::bundles(pb, x), roughcal::residual(pb, x).per_set)
{
}

std::vector<Vec> TensorModel::residual_bar(const Vec& d) const
{
    if (d.size() != pb_.n_x()) throw InputError("tensor residual: direction has wrong length");
    const Vec de = d.head(pb_.n_l());
    std::vector<Vec> out;
    for (int i = 0; i < pb_.n_m(); ++i) {
        const auto& b = b_[i];
        const Vec u = pb_.dh_map() * d.segment(pb_.h_offset(i), pb_.n_free());
        Vec m = 0.5 * b.p_eps2.cwiseProduct(de.cwiseAbs2()) -
                de.cwiseProduct(b.p_epsdh).cwiseProduct(u) + 0.5 * b.p_dh2.cwiseProduct(u.cwiseAbs2()) +
                b.p_eps.cwiseProduct(de) - b.p_dh.cwiseProduct(u) + r_[i];
        out.push_back(std::move(m));
    }
    return out;
}

TensorResidual TensorModel::residual(const Vec& d) const
{
    TensorResidual tr;
    tr.stacked.resize(pb_.n_m() * pb_.n_j());
    const auto bar = residual_bar(d);
    for (int i = 0; i < pb_.n_m(); ++i) {
        Vec m = pb_.A() * bar[i];
        tr.stacked.segment(i * pb_.n_j(), pb_.n_j()) = m;
        tr.per_set.push_back(std::move(m));
    }
    return tr;
}

Mat TensorModel::jacobian(const Vec& d) const { return tensor_jacobian(pb_, d, b_); }

TensorResidual tensor_residual(const Problem& pb, const Vec& d, const std::vector<FlowDerivativeBundle>& b,
                               const std::vector<Vec>& f_slices)
{
    return TensorModel(pb, b, f_slices).residual(d);
}

Mat tensor_jacobian(const Problem& pb, const Vec& d, const std::vector<FlowDerivativeBundle>& b)
{
    if (d.size() != pb.n_x()) throw InputError("tensor jacobian: direction has wrong length");
    const Vec de = d.head(pb.n_l());
    Mat J = Mat::Zero(pb.n_m() * pb.n_j(), pb.n_x());
    for (int i = 0; i < pb.n_m(); ++i) {
        const auto& bi = b[i];
        const Vec u = pb.dh_map() * d.segment(pb.h_offset(i), pb.n_free());
        const Vec je = bi.p_eps2.cwiseProduct(de) + bi.p_eps - bi.p_epsdh.cwiseProduct(u);
        const Vec jh = bi.p_dh2.cwiseProduct(u) - bi.p_dh - bi.p_epsdh.cwiseProduct(de);
        const int r = i * pb.n_j();
        J.block(r, 0, pb.n_j(), pb.n_l()) = pb.A() * je.asDiagonal();
        J.block(r, pb.h_offset(i), pb.n_j(), pb.n_free()) = pb.A() * jh.asDiagonal() * pb.dh_map();
    }
    return J;
}

namespace {

// Levenberg-Marquardt on 0.5 ||m(d)||^2 with monotone acceptance.
Vec levenberg_marquardt(const TensorModel& model, Vec d, const InnerConfig& cfg, int& iterations)
{
    Vec m = model.residual(d).stacked;
    double phi = 0.5 * m.squaredNorm();
    double lambda = cfg.lambda0;
    iterations = 0;
    while (iterations < cfg.max_iter) {
        const Mat J = model.jacobian(d);
        const Vec g = J.transpose() * m;
        if (g.lpNorm<Eigen::Infinity>() < cfg.grad_tol) break;
        const Mat H = J.transpose() * J;
        const Vec diag = H.diagonal().cwiseMax(1e-300);
        bool accepted = false;
        while (iterations < cfg.max_iter) {
            ++iterations;
            Mat Hd = H;
            Hd.diagonal() += lambda * diag;
            const Vec step = Hd.ldlt().solve(-g);
            if (!step.allFinite()) {
                lambda *= cfg.lambda_up;
                continue;
            }
            const Vec trial = d + step;
            const Vec mt = model.residual(trial).stacked;
            const double phit = 0.5 * mt.squaredNorm();
            if (std::isfinite(phit) && phit < phi) {
                const bool tiny = step.norm() <= 1e-15 * (d.norm() + 1e-300);
                d = trial;
                m = mt;
                phi = phit;
                lambda /= cfg.lambda_down;
                accepted = !tiny;
                if (tiny) iterations = cfg.max_iter;
                break;
            }
            lambda *= cfg.lambda_up;
            if (lambda > 1e30) {
                iterations = cfg.max_iter;
                break;
            }
        }
        if (!accepted) break;
    }
    return d;
}

}  // namespace

TensorDirection solve_tensor_direction(const Problem& pb, const Vec& x, const InnerConfig& cfg)
{
    const ResidualReport rep = residual(pb, x);
    TensorModel model(pb, bundles(pb, x), rep.per_set);
    const Mat J = jacobian(pb, model.bundles());
    const Vec newton = newton_direction(J, rep.f);

    TensorDirection out;
    out.d0 = 0.1 * newton;
    out.norm0 = model.residual(out.d0).stacked.norm();
    try {
        out.d = levenberg_marquardt(model, out.d0, cfg, out.inner_iterations);
        out.norm = model.residual(out.d).stacked.norm();
        if (!out.d.allFinite() || !std::isfinite(out.norm)) throw SolveError("non-finite tensor direction");
    } catch (const std::exception& e) {
        warn(std::string("tensor direction failed, using Newton direction: ") + e.what());
        out.d = newton;
        out.norm = model.residual(out.d).stacked.norm();
        out.fallback = true;
    }
    return out;
}

SolveResult solve_tensor(const Problem& pb, const CalibrationState& x0, const SolverConfig& cfg,
                         const InnerConfig& inner)
{
    auto dir = [&](const Vec& x, const ResidualReport&) -> Vec {
        return solve_tensor_direction(pb, x, inner).d;
    };
    return descend(pb, x0, cfg, dir);
}

}  // namespace roughcal
