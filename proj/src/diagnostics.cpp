#include "roughcal/diagnostics.hpp"

#include <algorithm>
#include <cmath>

namespace roughcal {

namespace {

double rel(double a, double b, double floor)
{
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace

std::array<double, 5> derivative_fd_errors(const Problem& pb, const Vec& x, double rs)
{
    std::array<double, 5> err{};
    const Vec eps = pb.eps(x);
    const auto& pipes = pb.pipes();
    for (int i = 0; i < pb.n_m(); ++i) {
        const Vec dh = pb.head_loss(x, i);
        for (int j = 0; j < pb.n_l(); ++j) {
            const PipeRow row = pipes.row(j);
            const double e = eps(j), h = dh(j);
            const double se = rs * std::max(1.0, std::abs(e)), sh = rs * std::max(1.0, std::abs(h));
            const auto d0 = derivatives(e, h, row, pipes.fluid);
            const auto dep = derivatives(e + se, h, row, pipes.fluid);
            const auto dem = derivatives(e - se, h, row, pipes.fluid);
            const auto dhp = derivatives(e, h + sh, row, pipes.fluid);
            const auto dhm = derivatives(e, h - sh, row, pipes.fluid);
            const double fe = (flow(e + se, h, row, pipes.fluid) - flow(e - se, h, row, pipes.fluid)) / (2 * se);
            const double fh = (flow(e, h + sh, row, pipes.fluid) - flow(e, h - sh, row, pipes.fluid)) / (2 * sh);
            err[0] = std::max(err[0], rel(d0.p_eps, fe, 1e-300));
            err[1] = std::max(err[1], rel(d0.p_dh, fh, 1e-300));
            err[2] = std::max(err[2], rel(d0.p_eps2, (dep.p_eps - dem.p_eps) / (2 * se), 1e-300));
            err[3] = std::max(err[3], rel(d0.p_epsdh, (dhp.p_eps - dhm.p_eps) / (2 * sh), 1e-300));
            err[4] = std::max(err[4], rel(d0.p_dh2, (dhp.p_dh - dhm.p_dh) / (2 * sh), 1e-300));
        }
    }
    return err;
}

double jacobian_fd_error(const Problem& pb, const Vec& x, double rs)
{
    const Mat J = jacobian(pb, x);
    double worst = 0.0;
    for (int k = 0; k < pb.n_x(); ++k) {
        const double step = rs * std::max(1.0, std::abs(x(k)));
        Vec xp = x, xm = x;
        xp(k) += step;
        xm(k) -= step;
        const Vec col = (residual(pb, xp).f - residual(pb, xm).f) / (2 * step);
        const double scale = std::max(J.col(k).lpNorm<Eigen::Infinity>(), 1e-300);
        worst = std::max(worst, (J.col(k) - col).lpNorm<Eigen::Infinity>() / scale);
    }
    return worst;
}

Vec bruteforce_tensor_residual(const Problem& pb, const Vec& x, const Vec& d, double rs)
{
    const ResidualReport r = residual(pb, x);
    const Mat J = jacobian(pb, x);
    const int n = pb.n_x();
    std::vector<Mat> dJ(n);
    for (int k = 0; k < n; ++k) {
        const double step = rs * std::max(1.0, std::abs(x(k)));
        Vec xp = x, xm = x;
        xp(k) += step;
        xm(k) -= step;
        dJ[k] = (jacobian(pb, xp) - jacobian(pb, xm)) / (2 * step);
    }
    Vec quad = Vec::Zero(r.f.size());
    for (int k = 0; k < n; ++k) quad += d(k) * (dJ[k] * d);
    return r.f + J * d + 0.5 * quad;
}

}  // namespace roughcal
