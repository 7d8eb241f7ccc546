#include "roughcal/newton.hpp"

#include "roughcal/errors.hpp"

#include <cmath>
#include <limits>

namespace roughcal {

void SolverConfig::check() const
{
    if (!(eps_f > 0.0) || !(eps_x > 0.0) || !(mu_min > 0.0))
        throw InputError("solver tolerances must be positive");
    if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0))
        throw InputError("backtrack factor must lie in (0,1)");
    if (max_iter < 1) throw InputError("max_iter must be at least 1");
}

std::string to_string(Termination t)
{
    switch (t) {
    case Termination::converged: return "converged";
    case Termination::small_step: return "small_step";
    case Termination::line_search_failed: return "line_search_failed";
    case Termination::max_iter: return "max_iter";
    case Termination::singular: return "singular";
    case Termination::non_finite: return "non_finite";
    case Termination::start_failed: return "start_failed";
    }
    return "unknown";
}

Vec newton_direction(const Mat& J, const Vec& f)
{
    if (J.rows() != f.size()) throw InputError("newton_direction: dimension mismatch");
    Eigen::JacobiSVD<Mat> svd(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    if (s.size() < J.cols() || s(0) == 0.0)
        throw SingularError("Jacobian has fewer rows than columns or vanishes",
                            std::numeric_limits<double>::infinity());
    const double smin = s(s.size() - 1);
    if (!(smin > 1e-10 * s(0)))
        throw SingularError("Jacobian is rank deficient", smin > 0.0 ? s(0) / smin
                                                                     : std::numeric_limits<double>::infinity());
    return -svd.solve(f);
}

SolveResult descend(const Problem& pb, const CalibrationState& x0, const SolverConfig& cfg,
                    const DirectionFn& direction)
{
    cfg.check();
    SolveResult res;
    res.x = x0.clamp(x0.x);
    ResidualReport cur;
    try {
        cur = residual(pb, res.x);
    } catch (const DomainError&) {
        res.reason = Termination::start_failed;
        res.v = std::numeric_limits<double>::infinity();
        return res;
    }
    if (!std::isfinite(cur.v)) {
        res.reason = Termination::start_failed;
        res.f = cur.f;
        res.v = cur.v;
        return res;
    }

    res.reason = Termination::max_iter;
    for (int k = 0; k < cfg.max_iter; ++k) {
        if (cur.v < cfg.eps_f) {
            res.reason = Termination::converged;
            break;
        }
        Vec dx;
        try {
            dx = direction(res.x, cur);
        } catch (const SingularError&) {
            res.reason = Termination::singular;
            break;
        } catch (const DomainError&) {
            res.reason = Termination::non_finite;
            break;
        }
        if (!dx.allFinite()) {
            res.reason = Termination::non_finite;
            break;
        }

        bool accepted = false;
        Vec step;
        for (double mu = 1.0; mu >= cfg.mu_min; mu *= cfg.backtrack_factor) {
            const Vec trial = x0.clamp(res.x + mu * dx);
            try {
                ResidualReport r = residual(pb, trial);
                if (std::isfinite(r.v) && r.v < cur.v) {
                    step = trial - res.x;
                    res.x = trial;
                    cur = std::move(r);
                    accepted = true;
                    break;
                }
            } catch (const DomainError&) {
            }
        }
        if (!accepted) {
            res.reason = Termination::line_search_failed;
            break;
        }
        ++res.iterations;
        if (step.norm() < cfg.eps_x) {
            res.reason = cur.v < cfg.eps_f ? Termination::converged : Termination::small_step;
            break;
        }
        if (k + 1 == cfg.max_iter && cur.v < cfg.eps_f) res.reason = Termination::converged;
    }
    res.f = cur.f;
    res.v = cur.v;
    return res;
}

SolveResult solve_newton(const Problem& pb, const CalibrationState& x0, const SolverConfig& cfg)
{
    const Vec scale = x0.x.cwiseAbs().cwiseMax(1e-4);
    auto dir = [&](const Vec& x, const ResidualReport& r) -> Vec {
        const Mat J = jacobian(pb, x);
        if (!cfg.scaling_enabled) return newton_direction(J, r.f);
        return scale.asDiagonal() * newton_direction(J * scale.asDiagonal(), r.f);
    };
    return descend(pb, x0, cfg, dir);
}

}  // namespace roughcal
