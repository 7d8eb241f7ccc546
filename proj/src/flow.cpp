#include "roughcal/flow.hpp"

#include "roughcal/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace roughcal {

namespace {

constexpr double kLn10 = std::numbers::ln10;

double visc_term(const PipeRow& p, const Fluid& f) { return f.eta * p.area / (f.rho * p.diameter); }

}  // namespace

double ell(double eps, double dh, const PipeRow& p, const Fluid& f)
{
    const double a = std::abs(dh);
    if (a == 0.0) throw DomainError("ell: zero head loss", {});
    return eps / (3.7 * p.diameter) + 2.51 * visc_term(p, f) * std::sqrt(p.k / a);
}

double flow(double eps, double dh, const PipeRow& p, const Fluid& f)
{
    if (dh == 0.0) return 0.0;
    const double s = dh > 0.0 ? 1.0 : -1.0;
    return -s * (2.0 / kLn10) * std::sqrt(std::abs(dh) / p.k) * std::log(ell(eps, dh, p, f));
}

PipeDerivatives derivatives(double eps, double dh, const PipeRow& p, const Fluid& f)
{
    const double a = std::abs(dh);
    if (a == 0.0) throw DomainError("derivatives: zero head loss", {});
    const double s = dh > 0.0 ? 1.0 : -1.0;
    const double D = 3.7 * p.diameter;
    const double c = 2.51 * visc_term(p, f);
    const double sk = std::sqrt(p.k);
    const double sa = std::sqrt(a);
    const double l = eps / D + c * sk / sa;
    const double ln_l = std::log(l);

    PipeDerivatives r;
    r.p_eps = -s * (2.0 / kLn10) * sa / (sk * D * l);
    r.p_dh = -(1.0 / kLn10) * (ln_l / (sk * sa) - c / (a * l));
    r.p_eps2 = s * (2.0 / kLn10) * sa / (sk * D * D * l * l);
    r.p_epsdh = -(1.0 / kLn10) * (1.0 / (sk * sa * D * l) + c / (D * a * l * l));
    r.p_dh2 = s / (2.0 * kLn10) *
              (ln_l / (sk * a * sa) - c / (a * a * l) + c * c * sk / (a * a * sa * l * l));
    return r;
}

Vec flows(const Vec& eps, const Vec& dh, const PipeCatalog& pipes)
{
    Vec Q(pipes.size());
    for (int j = 0; j < pipes.size(); ++j) Q(j) = flow(eps(j), dh(j), pipes.row(j), pipes.fluid);
    return Q;
}

FlowDerivativeBundle derivatives(const Vec& eps, const Vec& dh, const PipeCatalog& pipes)
{
    const int n = pipes.size();
    std::vector<int> bad;
    for (int j = 0; j < n; ++j)
        if (dh(j) == 0.0) bad.push_back(j);
    if (!bad.empty()) {
        std::string list;
        for (int j : bad) list += (list.empty() ? "" : ",") + std::to_string(j + 1);
        throw DomainError("zero head loss in pipe(s) " + list, bad);
    }
    FlowDerivativeBundle b;
    b.p_eps.resize(n);
    b.p_dh.resize(n);
    b.p_eps2.resize(n);
    b.p_epsdh.resize(n);
    b.p_dh2.resize(n);
    for (int j = 0; j < n; ++j) {
        const auto d = derivatives(eps(j), dh(j), pipes.row(j), pipes.fluid);
        b.p_eps(j) = d.p_eps;
        b.p_dh(j) = d.p_dh;
        b.p_eps2(j) = d.p_eps2;
        b.p_epsdh(j) = d.p_epsdh;
        b.p_dh2(j) = d.p_dh2;
    }
    return b;
}

double reynolds(double Q, const PipeRow& p, const Fluid& f)
{
    return std::abs(Q) * p.diameter * f.rho / (p.area * f.eta);
}

std::vector<bool> reynolds_ok(const Vec& Q, const PipeCatalog& pipes)
{
    std::vector<bool> ok(pipes.size());
    // Relative slack absorbs rounding for flows constructed exactly at the threshold.
    for (int j = 0; j < pipes.size(); ++j)
        ok[j] = reynolds(Q(j), pipes.row(j), pipes.fluid) >= 4000.0 * (1.0 - 1e-12);
    return ok;
}

}  // namespace roughcal
