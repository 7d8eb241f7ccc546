#pragma once

#include "roughcal/network.hpp"

#include <vector>

namespace roughcal {

// First and second partial derivatives of the turbulent pipe flow.
struct PipeDerivatives {
    double p_eps = 0.0;
    double p_dh = 0.0;
    double p_eps2 = 0.0;
    double p_epsdh = 0.0;
    double p_dh2 = 0.0;
};

struct FlowDerivativeBundle {
    Vec p_eps;
    Vec p_dh;
    Vec p_eps2;
    Vec p_epsdh;
    Vec p_dh2;

    int size() const { return static_cast<int>(p_eps.size()); }
    PipeDerivatives at(int j) const { return {p_eps(j), p_dh(j), p_eps2(j), p_epsdh(j), p_dh2(j)}; }
};

double ell(double eps, double dh, const PipeRow& pipe, const Fluid& fluid);
double flow(double eps, double dh, const PipeRow& pipe, const Fluid& fluid);
PipeDerivatives derivatives(double eps, double dh, const PipeRow& pipe, const Fluid& fluid);

Vec flows(const Vec& eps, const Vec& dh, const PipeCatalog& pipes);
FlowDerivativeBundle derivatives(const Vec& eps, const Vec& dh, const PipeCatalog& pipes);

double reynolds(double Q, const PipeRow& pipe, const Fluid& fluid);
std::vector<bool> reynolds_ok(const Vec& Q, const PipeCatalog& pipes);

}  // namespace roughcal
