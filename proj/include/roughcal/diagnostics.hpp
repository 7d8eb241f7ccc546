#pragma once

#include "roughcal/system.hpp"

#include <array>

namespace roughcal {

// Max relative error of each derivative family against central differences,
// ordered p_eps, p_dh, p_eps2, p_epsdh, p_dh2.
std::array<double, 5> derivative_fd_errors(const Problem& pb, const Vec& x, double rel_step = 1e-7);

// Max entrywise error of the Jacobian against central differences of the residual,
// relative to the largest entry of the same column.
double jacobian_fd_error(const Problem& pb, const Vec& x, double rel_step = 1e-7);

// Second-order model f + J d + 0.5 [d^T H_r d]_r with Hessians from differenced Jacobians.
Vec bruteforce_tensor_residual(const Problem& pb, const Vec& x, const Vec& d, double rel_step = 1e-6);

}  // namespace roughcal
