#pragma once

#include "roughcal/conic.hpp"
#include "roughcal/flow.hpp"
#include "roughcal/system.hpp"

#include <complex>
#include <functional>
#include <vector>

namespace roughcal {

using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

struct Determinants {
    double delta = 0.0;
    double delta_hat = 0.0;
};

Determinants determinants(const PipeDerivatives& p, double fbar0);

// The scalar equation of one pipe as a conic in (d_eps, u) with u the head-loss increment.
Conic pipe_conic(const PipeDerivatives& p, double fbar0);

// Products of separator pairs for one pipe in one set.
struct SeparatorPairs {
    cd ec, bw, fv, bf, ev, cw;
    double be = 0.0;  // half the second roughness derivative
    SignTriple signs;
    double consistency_error = 0.0;  // relative defect of the triple product
};

// All sign triples whose product matches within tol, ordered as enumerated.
std::vector<SeparatorPairs> separator_pairs(const PipeDerivatives& p, double fbar0, double tol = 1e-8);
// The triple with the smallest consistency defect, feasible or not.
SeparatorPairs best_separator_pairs(const PipeDerivatives& p, double fbar0);

// Separators per set and pipe.
using SeparatorTable = std::vector<std::vector<SeparatorPairs>>;

SeparatorTable separator_table(const Problem& pb, const std::vector<FlowDerivativeBundle>& b,
                               const std::vector<Vec>& fbar0);

struct Candidate {
    std::vector<int> pairing;  // per set: 0 uses (e b, e c, e v), 1 uses (b e, b f, b w)
    Vec d;
    double imag_norm = 0.0;
    bool ok = false;
    std::string diagnostic;
};

std::vector<Candidate> candidate_directions(const Problem& pb, const SeparatorTable& sep);

struct KernelTransform {
    std::vector<CMat> M_variants;  // indexed by pairing bit mask, bit i for set i
    CVec s;
    Vec r_f;
    Mat S_b;
    Vec alpha;
    int n_m = 0;
    int n_l = 0;
};

KernelTransform kernel_transform(const Problem& pb, const std::vector<FlowDerivativeBundle>& b,
                                 const SeparatorTable& sep, const std::vector<Vec>& f_slices,
                                 const std::vector<Vec>& alpha = {});

// Block-diagonal A applied to 0.5 (M d)^2 + (M d) s + r_f - S_b alpha.
CVec kernel_form(const Problem& pb, const KernelTransform& kt, int variant, const Vec& d);

struct BetaTransform {
    CMat M_tilde;
    CMat M_pinv;
    CMat W;
    CVec r_f;
    double inversion_defect = 0.0;  // ||M_pinv M_tilde - I||_F

    CVec beta_equation(const CVec& beta) const;
    CVec recover(const CVec& beta) const;  // stacked [d; alpha]
};

BetaTransform beta_transform(const CMat& M, const CVec& s, const Mat& S_b, const Vec& r_f,
                             double pinv_tol = 1e-12);
BetaTransform beta_transform(const KernelTransform& kt, int variant, double pinv_tol = 1e-12);

CMat pseudo_inverse(const CMat& m, double rel_tol = 1e-12);

struct RootDiagnostic {
    // 2 p_dh p_epsdh p_eps - p_eps2 p_dh^2 - p_dh2 p_eps^2, per set and pipe
    std::vector<Vec> delta_expr;
    // p_epsdh^2 - p_eps2 p_dh2, per set and pipe
    std::vector<Vec> delta_hat_expr;
};

RootDiagnostic root_diagnostic(const Problem& pb, const Vec& x);
RootDiagnostic root_diagnostic(const std::vector<FlowDerivativeBundle>& b);

}  // namespace roughcal
