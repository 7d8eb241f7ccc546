#include "roughcal/separators.hpp"

#include "roughcal/errors.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace roughcal {

Determinants determinants(const PipeDerivatives& p, double fbar0)
{
    const double a11 = p.p_eps2, a12 = -p.p_epsdh, a13 = p.p_eps;
    const double a22 = p.p_dh2, a23 = -p.p_dh, a33 = 2.0 * fbar0;
    const double det = a11 * (a22 * a33 - a23 * a23) - a12 * (a12 * a33 - a23 * a13) +
                       a13 * (a12 * a23 - a22 * a13);
    return {0.5 * det, p.p_eps2 * p.p_dh2 - p.p_epsdh * p.p_epsdh};
}

Conic pipe_conic(const PipeDerivatives& p, double fbar0)
{
    return {0.5 * p.p_eps2, -0.5 * p.p_epsdh, 0.5 * p.p_dh2, 0.5 * p.p_eps, -0.5 * p.p_dh, fbar0};
}

namespace {

constexpr std::array<SignTriple, 8> kTriples{{{1, 1, 1},
                                              {1, 1, -1},
                                              {1, -1, 1},
                                              {1, -1, -1},
                                              {-1, 1, 1},
                                              {-1, 1, -1},
                                              {-1, -1, 1},
                                              {-1, -1, -1}}};

std::array<SeparatorPairs, 8> all_pairs(const PipeDerivatives& p, double f0)
{
    const cd r1 = std::sqrt(cd(p.p_epsdh * p.p_epsdh - p.p_eps2 * p.p_dh2));
    const cd r2 = std::sqrt(cd(p.p_eps * p.p_eps - 2.0 * f0 * p.p_eps2));
    const cd r3 = std::sqrt(cd(p.p_dh * p.p_dh - 2.0 * f0 * p.p_dh2));
    const cd target = 2.0 * p.p_eps2 * p.p_dh2 * f0;
    std::array<SeparatorPairs, 8> out;
    for (int k = 0; k < 8; ++k) {
        const auto& t = kTriples[k];
        SeparatorPairs& s = out[k];
        s.signs = t;
        s.be = 0.5 * p.p_eps2;
        s.ec = 0.5 * (-p.p_epsdh + double(t.s1) * r1);
        s.bf = 0.5 * (-p.p_epsdh - double(t.s1) * r1);
        s.bw = 0.5 * (p.p_eps + double(t.s2) * r2);
        s.ev = 0.5 * (p.p_eps - double(t.s2) * r2);
        s.fv = 0.5 * (-p.p_dh + double(t.s3) * r3);
        s.cw = 0.5 * (-p.p_dh - double(t.s3) * r3);
        const cd prod = 8.0 * s.ec * s.bw * s.fv;
        const double ref = std::max(std::abs(target), 8.0 * std::abs(s.ec) * std::abs(s.bw) * std::abs(s.fv));
        s.consistency_error = ref == 0.0 ? 0.0 : std::abs(prod - target) / ref;
    }
    return out;
}

}  // namespace

std::vector<SeparatorPairs> separator_pairs(const PipeDerivatives& p, double fbar0, double tol)
{
    std::vector<SeparatorPairs> out;
    for (const auto& s : all_pairs(p, fbar0))
        if (s.consistency_error <= tol) out.push_back(s);
    return out;
}

SeparatorPairs best_separator_pairs(const PipeDerivatives& p, double fbar0)
{
    const auto all = all_pairs(p, fbar0);
    int best = 0;
    for (int k = 1; k < 8; ++k)
        if (all[k].consistency_error < all[best].consistency_error) best = k;
    return all[best];
}

SeparatorTable separator_table(const Problem& pb, const std::vector<FlowDerivativeBundle>& b,
                               const std::vector<Vec>& fbar0)
{
    SeparatorTable t(pb.n_m());
    for (int i = 0; i < pb.n_m(); ++i)
        for (int j = 0; j < pb.n_l(); ++j) t[i].push_back(best_separator_pairs(b[i].at(j), fbar0[i](j)));
    return t;
}

std::vector<Candidate> candidate_directions(const Problem& pb, const SeparatorTable& sep)
{
    const int n_m = pb.n_m(), n_l = pb.n_l();
    if (static_cast<int>(sep.size()) != n_m) throw InputError("candidate_directions: one row per set");
    const CMat dh = pb.dh_map().cast<cd>();
    std::vector<Candidate> out;
    for (int mask = 0; mask < (1 << n_m); ++mask) {
        Candidate cand;
        CMat K = CMat::Zero(n_m * n_l, pb.n_x());
        CVec rhs(n_m * n_l);
        for (int i = 0; i < n_m; ++i) {
            const int bit = (mask >> i) & 1;
            cand.pairing.push_back(bit);
            CVec diag_u(n_l);
            for (int j = 0; j < n_l; ++j) {
                const auto& s = sep[i][j];
                K(i * n_l + j, j) = s.be;
                diag_u(j) = bit == 0 ? s.ec : s.bf;
                rhs(i * n_l + j) = -(bit == 0 ? s.ev : s.bw);
            }
            K.block(i * n_l, pb.h_offset(i), n_l, pb.n_free()) = diag_u.asDiagonal() * dh;
        }
        Eigen::JacobiSVD<CMat> svd(K, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto& sv = svd.singularValues();
        int rank = 0;
        for (int k = 0; k < sv.size(); ++k) rank += sv(k) > 1e-10 * sv(0);
        if (sv.size() == 0 || rank < pb.n_x()) {
            cand.diagnostic = "rank " + std::to_string(rank) + " < " + std::to_string(pb.n_x());
            out.push_back(std::move(cand));
            continue;
        }
        const CVec d = svd.solve(rhs);
        cand.d = d.real();
        cand.imag_norm = d.imag().norm();
        cand.ok = cand.d.allFinite();
        if (!cand.ok) cand.diagnostic = "non-finite solution";
        out.push_back(std::move(cand));
    }
    return out;
}

KernelTransform kernel_transform(const Problem& pb, const std::vector<FlowDerivativeBundle>& b,
                                 const SeparatorTable& sep, const std::vector<Vec>& f_slices,
                                 const std::vector<Vec>& alpha)
{
    const int n_m = pb.n_m(), n_l = pb.n_l(), n_c = n_l - pb.n_j();
    KernelTransform kt;
    kt.n_m = n_m;
    kt.n_l = n_l;
    kt.r_f = kernel_rhs(pb, f_slices).r_f;
    kt.S_b = Mat::Zero(n_m * n_l, n_m * n_c);
    kt.alpha = Vec::Zero(n_m * n_c);
    for (int i = 0; i < n_m; ++i) {
        kt.S_b.block(i * n_l, i * n_c, n_l, n_c) = pb.S().transpose();
        if (!alpha.empty()) kt.alpha.segment(i * n_c, n_c) = alpha[i];
    }
    kt.s.resize(n_m * n_l);
    CVec root(n_m * n_l);
    for (int i = 0; i < n_m; ++i)
        for (int j = 0; j < n_l; ++j) {
            root(i * n_l + j) = std::sqrt(cd(b[i].p_eps2(j)));
            kt.s(i * n_l + j) = b[i].p_eps(j) / root(i * n_l + j);
        }
    const CMat dh = pb.dh_map().cast<cd>();
    for (int mask = 0; mask < (1 << n_m); ++mask) {
        CMat M = CMat::Zero(n_m * n_l, pb.n_x());
        for (int i = 0; i < n_m; ++i) {
            const int bit = (mask >> i) & 1;
            CVec du(n_l);
            for (int j = 0; j < n_l; ++j) {
                const auto& s = sep[i][j];
                M(i * n_l + j, j) = root(i * n_l + j);
                du(j) = 2.0 * (bit == 0 ? s.ec : s.bf) / root(i * n_l + j);
            }
            M.block(i * n_l, pb.h_offset(i), n_l, pb.n_free()) = du.asDiagonal() * dh;
        }
        kt.M_variants.push_back(std::move(M));
    }
    return kt;
}

CVec kernel_form(const Problem& pb, const KernelTransform& kt, int variant, const Vec& d)
{
    const CVec w = kt.M_variants.at(variant) * d.cast<cd>();
    const CVec inner = 0.5 * w.cwiseProduct(w) + w.cwiseProduct(kt.s) + kt.r_f.cast<cd>() -
                       (kt.S_b * kt.alpha).cast<cd>();
    const CMat A = pb.A().cast<cd>();
    CVec out(kt.n_m * pb.n_j());
    for (int i = 0; i < kt.n_m; ++i) out.segment(i * pb.n_j(), pb.n_j()) = A * inner.segment(i * kt.n_l, kt.n_l);
    return out;
}

CMat pseudo_inverse(const CMat& m, double rel_tol)
{
    if (m.size() == 0) return CMat::Zero(m.cols(), m.rows());
    Eigen::JacobiSVD<CMat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
    for (int k = 0; k < s.size(); ++k)
        if (s(k) > rel_tol * s(0)) inv(k) = 1.0 / s(k);
    return svd.matrixV() * inv.cast<cd>().asDiagonal() * svd.matrixU().adjoint();
}

BetaTransform beta_transform(const CMat& M, const CVec& s, const Mat& S_b, const Vec& r_f, double pinv_tol)
{
    if (M.rows() != s.size() || M.rows() != S_b.rows() || M.rows() != r_f.size())
        throw InputError("beta_transform: dimension mismatch");
    BetaTransform bt;
    const Eigen::Index n = M.cols(), k = S_b.cols();
    bt.M_tilde.resize(M.rows(), n + k);
    bt.M_tilde << s.asDiagonal() * M, -S_b.cast<cd>();
    bt.M_pinv = pseudo_inverse(bt.M_tilde, pinv_tol);
    CMat M0 = CMat::Zero(M.rows(), n + k);
    M0.leftCols(n) = M;
    bt.W = M0 * bt.M_pinv;
    bt.r_f = r_f.cast<cd>();
    bt.inversion_defect = (bt.M_pinv * bt.M_tilde - CMat::Identity(n + k, n + k)).norm();
    return bt;
}

BetaTransform beta_transform(const KernelTransform& kt, int variant, double pinv_tol)
{
    return beta_transform(kt.M_variants.at(variant), kt.s, kt.S_b, kt.r_f, pinv_tol);
}

CVec BetaTransform::beta_equation(const CVec& beta) const
{
    return W * beta.cwiseProduct(beta) + 2.0 * beta + 2.0 * W * r_f;
}

CVec BetaTransform::recover(const CVec& beta) const
{
    return -M_pinv * (0.5 * beta.cwiseProduct(beta) + r_f);
}

RootDiagnostic root_diagnostic(const std::vector<FlowDerivativeBundle>& b)
{
    RootDiagnostic rd;
    for (const auto& bi : b) {
        rd.delta_expr.push_back(2.0 * bi.p_dh.cwiseProduct(bi.p_epsdh).cwiseProduct(bi.p_eps) -
                                bi.p_eps2.cwiseProduct(bi.p_dh.cwiseAbs2()) -
                                bi.p_dh2.cwiseProduct(bi.p_eps.cwiseAbs2()));
        rd.delta_hat_expr.push_back(bi.p_epsdh.cwiseAbs2() - bi.p_eps2.cwiseProduct(bi.p_dh2));
    }
    return rd;
}

RootDiagnostic root_diagnostic(const Problem& pb, const Vec& x) { return root_diagnostic(bundles(pb, x)); }

}  // namespace roughcal
