#include "roughcal/conic.hpp"

#include "roughcal/errors.hpp"

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstdio>

namespace roughcal {

template <class T>
double BasicConic<T>::scale() const
{
    return std::max({std::abs(a), std::abs(h), std::abs(b), std::abs(f), std::abs(g), std::abs(c)});
}

template struct BasicConic<double>;
template struct BasicConic<cd>;

std::string to_string(ConicClass c)
{
    switch (c) {
    case ConicClass::two_intersecting_lines: return "two_intersecting_lines";
    case ConicClass::parallel_lines_or_single: return "parallel_lines_or_single";
    case ConicClass::single_point: return "single_point";
    case ConicClass::non_degenerate: return "non_degenerate";
    }
    return "unknown";
}

std::string SignTriple::str() const
{
    std::string s;
    for (int v : {s1, s2, s3}) s += v > 0 ? '+' : '-';
    return s;
}

double default_delta_tol(const Conic& q)
{
    const double s = std::max(1.0, q.scale());
    return 1e-9 * s * s * s;
}

namespace {

double hat_tol(const Conic& q)
{
    const double s = std::max(1.0, q.scale());
    return 1e-9 * s * s;
}

constexpr std::array<SignTriple, 8> kTriples{{{1, 1, 1},
                                              {1, 1, -1},
                                              {1, -1, 1},
                                              {1, -1, -1},
                                              {-1, 1, 1},
                                              {-1, 1, -1},
                                              {-1, -1, 1},
                                              {-1, -1, -1}}};

LinePair normalized(LinePair lp)
{
    for (Line* l : {&lp.first, &lp.second}) {
        cd big = l->A;
        for (cd v : {l->B, l->C})
            if (std::abs(v) > std::abs(big)) big = v;
        if (std::abs(big) == 0.0) continue;
        l->A /= big;
        l->B /= big;
        l->C /= big;
        lp.nu *= big;
    }
    return lp;
}

Line swapped(const Line& l) { return {l.B, l.A, l.C}; }

std::vector<LinePair> factor_anchored(const Conic& q)
{
    const cd a = q.a, h = q.h, b = q.b, f = q.f, g = q.g, c = q.c;
    const cd r1 = std::sqrt(h * h - a * b);
    const cd r3 = std::sqrt(g * g - b * c);
    const cd r2 = std::sqrt(f * f - a * c);
    const double small = 1e-12 * std::max(1.0, q.scale());

    std::vector<LinePair> out;
    for (const auto& t : feasible_triples(q)) {
        const cd DB = h + double(t.s1) * r1;
        if (std::abs(DB) <= small) continue;
        const cd DC = f - double(t.s2) * r2;
        const cd BF = g - double(t.s3) * r3;
        LinePair lp{{a, DB, DC}, {DB, b, BF}, 1.0 / DB, t};
        if (conic_distance(expand(lp), q) <= 1e-9) out.push_back(lp);
    }
    if (!out.empty()) return out;

    // Quadratic in x whose discriminant is a perfect square in y.
    const cd p = r1;
    cd s = r2;
    if (std::abs(p * s - (h * f - a * g)) > std::abs(-p * s - (h * f - a * g))) s = -s;
    LinePair lp{{a, h - p, f - s}, {a, h + p, f + s}, 1.0 / a, std::nullopt};
    if (conic_distance(expand(lp), q) > 1e-6)
        throw NotFactorizable("conic does not split into lines", q.delta());
    out.push_back(normalized(lp));
    return out;
}

}  // namespace

ConicClass classify(const Conic& q, double tol)
{
    if (tol < 0.0) tol = default_delta_tol(q);
    if (std::abs(q.delta()) > tol) return ConicClass::non_degenerate;
    const double dh = q.delta_hat();
    const double th = hat_tol(q);
    if (dh < -th) return ConicClass::two_intersecting_lines;
    if (dh <= th) return ConicClass::parallel_lines_or_single;
    return ConicClass::single_point;
}

bool is_real_factorizable(const Conic& q, double tol)
{
    switch (classify(q, tol)) {
    case ConicClass::two_intersecting_lines: return true;
    case ConicClass::parallel_lines_or_single: {
        const double t = hat_tol(q);
        const bool sum_form = q.f * q.f + q.g * q.g >= q.c * (q.a + q.b) - t;
        [[maybe_unused]] const bool split_form = q.f * q.f >= q.a * q.c - t && q.g * q.g >= q.b * q.c - t;
        assert(sum_form == split_form);
        return sum_form;
    }
    default: return false;
    }
}

std::vector<SignTriple> feasible_triples(const Conic& q, double rel_tol)
{
    const cd a = q.a, h = q.h, b = q.b, f = q.f, g = q.g, c = q.c;
    const cd r1 = std::sqrt(h * h - a * b);
    const cd r2 = std::sqrt(f * f - a * c);
    const cd r3 = std::sqrt(g * g - b * c);
    const cd target = a * b * c;
    std::vector<SignTriple> out;
    for (const auto& t : kTriples) {
        const cd x = h + double(t.s1) * r1, y = f + double(t.s2) * r2, z = g + double(t.s3) * r3;
        const double ref = std::max(std::abs(target), std::abs(x) * std::abs(y) * std::abs(z));
        if (std::abs(x * y * z - target) <= rel_tol * ref) out.push_back(t);
    }
    return out;
}

std::vector<LinePair> factor(const Conic& q, double tol)
{
    if (tol < 0.0) tol = default_delta_tol(q);
    const double d = q.delta();
    if (std::abs(d) > tol) throw NotFactorizable("conic is non-degenerate", d);

    const double small = 1e-12 * std::max(1.0, q.scale());
    if (std::abs(q.a) > small) return factor_anchored(q);
    if (std::abs(q.b) > small) {
        auto out = factor_anchored({q.b, q.h, q.a, q.g, q.f, q.c});
        for (auto& lp : out) {
            lp.first = swapped(lp.first);
            lp.second = swapped(lp.second);
        }
        return out;
    }
    // Bilinear form 2h xy + 2f x + 2g y + c.
    LinePair lp;
    if (std::abs(q.h) > small) lp = {{2.0 * q.h, 0.0, 2.0 * q.g}, {0.0, 1.0, q.f / q.h}, 1.0, std::nullopt};
    else lp = {{2.0 * q.f, 2.0 * q.g, q.c}, {0.0, 0.0, 1.0}, 1.0, std::nullopt};
    if (conic_distance(expand(lp), q) > 1e-6)
        throw NotFactorizable("bilinear conic does not split into lines", d);
    return {normalized(lp)};
}

ComplexConic expand(const LinePair& lp)
{
    const Line& p = lp.first;
    const Line& s = lp.second;
    ComplexConic out;
    out.a = lp.nu * p.A * s.A;
    out.b = lp.nu * p.B * s.B;
    out.c = lp.nu * p.C * s.C;
    out.h = lp.nu * (p.A * s.B + p.B * s.A) / 2.0;
    out.f = lp.nu * (p.A * s.C + p.C * s.A) / 2.0;
    out.g = lp.nu * (p.B * s.C + p.C * s.B) / 2.0;
    return out;
}

double conic_distance(const ComplexConic& p, const Conic& q)
{
    const double ref = std::max({1e-300, p.scale(), q.scale()});
    const double d = std::max({std::abs(p.a - q.a), std::abs(p.h - q.h), std::abs(p.b - q.b),
                               std::abs(p.f - q.f), std::abs(p.g - q.g), std::abs(p.c - q.c)});
    return d / ref;
}

bool proportional(const Line& l, const Line& m, double tol)
{
    const std::array<cd, 3> u{l.A, l.B, l.C}, v{m.A, m.B, m.C};
    double nu = 0.0, nv = 0.0;
    for (int i = 0; i < 3; ++i) {
        nu = std::max(nu, std::abs(u[i]));
        nv = std::max(nv, std::abs(v[i]));
    }
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            if (std::abs(u[i] * v[j] - u[j] * v[i]) > tol * nu * nv) return false;
    return nu > 0.0 && nv > 0.0;
}

bool same_lines(const LinePair& p, const LinePair& q, double tol)
{
    return (proportional(p.first, q.first, tol) && proportional(p.second, q.second, tol)) ||
           (proportional(p.first, q.second, tol) && proportional(p.second, q.first, tol));
}

std::string format_line(const Line& l)
{
    auto real = [](cd v) { return std::abs(v.imag()) <= 1e-12 * std::max(1.0, std::abs(v)); };
    const bool all_real = real(l.A) && real(l.B) && real(l.C);
    std::string out;
    char buf[96];
    const std::array<std::pair<cd, const char*>, 3> terms{{{l.A, "x"}, {l.B, "y"}, {l.C, ""}}};
    for (const auto& [v, var] : terms) {
        if (std::abs(v) == 0.0) continue;
        if (all_real) {
            const double r = v.real();
            const char* sign = r < 0 ? "-" : "+";
            const double m = std::abs(r);
            if (out.empty()) std::snprintf(buf, sizeof buf, "%s%.6g%s", r < 0 ? "-" : "", m, var);
            else std::snprintf(buf, sizeof buf, " %s %.6g%s", sign, m, var);
        } else {
            std::snprintf(buf, sizeof buf, "%s(%.6g%+.6gi)%s", out.empty() ? "" : " + ", v.real(), v.imag(), var);
        }
        out += buf;
    }
    return out.empty() ? "0" : out;
}

}  // namespace roughcal
