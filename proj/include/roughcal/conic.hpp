#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace roughcal {

using cd = std::complex<double>;

// a x^2 + 2h xy + b y^2 + 2f x + 2g y + c
template <class T>
struct BasicConic {
    T a{}, h{}, b{}, f{}, g{}, c{};

    T delta() const
    {
        return a * (b * c - g * g) - h * (h * c - g * f) + f * (h * g - b * f);
    }
    T delta_hat() const { return a * b - h * h; }
    double scale() const;
    T operator()(T x, T y) const { return a * x * x + T(2) * h * x * y + b * y * y + T(2) * f * x + T(2) * g * y + c; }
};

using Conic = BasicConic<double>;
using ComplexConic = BasicConic<cd>;

enum class ConicClass { two_intersecting_lines, parallel_lines_or_single, single_point, non_degenerate };

std::string to_string(ConicClass c);

struct SignTriple {
    int s1 = 1, s2 = 1, s3 = 1;
    std::string str() const;
    bool operator==(const SignTriple&) const = default;
};

// A x + B y + C
struct Line {
    cd A, B, C;
};

struct LinePair {
    Line first;
    Line second;
    cd nu{1.0};
    std::optional<SignTriple> signs;  // empty for the fallback constructions
};

// Default tolerance for Delta: 1e-9 max(1, |coefficients|)^3.
double default_delta_tol(const Conic& q);

ConicClass classify(const Conic& q, double tol = -1.0);
bool is_real_factorizable(const Conic& q, double tol = -1.0);

// Feasible sign triples of (h +- r1)(f +- r2)(g +- r3) = abc.
std::vector<SignTriple> feasible_triples(const Conic& q, double rel_tol = 1e-9);

std::vector<LinePair> factor(const Conic& q, double tol = -1.0);
ComplexConic expand(const LinePair& lp);

// Largest coefficient difference relative to the coefficient scale.
double conic_distance(const ComplexConic& p, const Conic& q);

// Lines agree as unordered sets up to scalar multiples.
bool same_lines(const LinePair& p, const LinePair& q, double tol = 1e-9);
bool proportional(const Line& l, const Line& m, double tol = 1e-9);

std::string format_line(const Line& l);

}  // namespace roughcal
