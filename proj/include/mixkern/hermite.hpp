#pragma once

#include "mixkern/common.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace mixkern::hermite {

// Generalized Gaussian moments of a nonlinearity f:
//   a0 = E[f(xi)], a1 = E[xi f(xi)], a2 = E[(xi^2-1) f(xi)]/sqrt(2), nu = Var[f(xi)]
// for xi ~ N(0,1). These four numbers determine the kernel spectrum.
struct HermiteCoeffs {
    double a0 = 0.0;
    double a1 = 0.0;
    double a2 = 0.0;
    double nu = 0.0;
};

// A scalar nonlinearity together with the structure the quadrature needs.
struct KernelFunc {
    enum class Tag { Smooth, Piecewise, Polynomial };

    Tag tag = Tag::Smooth;
    std::function<double(double)> f;
    std::vector<double> breakpoints;  // sorted kink/jump locations (Piecewise only)

    double operator()(double x) const { return f(x); }
};

// f~(x) = c3 x^3 + c2 x^2 + c1 x - c2; the constant kills a0 by construction.
struct CubicFunc {
    double c1 = 0.0;
    double c2 = 0.0;
    double c3 = 0.0;

    double operator()(double x) const { return ((c3 * x + c2) * x + c1) * x - c2; }
    KernelFunc to_kernel_func() const;
};

// Orthonormal Hermite polynomial P_l(x) = He_l(x)/sqrt(l!) under N(0,1). l <= 64.
double orthonormal_eval(int l, double x);

// Exact integer coefficients of the monic (probabilists') Hermite polynomial
// He_kappa(x) = sum_l c[l] x^l, via the c_{kappa+1,l} = c_{kappa,l-1} - kappa c_{kappa-1,l}
// recurrence. kappa <= 30; values stay within int64 (checked in 128-bit).
std::vector<int64_t> monomial_coeffs(int kappa);

// Quadrature rule with nodes/weights against the standard normal weight.
struct Quadrature {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Gauss-Hermite rule mapped to the N(0,1) weight (Golub-Welsch).
Quadrature gauss_hermite_normal(int order);

// integral of g against N(0,1) using the rule implied by f's structure:
// plain Gauss-Hermite for smooth f, composite Gauss-Legendre on [-12,12]
// split at the declared breakpoints otherwise.
double integrate_normal(const KernelFunc& shape, const std::function<double(double)>& g, int order);

// (a0, a1, a2, nu) by quadrature; order >= 16. Runs the rule at `order` and
// 2*order and errors out if they disagree by more than 1e-6.
HermiteCoeffs compute_coeffs(const KernelFunc& f, int order = 128);

// Cubic with the same (a1, a2, nu) fingerprint:
//   c2 = a2/sqrt(2), c3 = sqrt((nu - a1^2 - a2^2)/6), c1 = a1 - 3 c3.
CubicFunc cubic_equivalent(const HermiteCoeffs& coeffs);

// x -> f(x) - a0(f)
KernelFunc center(const KernelFunc& f, int order = 128);

// Builtins and the CLI-facing parser: "sign", "relu", "identity",
// "hermite:L", "cubic:c1,c2,c3", "piecewise:t,s-,s+".
KernelFunc sign_func();
KernelFunc relu_centered();
KernelFunc identity_func();
KernelFunc hermite_func(int l);
KernelFunc parse_builtin(const std::string& spec);

}  // namespace mixkern::hermite
