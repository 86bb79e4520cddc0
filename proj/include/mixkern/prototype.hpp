#pragma once

#include "mixkern/hermite.hpp"

#include <cmath>
#include <limits>

namespace mixkern::proto {

// Three-level prototype: -r*t on (-inf, sqrt2*s_minus], 0 on the middle band,
// t on (sqrt2*s_plus, inf), with r = (1-erf(s_plus))/(1+erf(s_minus)) chosen
// so the function has zero Gaussian mean. sign_flip negates the whole
// function, which is how targets with a1 < 0 are reached.
struct PiecewiseProto {
    double t = 1.0;
    double s_minus = 0.0;
    double s_plus = 0.0;
    bool sign_flip = false;

    double r() const { return (1.0 - std::erf(s_plus)) / (1.0 + std::erf(s_minus)); }
    void validate() const;
};

double eval_piecewise(const PiecewiseProto& proto, double x);

// Closed forms:
//   a1 = t/sqrt(2 pi) (e^{-s+^2} + r e^{-s-^2})
//   a2 = t/sqrt(2 pi) (s+ e^{-s+^2} + r s- e^{-s-^2})
//   nu = t^2/2 (1 - erf(s+)) (1 + r),   a0 = 0
hermite::HermiteCoeffs coeffs_of_piecewise(const PiecewiseProto& proto);

hermite::KernelFunc to_kernel_func(const PiecewiseProto& proto);

struct DesignResult {
    PiecewiseProto proto;
    double residual = std::numeric_limits<double>::infinity();
    bool converged = false;
};

// Invert the closed forms for a target (a1, a2, nu): t is eliminated through
// the nu equation, then damped Newton on (s-, s+) over a 13x13 multistart
// grid in [-3,3]^2. Accepts at componentwise residual < 1e-10 and throws
// InfeasibleError (best residual attached) when every start fails.
DesignResult design_piecewise(const hermite::HermiteCoeffs& target);

struct FeasibilityReport {
    bool feasible = false;
    bool necessary_condition = false;  // nu >= a1^2 + a2^2
    double best_residual = std::numeric_limits<double>::infinity();
    PiecewiseProto best_probe;
};

// Necessary moment condition plus a multistart probe at the looser 1e-6 gate.
FeasibilityReport feasibility(const hermite::HermiteCoeffs& target);

}  // namespace mixkern::proto
