#pragma once

#include "mixkern/common.hpp"
#include "mixkern/kernel.hpp"

#include <utility>
#include <vector>

namespace mixkern::spectrum {

// Parameters of the limiting spectral law: only (a1, nu) of f and the
// ratio c = p/n enter.
struct LimitParams {
    double a1 = 0.0;
    double nu = 1.0;
    double c = 1.0;
};

// m(z) solving  -1/m = z + a1^2 m / (c + a1 m) + (nu - a1^2) m / c  in C+.
// Cleared of denominators this is the cubic
//   (a1 (nu - a1^2)/c) m^3 + (a1 z + nu) m^2 + (c z + a1) m + c = 0,
// solved by companion-matrix eigenvalues, Newton-polished, the C+ root
// selected (minimal residual of the original equation on ties).
Cplx stieltjes_solve(Cplx z, const LimitParams& lp);

// residual of the self-consistent equation at m
double stieltjes_residual(Cplx z, Cplx m, const LimitParams& lp);

using Support = std::vector<std::pair<double, double>>;

struct DensityCurve {
    std::vector<double> grid;
    std::vector<double> density;
    Support support;
    std::vector<int> failed_points;  // grid indices where the solver failed
};

// density(x) = Im m(x + i eps)/pi on the given grid. The support field is
// edge-located separately (see find_support); the eps used for the curve is
// too coarse to threshold at 1e-8.
DensityCurve limiting_density(const LimitParams& lp, std::vector<double> grid,
                              double epsilon = 1e-6);

// Maximal intervals where the density exceeds 1e-8, scanned on a coarse grid
// and bisection-refined at the edges. Density is probed at eps = 1e-10 so the
// off-support background sits well below the threshold.
Support find_support(const LimitParams& lp, double lo, double hi, int coarse_points = 4000);
// scan window that certainly contains the support
std::pair<double, double> support_bounds(const LimitParams& lp);

// all eigenvalues, ascending (LAPACK dsyevd)
std::vector<double> empirical_esd(const Mat& symmetric);
std::vector<double> empirical_esd(const kernel::KernelMatrix& k);

// Isolated eigenvalues: outside every support interval inflated by
// delta = 0.05 * total support width, and not chained to the bulk by
// eigenvalue gaps <= delta (edge smearing is not a spike).
std::vector<double> detect_spikes(const std::vector<double>& eigs, const Support& support);

// L1 distance between the bulk histogram (spikes excluded, bins over the
// inflated support hull) and the curve mass per bin, both normalized.
double esd_distance(const std::vector<double>& eigs, const DensityCurve& curve, int bins);

// L1 distance between two eigenvalue histograms on shared bins over [lo, hi].
double hist_distance(const std::vector<double>& a, const std::vector<double>& b, int bins,
                     double lo, double hi);

}  // namespace mixkern::spectrum
