#pragma once

#include "mixkern/eigs.hpp"
#include "mixkern/hermite.hpp"
#include "mixkern/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mixkern::spiked {

// Mixture statistics entering the spike:
//   M = [mu1, mu2],  T_ab = tr(E_a + E_b)/sqrt p,  S_ab = tr(E_a E_b)/sqrt p,
//   J the n x 2 class indicator.
struct ClassStats {
    Mat M;                // p x 2
    Eigen::Matrix2d T;
    Eigen::Matrix2d S;
    Mat J;                // n x 2
};

ClassStats class_stats(const model::MixtureParams& params, const std::vector<int>& labels);

// Rank <= 4 informative part
//   K~_I = (a1/p)(J M^T M J^T + J M^T Z + Z^T M J^T) + (a2/p) J (T+S) J^T
// kept in factored form U C U^T with U = [J, Z^T M] (n x 4).
struct SpikeModel {
    int n = 0;
    int p = 0;
    double a1 = 0.0;
    double a2 = 0.0;
    Mat U;                 // n x 4
    Eigen::Matrix4d C;

    void apply(const double* x, double* y) const;
    eigs::LinOp op() const;
    Mat dense() const;
    // eigenvalues of the rank-4 factorization (ascending, size 4)
    Vec eigenvalues() const;
    Vec top_eigenvector() const;
};

SpikeModel build_spike(const Mat& Z, const hermite::HermiteCoeffs& coeffs,
                       const ClassStats& stats);

// Monomial information matrix for f(x) = x^k, k in [2,6]:
//   K_I = (k/sqrt p) (Z^T Z/sqrt p)^{o(k-1)} o (A+B)
//       + (k(k-1)/(2 sqrt p)) (Z^T Z/sqrt p)^{o(k-2)} o A^{o2}
// with A, B the expansion matrices (zero diagonals). Dense; test-oracle scale.
Mat build_monomial_KI(const Mat& Z, const model::MixtureParams& params,
                      const std::vector<int>& labels, int k);

// || K - (K_N + K~_I) || via the iterative extremal eigensolver.
double opnorm_diff(const kernel::KernelMatrix& K, const kernel::KernelMatrix& K_N,
                   const SpikeModel& spike, uint64_t seed);
double opnorm_diff(const Mat& A, const Mat& B, uint64_t seed);

// (||A o B||, sqrt(n) ||A||_inf ||B||): the Hadamard bound pair.
std::pair<double, double> hadamard_bound_check(const Mat& A, const Mat& B);

// Monte-Carlo check of the Gaussian moment identities, for even k:
//   E[xi^k] = (k-1)!!
//   E[xi^k (z^T b)] = 0 and E[xi^{k-1} (z^T b)^2] = 0
//   E[xi^{k-1} (z^T b)] = (k-1)!! (||w||/sqrt p)^{k-2} (w^T b)/sqrt p
//   E[xi^k (z^T b)^2]  = (k-1)!! (k (||w||/sqrt p)^{k-2} (w^T b/sqrt p)^2
//                                 + (||w||/sqrt p)^k ||b||^2)
// with xi = z^T w/sqrt p for a fixed unit-scale w and direction b.
struct MomentReport {
    struct Row {
        std::string name;
        double estimate;
        double exact;
        double std_error;
        double deviation_se;  // |estimate - exact| in standard-error units
    };
    std::vector<Row> rows;
    double max_deviation_se = 0.0;
};

MomentReport gaussian_moment_oracle(int k, int64_t trials, int p, uint64_t seed);

double double_factorial(int k);

}  // namespace mixkern::spiked
