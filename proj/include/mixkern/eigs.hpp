#pragma once

#include "mixkern/common.hpp"
#include "mixkern/kernel.hpp"

#include <cstdint>
#include <functional>

namespace mixkern::eigs {

// Symmetric operator given by its matvec.
struct LinOp {
    int n = 0;
    std::function<void(const double*, double*)> apply;
};

LinOp dense_op(const Mat& m);
LinOp ternary_op(const kernel::TernaryKernel& tk);
// a - b - c (c optional), all symmetric of the same size
LinOp difference_op(const LinOp& a, const LinOp& b);

struct ExtremalEigs {
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    Vec vector_min;
    Vec vector_max;
    int matvecs = 0;
    double residual = 0.0;
    bool converged = false;
};

// Lanczos with full reorthogonalization from a seeded random start; stops
// when both extremal Ritz residuals fall below rel_tol * spectral scale.
// Throws SolverError on non-convergence (the caller can catch and inspect).
ExtremalEigs extremal_eigs(const LinOp& op, uint64_t seed, double rel_tol = 1e-6,
                           int max_matvecs = 2000);

// max(|lambda_min|, |lambda_max|)
double op_norm(const LinOp& op, uint64_t seed, double rel_tol = 1e-6, int max_matvecs = 2000);

struct TopEig {
    double value = 0.0;
    Vec vector;
};

// algebraically largest eigenpair
TopEig top_eig(const LinOp& op, uint64_t seed, double rel_tol = 1e-8, int max_matvecs = 2000);

}  // namespace mixkern::eigs
