#pragma once

#define EIGEN_DONT_PARALLELIZE
#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace mixkern {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Cplx = std::complex<double>;

// Iterative solver failed to meet its tolerance; carries the last residual.
struct SolverError : std::runtime_error {
    double residual;
    SolverError(const std::string& msg, double res)
        : std::runtime_error(msg + " (residual " + std::to_string(res) + ")"), residual(res) {}
};

// A requested target lies outside the reachable parameter set.
struct InfeasibleError : std::runtime_error {
    double best_residual;
    InfeasibleError(const std::string& msg, double res)
        : std::runtime_error(msg), best_residual(res) {}
};

inline double stdnormal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace mixkern
