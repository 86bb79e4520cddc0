#include "mixkern/eigs.hpp"

#include "mixkern/rng.hpp"

#include <algorithm>
#include <cmath>

namespace mixkern::eigs {

LinOp dense_op(const Mat& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("dense_op: matrix not square");
    const Mat* ptr = &m;
    return {static_cast<int>(m.rows()), [ptr](const double* x, double* y) {
                Eigen::Map<const Vec> xin(x, ptr->rows());
                Eigen::Map<Vec> yout(y, ptr->rows());
                yout.noalias() = (*ptr) * xin;
            }};
}

LinOp ternary_op(const kernel::TernaryKernel& tk) {
    const kernel::TernaryKernel* ptr = &tk;
    return {tk.n, [ptr](const double* x, double* y) { kernel::ternary_matvec(*ptr, x, y); }};
}

LinOp difference_op(const LinOp& a, const LinOp& b) {
    if (a.n != b.n) throw std::invalid_argument("difference_op: size mismatch");
    auto fa = a.apply;
    auto fb = b.apply;
    const int n = a.n;
    return {n, [fa, fb, n](const double* x, double* y) {
                fa(x, y);
                std::vector<double> tmp(n);
                fb(x, tmp.data());
                for (int i = 0; i < n; ++i) y[i] -= tmp[i];
            }};
}

namespace {

struct LanczosState {
    std::vector<Vec> basis;
    std::vector<double> alpha;
    std::vector<double> beta;  // beta[j] couples basis[j] and basis[j+1]
};

// Ritz data of the current tridiagonal
struct RitzPair {
    double theta_min, theta_max;
    Vec s_min, s_max;
};

RitzPair ritz_extremes(const LanczosState& st) {
    const int m = static_cast<int>(st.alpha.size());
    Mat tri = Mat::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        tri(i, i) = st.alpha[i];
        if (i + 1 < m) {
            tri(i, i + 1) = st.beta[i];
            tri(i + 1, i) = st.beta[i];
        }
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(tri);
    RitzPair rp;
    rp.theta_min = es.eigenvalues()(0);
    rp.theta_max = es.eigenvalues()(m - 1);
    rp.s_min = es.eigenvectors().col(0);
    rp.s_max = es.eigenvectors().col(m - 1);
    return rp;
}

}  // namespace

ExtremalEigs extremal_eigs(const LinOp& op, uint64_t seed, double rel_tol, int max_matvecs) {
    const int n = op.n;
    if (n < 1) throw std::invalid_argument("extremal_eigs: empty operator");
    ExtremalEigs out;
    if (n == 1) {
        double x = 1.0, y = 0.0;
        op.apply(&x, &y);
        out.lambda_min = out.lambda_max = y;
        out.vector_min = out.vector_max = Vec::Ones(1);
        out.converged = true;
        out.matvecs = 1;
        return out;
    }

    auto stream = rng::Xoshiro256pp::for_stream(seed, 0x4c414e43ULL);
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = stream.normal();
    v.normalize();

    LanczosState st;
    st.basis.push_back(v);
    Vec w(n);
    const int max_basis = std::min(n, max_matvecs);
    double scale = 0.0;

    for (int j = 0; j < max_basis; ++j) {
        op.apply(st.basis[j].data(), w.data());
        ++out.matvecs;
        double a = st.basis[j].dot(w);
        st.alpha.push_back(a);
        w -= a * st.basis[j];
        if (j > 0) w -= st.beta[j - 1] * st.basis[j - 1];
        // full reorthogonalization, twice for safety
        for (int pass = 0; pass < 2; ++pass)
            for (const Vec& q : st.basis) w -= q.dot(w) * q;

        const double b = w.norm();
        const int m = static_cast<int>(st.alpha.size());
        const bool invariant = b < 1e-13 * std::max(1.0, scale);
        const bool budget_spent = out.matvecs >= max_matvecs;
        // Ritz solves cost O(m^3); only check at a coarse cadence
        if (!invariant && !budget_spent && m != n && (m < 8 || m % 8 != 0)) {
            st.beta.push_back(b);
            st.basis.push_back(w / b);
            continue;
        }

        const RitzPair rp = ritz_extremes(st);
        scale = std::max(std::abs(rp.theta_min), std::abs(rp.theta_max));
        const double res_min = b * std::abs(rp.s_min(m - 1));
        const double res_max = b * std::abs(rp.s_max(m - 1));
        out.residual = std::max(res_min, res_max);

        if ((m >= 2 && out.residual <= rel_tol * std::max(scale, 1e-300)) || invariant ||
            m == n) {
            out.lambda_min = rp.theta_min;
            out.lambda_max = rp.theta_max;
            out.vector_min = Vec::Zero(n);
            out.vector_max = Vec::Zero(n);
            for (int i = 0; i < m; ++i) {
                out.vector_min += rp.s_min(i) * st.basis[i];
                out.vector_max += rp.s_max(i) * st.basis[i];
            }
            out.vector_min.normalize();
            out.vector_max.normalize();
            out.converged = true;
            return out;
        }
        if (out.matvecs >= max_matvecs) break;
        st.beta.push_back(b);
        st.basis.push_back(w / b);
    }

    // did not converge: report the last iterate through the exception
    const RitzPair rp = ritz_extremes(st);
    out.lambda_min = rp.theta_min;
    out.lambda_max = rp.theta_max;
    throw SolverError("extremal_eigs: no convergence after " + std::to_string(out.matvecs) +
                          " matvecs, last iterate [" + std::to_string(rp.theta_min) + ", " +
                          std::to_string(rp.theta_max) + "]",
                      out.residual / std::max(scale, 1e-300));
}

double op_norm(const LinOp& op, uint64_t seed, double rel_tol, int max_matvecs) {
    const ExtremalEigs ee = extremal_eigs(op, seed, rel_tol, max_matvecs);
    return std::max(std::abs(ee.lambda_min), std::abs(ee.lambda_max));
}

TopEig top_eig(const LinOp& op, uint64_t seed, double rel_tol, int max_matvecs) {
    const ExtremalEigs ee = extremal_eigs(op, seed, rel_tol, max_matvecs);
    return {ee.lambda_max, ee.vector_max};
}

}  // namespace mixkern::eigs
