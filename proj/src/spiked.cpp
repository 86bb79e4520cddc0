#include "mixkern/spiked.hpp"

#include "mixkern/rng.hpp"

#include <cmath>

namespace mixkern::spiked {

double double_factorial(int k) {
    double out = 1.0;
    for (int v = k; v >= 2; v -= 2) out *= v;
    return out;
}

ClassStats class_stats(const model::MixtureParams& params, const std::vector<int>& labels) {
    if (static_cast<int>(labels.size()) != params.n)
        throw std::invalid_argument("class_stats: labels size mismatch");
    const int p = params.p;
    ClassStats stats;
    stats.M.resize(p, 2);
    stats.M.col(0) = params.mu1;
    stats.M.col(1) = params.mu2;

    const model::CovPerturbation* es[2] = {&params.e1, &params.e2};
    const double sqrt_p = std::sqrt(static_cast<double>(p));
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            stats.T(a, b) = (es[a]->trace(p) + es[b]->trace(p)) / sqrt_p;

    // tr(E_a E_b) stays O(p) for diagonal-like descriptors
    auto product_trace = [&](const model::CovPerturbation& ea,
                             const model::CovPerturbation& eb) -> double {
        using Kind = model::CovPerturbation::Kind;
        if (ea.kind == Kind::Zero || eb.kind == Kind::Zero) return 0.0;
        if (ea.is_diagonal_like() && eb.is_diagonal_like()) {
            const Vec da = ea.identity_plus_diagonal(p).array() - 1.0;
            const Vec db = eb.identity_plus_diagonal(p).array() - 1.0;
            return da.dot(db);
        }
        const Mat ma = ea.identity_plus_dense(p) - Mat::Identity(p, p);
        const Mat mb = eb.identity_plus_dense(p) - Mat::Identity(p, p);
        return (ma.transpose().cwiseProduct(mb)).sum();
    };
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) stats.S(a, b) = product_trace(*es[a], *es[b]) / sqrt_p;

    stats.J = Mat::Zero(params.n, 2);
    for (int i = 0; i < params.n; ++i) {
        const int cls = labels[i];
        if (cls != 1 && cls != 2) throw std::invalid_argument("class_stats: labels must be 1 or 2");
        stats.J(i, cls - 1) = 1.0;
    }
    return stats;
}

void SpikeModel::apply(const double* x, double* y) const {
    Eigen::Map<const Vec> xin(x, n);
    Eigen::Map<Vec> yout(y, n);
    const Eigen::Vector4d inner = C * (U.transpose() * xin);
    yout.noalias() = U * inner;
}

eigs::LinOp SpikeModel::op() const {
    const SpikeModel* self = this;
    return {n, [self](const double* x, double* y) { self->apply(x, y); }};
}

Mat SpikeModel::dense() const { return U * C * U.transpose(); }

Vec SpikeModel::eigenvalues() const {
    // K~_I = U C U^T shares nonzero eigenvalues with R C R^T for U = Q R
    const Eigen::HouseholderQR<Mat> qr(U);
    const Mat R = qr.matrixQR().topRows(4).triangularView<Eigen::Upper>();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(R * C * R.transpose());
    return es.eigenvalues();
}

Vec SpikeModel::top_eigenvector() const {
    const Eigen::HouseholderQR<Mat> qr(U);
    const Mat R = qr.matrixQR().topRows(4).triangularView<Eigen::Upper>();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(R * C * R.transpose());
    Eigen::Index idx = 0;
    es.eigenvalues().cwiseAbs().maxCoeff(&idx);  // leading = largest magnitude
    const Eigen::Vector4d coeffs = es.eigenvectors().col(idx);
    const Mat Q = qr.householderQ() * Mat::Identity(n, 4);
    Vec v = Q * coeffs;
    v.normalize();
    return v;
}

SpikeModel build_spike(const Mat& Z, const hermite::HermiteCoeffs& coeffs,
                       const ClassStats& stats) {
    SpikeModel spike;
    spike.n = static_cast<int>(stats.J.rows());
    spike.p = static_cast<int>(Z.rows());
    if (Z.cols() != spike.n) throw std::invalid_argument("build_spike: Z and J disagree on n");
    spike.a1 = coeffs.a1;
    spike.a2 = coeffs.a2;

    const double inv_p = 1.0 / static_cast<double>(spike.p);
    spike.U.resize(spike.n, 4);
    spike.U.leftCols(2) = stats.J;
    spike.U.rightCols(2).noalias() = Z.transpose() * stats.M;  // W = Z^T M

    const Eigen::Matrix2d mtm = stats.M.transpose() * stats.M;
    spike.C.setZero();
    spike.C.topLeftCorner(2, 2) =
        coeffs.a1 * inv_p * mtm + coeffs.a2 * inv_p * (stats.T + stats.S);
    spike.C.topRightCorner(2, 2) = coeffs.a1 * inv_p * Eigen::Matrix2d::Identity();
    spike.C.bottomLeftCorner(2, 2) = coeffs.a1 * inv_p * Eigen::Matrix2d::Identity();
    return spike;
}

Mat build_monomial_KI(const Mat& Z, const model::MixtureParams& params,
                      const std::vector<int>& labels, int k) {
    if (k < 2 || k > 6) throw std::invalid_argument("build_monomial_KI: k must be in [2, 6]");
    const int n = static_cast<int>(Z.cols());
    const int p = static_cast<int>(Z.rows());
    if (static_cast<int>(labels.size()) != n)
        throw std::invalid_argument("build_monomial_KI: labels size mismatch");
    const double sqrt_p = std::sqrt(static_cast<double>(p));

    // G = Z^T Z / sqrt p
    const Mat G = (Z.transpose() * Z) / sqrt_p;

    // per-class transformed noise for the quadratic forms in A and B
    const model::CovPerturbation* es[2] = {&params.e1, &params.e2};
    const Vec* mus[2] = {&params.mu1, &params.mu2};
    Mat EZ[2];  // E_a Z
    for (int a = 0; a < 2; ++a) {
        const Mat Ea = es[a]->identity_plus_dense(p) - Mat::Identity(p, p);
        EZ[a] = Ea * Z;
    }
    const Mat Ediff = (es[0]->identity_plus_dense(p) - es[1]->identity_plus_dense(p));
    const Mat Ediff2Z = Ediff * (Ediff * Z);

    Mat muZ(2, n);  // mu_a^T z_j
    for (int a = 0; a < 2; ++a) muZ.row(a) = mus[a]->transpose() * Z;

    Mat A = Mat::Zero(n, n);
    Mat B = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        const int a = labels[i] - 1;
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const int b = labels[j] - 1;
            const double zEz = Z.col(i).dot(EZ[a].col(j)) + Z.col(i).dot(EZ[b].col(j));
            A(i, j) = zEz / (2.0 * sqrt_p);
            const double mu_terms = mus[a]->dot(*mus[b]) + muZ(a, j) + muZ(b, i);
            // (E_a - E_b)^2 vanishes for same-class pairs
            const double cross = a != b ? Z.col(i).dot(Ediff2Z.col(j)) : 0.0;
            B(i, j) = mu_terms / sqrt_p - cross / (8.0 * sqrt_p);
        }
    }

    Mat KI(n, n);
    const double c1 = static_cast<double>(k) / sqrt_p;
    const double c2 = static_cast<double>(k) * (k - 1) / (2.0 * sqrt_p);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) {
                KI(i, j) = 0.0;
                continue;
            }
            const double g = G(i, j);
            KI(i, j) = c1 * std::pow(g, k - 1) * (A(i, j) + B(i, j)) +
                       c2 * std::pow(g, k - 2) * A(i, j) * A(i, j);
        }
    }
    return KI;
}

double opnorm_diff(const kernel::KernelMatrix& K, const kernel::KernelMatrix& K_N,
                   const SpikeModel& spike, uint64_t seed) {
    if (K.n != K_N.n || K.n != spike.n) throw std::invalid_argument("opnorm_diff: size mismatch");
    const Mat* k_ptr = &K.data;
    const Mat* kn_ptr = &K_N.data;
    const SpikeModel* s_ptr = &spike;
    eigs::LinOp diff{K.n, [k_ptr, kn_ptr, s_ptr](const double* x, double* y) {
                         const int n = static_cast<int>(k_ptr->rows());
                         Eigen::Map<const Vec> xin(x, n);
                         Eigen::Map<Vec> yout(y, n);
                         yout.noalias() = (*k_ptr) * xin;
                         yout.noalias() -= (*kn_ptr) * xin;
                         Vec tmp(n);
                         s_ptr->apply(x, tmp.data());
                         yout -= tmp;
                     }};
    return eigs::op_norm(diff, seed);
}

double opnorm_diff(const Mat& A, const Mat& B, uint64_t seed) {
    if (A.rows() != B.rows() || A.cols() != B.cols())
        throw std::invalid_argument("opnorm_diff: size mismatch");
    const Mat D = A - B;
    return eigs::op_norm(eigs::dense_op(D), seed);
}

std::pair<double, double> hadamard_bound_check(const Mat& A, const Mat& B) {
    if (A.rows() != A.cols() || B.rows() != B.cols() || A.rows() != B.rows())
        throw std::invalid_argument("hadamard_bound_check: need equal square matrices");
    const Mat H = A.cwiseProduct(B);
    const double lhs = H.jacobiSvd().singularValues()(0);
    const double b_norm = B.jacobiSvd().singularValues()(0);
    const double a_inf = A.cwiseAbs().maxCoeff();
    const double rhs = std::sqrt(static_cast<double>(A.rows())) * a_inf * b_norm;
    return {lhs, rhs};
}

MomentReport gaussian_moment_oracle(int k, int64_t trials, int p, uint64_t seed) {
    if (k < 2 || k > 8 || k % 2 != 0)
        throw std::invalid_argument("gaussian_moment_oracle: k must be even in [2, 8]");
    if (trials < 100) throw std::invalid_argument("gaussian_moment_oracle: too few trials");

    // fixed reference vector w (plays z_j) and direction b, from the seed;
    // w is scaled to norm sqrt(p) so xi = z^T w/sqrt p is exactly N(0,1) and
    // the unconditional display E[xi^k] = (k-1)!! holds at finite p
    auto ref_stream = rng::Xoshiro256pp::for_stream(seed, 0xfeedULL);
    Vec w(p), b(p);
    for (int i = 0; i < p; ++i) w(i) = ref_stream.normal();
    for (int i = 0; i < p; ++i) b(i) = ref_stream.normal();
    w *= std::sqrt(static_cast<double>(p)) / w.norm();
    b /= b.norm();

    const double sqrt_p = std::sqrt(static_cast<double>(p));
    const double w_scaled = w.norm() / sqrt_p;
    const double wb = w.dot(b);

    // statistics: 0: xi^k, 1: xi^k eta, 2: xi^{k-1} eta^2, 3: xi^{k-1} eta, 4: xi^k eta^2
    constexpr int kStats = 5;
    const int64_t block_size = 8192;
    const int64_t blocks = (trials + block_size - 1) / block_size;
    std::vector<std::array<double, 2 * kStats>> block_acc(blocks);  // sum, sumsq pairs

#pragma omp parallel for schedule(dynamic)
    for (int64_t blk = 0; blk < blocks; ++blk) {
        std::array<double, 2 * kStats> acc{};
        const int64_t lo = blk * block_size;
        const int64_t hi = std::min(trials, lo + block_size);
        for (int64_t trial = lo; trial < hi; ++trial) {
            auto stream = rng::Xoshiro256pp::for_stream(seed, 0x1000000ULL + trial);
            double xi = 0.0, eta = 0.0;
            for (int i = 0; i < p; ++i) {
                const double g = stream.normal();
                xi += g * w(i);
                eta += g * b(i);
            }
            xi /= sqrt_p;
            double xi_km1 = 1.0;
            for (int v = 0; v < k - 1; ++v) xi_km1 *= xi;
            const double xi_k = xi_km1 * xi;
            const double stats[kStats] = {xi_k, xi_k * eta, xi_km1 * eta * eta, xi_km1 * eta,
                                          xi_k * eta * eta};
            for (int s = 0; s < kStats; ++s) {
                acc[2 * s] += stats[s];
                acc[2 * s + 1] += stats[s] * stats[s];
            }
        }
        block_acc[blk] = acc;
    }

    std::array<double, 2 * kStats> total{};
    for (const auto& acc : block_acc)
        for (int i = 0; i < 2 * kStats; ++i) total[i] += acc[i];

    const double dfact = double_factorial(k - 1);
    const double exact[kStats] = {
        dfact,
        0.0,
        0.0,
        dfact * std::pow(w_scaled, k - 2) * wb / sqrt_p,
        dfact * (k * std::pow(w_scaled, k - 2) * (wb / sqrt_p) * (wb / sqrt_p) +
                 std::pow(w_scaled, k)),
    };
    const char* names[kStats] = {"E[xi^k]", "E[xi^k (z'b)]", "E[xi^(k-1) (z'b)^2]",
                                 "E[xi^(k-1) (z'b)]", "E[xi^k (z'b)^2]"};

    MomentReport report;
    const double nt = static_cast<double>(trials);
    for (int s = 0; s < kStats; ++s) {
        const double mean = total[2 * s] / nt;
        const double var = std::max(0.0, total[2 * s + 1] / nt - mean * mean);
        const double se = std::sqrt(var / nt);
        const double dev = se > 0.0 ? std::abs(mean - exact[s]) / se : 0.0;
        report.rows.push_back({names[s], mean, exact[s], se, dev});
        report.max_deviation_se = std::max(report.max_deviation_se, dev);
    }
    return report;
}

}  // namespace mixkern::spiked
