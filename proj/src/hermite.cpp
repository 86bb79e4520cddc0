#include "mixkern/hermite.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mixkern::hermite {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;  // 1/sqrt(2*pi)

// Gaussian tail mass beyond |x| = 12 is < 1e-31; composite rules stop there.
constexpr double kCutoff = 12.0;

// Golub-Welsch on a symmetric tridiagonal Jacobi matrix: eigenvalues are the
// nodes, squared first eigenvector components are the weights (times mu_0).
Quadrature golub_welsch(const Vec& off_diag, double total_mass) {
    const int m = static_cast<int>(off_diag.size()) + 1;
    Mat jacobi = Mat::Zero(m, m);
    for (int k = 0; k + 1 < m; ++k) {
        jacobi(k, k + 1) = off_diag(k);
        jacobi(k + 1, k) = off_diag(k);
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(jacobi);
    Quadrature q;
    q.nodes.resize(m);
    q.weights.resize(m);
    for (int k = 0; k < m; ++k) {
        q.nodes[k] = es.eigenvalues()(k);
        const double v0 = es.eigenvectors()(0, k);
        q.weights[k] = total_mass * v0 * v0;
    }
    return q;
}

Quadrature gauss_legendre(int order) {
    Vec off(order - 1);
    for (int k = 1; k < order; ++k) {
        const double kk = static_cast<double>(k);
        off(k - 1) = kk / std::sqrt(4.0 * kk * kk - 1.0);
    }
    return golub_welsch(off, 2.0);  // weight 1 on [-1, 1]
}

}  // namespace

double orthonormal_eval(int l, double x) {
    if (l < 0) throw std::invalid_argument("hermite: degree must be nonnegative");
    if (l > 64) throw std::invalid_argument("hermite: degree > 64 overflows the normalization");
    // He recurrence, normalized on the fly: P_{k+1} = (x P_k - sqrt(k) P_{k-1})/sqrt(k+1)
    double prev = 0.0;
    double cur = 1.0;
    for (int k = 0; k < l; ++k) {
        const double next = (x * cur - std::sqrt(static_cast<double>(k)) * prev) /
                            std::sqrt(static_cast<double>(k + 1));
        prev = cur;
        cur = next;
    }
    return cur;
}

std::vector<int64_t> monomial_coeffs(int kappa) {
    if (kappa < 0 || kappa > 30) throw std::invalid_argument("hermite: kappa out of [0, 30]");
    std::vector<__int128> prev{1};      // He_0
    std::vector<__int128> cur{0, 1};    // He_1
    if (kappa == 0) cur = prev;
    for (int k = 1; k < kappa; ++k) {
        std::vector<__int128> next(k + 2, 0);
        next[0] = -static_cast<__int128>(k) * prev[0];
        for (int l = 1; l <= k + 1; ++l) {
            __int128 value = cur[l - 1];
            if (l < static_cast<int>(prev.size())) value -= static_cast<__int128>(k) * prev[l];
            next[l] = value;
        }
        prev = std::move(cur);
        cur = std::move(next);
    }
    std::vector<int64_t> out(cur.size());
    for (size_t i = 0; i < cur.size(); ++i) {
        if (cur[i] > std::numeric_limits<int64_t>::max() ||
            cur[i] < std::numeric_limits<int64_t>::min())
            throw std::overflow_error("hermite: coefficient exceeds int64");
        out[i] = static_cast<int64_t>(cur[i]);
    }
    return out;
}

Quadrature gauss_hermite_normal(int order) {
    if (order < 1) throw std::invalid_argument("quadrature order must be positive");
    Vec off(order - 1);
    for (int k = 1; k < order; ++k) off(k - 1) = std::sqrt(static_cast<double>(k));
    return golub_welsch(off, 1.0);
}

double integrate_normal(const KernelFunc& shape, const std::function<double(double)>& g,
                        int order) {
    if (shape.tag == KernelFunc::Tag::Piecewise && !shape.breakpoints.empty()) {
        // segment [-12,12] at the breakpoints, then panels of width <= 24/order
        std::vector<double> cuts{-kCutoff};
        for (double b : shape.breakpoints)
            if (b > -kCutoff && b < kCutoff) cuts.push_back(b);
        cuts.push_back(kCutoff);
        std::sort(cuts.begin(), cuts.end());

        static thread_local Quadrature panel_rule = gauss_legendre(16);
        const double max_width = 2.0 * kCutoff / static_cast<double>(order);
        double total = 0.0;
        for (size_t s = 0; s + 1 < cuts.size(); ++s) {
            const double lo = cuts[s];
            const double hi = cuts[s + 1];
            if (hi - lo < 1e-300) continue;
            const int panels = std::max(1, static_cast<int>(std::ceil((hi - lo) / max_width)));
            const double width = (hi - lo) / panels;
            for (int q = 0; q < panels; ++q) {
                const double a = lo + q * width;
                const double half = 0.5 * width;
                const double mid = a + half;
                double acc = 0.0;
                for (size_t k = 0; k < panel_rule.nodes.size(); ++k) {
                    const double x = mid + half * panel_rule.nodes[k];
                    acc += panel_rule.weights[k] * g(x) * kInvSqrt2Pi * std::exp(-0.5 * x * x);
                }
                total += half * acc;
            }
        }
        return total;
    }
    const Quadrature rule = gauss_hermite_normal(order);
    double total = 0.0;
    for (size_t k = 0; k < rule.nodes.size(); ++k) total += rule.weights[k] * g(rule.nodes[k]);
    return total;
}

namespace {

HermiteCoeffs coeffs_at_order(const KernelFunc& f, int order) {
    HermiteCoeffs c;
    c.a0 = integrate_normal(f, [&](double x) { return f(x); }, order);
    c.a1 = integrate_normal(f, [&](double x) { return f(x) * x; }, order);
    c.a2 = integrate_normal(f, [&](double x) { return f(x) * (x * x - 1.0) / kSqrt2; }, order);
    const double second = integrate_normal(f, [&](double x) { double v = f(x); return v * v; }, order);
    c.nu = second - c.a0 * c.a0;
    return c;
}

}  // namespace

HermiteCoeffs compute_coeffs(const KernelFunc& f, int order) {
    if (order < 16) throw std::invalid_argument("compute_coeffs: order must be >= 16");
    const HermiteCoeffs coarse = coeffs_at_order(f, order);
    const HermiteCoeffs fine = coeffs_at_order(f, 2 * order);
    const double drift = std::max({std::abs(fine.a0 - coarse.a0), std::abs(fine.a1 - coarse.a1),
                                   std::abs(fine.a2 - coarse.a2), std::abs(fine.nu - coarse.nu)});
    if (!std::isfinite(drift) || drift > 1e-6)
        throw SolverError("compute_coeffs: quadrature did not settle (f not integrable?)", drift);
    return fine;
}

CubicFunc cubic_equivalent(const HermiteCoeffs& coeffs) {
    const double excess = coeffs.nu - coeffs.a1 * coeffs.a1 - coeffs.a2 * coeffs.a2;
    if (excess < -1e-12)
        throw InfeasibleError("cubic_equivalent: nu < a1^2 + a2^2", -excess);
    CubicFunc cubic;
    cubic.c2 = coeffs.a2 / kSqrt2;
    cubic.c3 = std::sqrt(std::max(0.0, excess) / 6.0);
    cubic.c1 = coeffs.a1 - 3.0 * cubic.c3;
    return cubic;
}

KernelFunc center(const KernelFunc& f, int order) {
    const double a0 = compute_coeffs(f, order).a0;
    KernelFunc centered = f;
    auto inner = f.f;
    centered.f = [inner, a0](double x) { return inner(x) - a0; };
    return centered;
}

KernelFunc CubicFunc::to_kernel_func() const {
    CubicFunc self = *this;
    KernelFunc kf;
    kf.tag = KernelFunc::Tag::Polynomial;
    kf.f = [self](double x) { return self(x); };
    return kf;
}

KernelFunc sign_func() {
    KernelFunc kf;
    kf.tag = KernelFunc::Tag::Piecewise;
    kf.breakpoints = {0.0};
    kf.f = [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); };
    return kf;
}

KernelFunc relu_centered() {
    KernelFunc kf;
    kf.tag = KernelFunc::Tag::Piecewise;
    kf.breakpoints = {0.0};
    kf.f = [](double x) { return std::max(0.0, x) - kInvSqrt2Pi; };
    return kf;
}

KernelFunc identity_func() {
    KernelFunc kf;
    kf.tag = KernelFunc::Tag::Polynomial;
    kf.f = [](double x) { return x; };
    return kf;
}

KernelFunc hermite_func(int l) {
    KernelFunc kf;
    kf.tag = KernelFunc::Tag::Polynomial;
    kf.f = [l](double x) { return orthonormal_eval(l, x); };
    return kf;
}

KernelFunc parse_builtin(const std::string& spec) {
    const auto colon = spec.find(':');
    const std::string head = spec.substr(0, colon);
    const std::string args = colon == std::string::npos ? "" : spec.substr(colon + 1);
    auto split_args = [&args]() {
        std::vector<double> vals;
        std::stringstream ss(args);
        std::string tok;
        while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
        return vals;
    };
    if (head == "sign") return sign_func();
    if (head == "relu") return relu_centered();
    if (head == "identity") return identity_func();
    if (head == "hermite") return hermite_func(std::stoi(args));
    if (head == "cubic") {
        const auto v = split_args();
        if (v.size() != 3) throw std::invalid_argument("cubic:c1,c2,c3 expects three values");
        return CubicFunc{v[0], v[1], v[2]}.to_kernel_func();
    }
    if (head == "piecewise") {
        const auto v = split_args();
        if (v.size() != 3) throw std::invalid_argument("piecewise:t,s-,s+ expects three values");
        const double t = v[0], sm = v[1], sp = v[2];
        if (sm > sp) throw std::invalid_argument("piecewise: s- must be <= s+");
        const double r = (1.0 - std::erf(sp)) / (1.0 + std::erf(sm));
        KernelFunc kf;
        kf.tag = KernelFunc::Tag::Piecewise;
        kf.breakpoints = {kSqrt2 * sm, kSqrt2 * sp};
        kf.f = [t, sm, sp, r](double x) {
            if (x <= kSqrt2 * sm) return -(r * t);
            if (x <= kSqrt2 * sp) return 0.0;
            return t;
        };
        return kf;
    }
    throw std::invalid_argument("unknown function spec: " + spec);
}

}  // namespace mixkern::hermite
