#include "mixkern/spectrum.hpp"

#include <algorithm>
#include <cmath>

#include <lapacke.h>

namespace mixkern::spectrum {

namespace {

constexpr double kSupportThreshold = 1e-8;
constexpr double kEdgeEps = 1e-10;  // probe height for support location
constexpr double kImTol = 1e-14;

Cplx equation_lhs(Cplx z, Cplx m, const LimitParams& lp) {
    const double beta = lp.nu - lp.a1 * lp.a1;
    return 1.0 / m + z + lp.a1 * lp.a1 * m / (lp.c + lp.a1 * m) + beta * m / lp.c;
}

Cplx equation_derivative(Cplx z, Cplx m, const LimitParams& lp) {
    (void)z;
    const double beta = lp.nu - lp.a1 * lp.a1;
    const Cplx denom = lp.c + lp.a1 * m;
    return -1.0 / (m * m) + lp.a1 * lp.a1 * lp.c / (denom * denom) + beta / lp.c;
}

// all roots of c3 m^3 + c2 m^2 + c1 m + c0 = 0 (degree may degenerate)
std::vector<Cplx> polynomial_roots(Cplx c3, Cplx c2, Cplx c1, Cplx c0) {
    std::vector<Cplx> coeffs{c3, c2, c1, c0};
    const double scale = std::max({std::abs(c3), std::abs(c2), std::abs(c1), std::abs(c0)});
    while (coeffs.size() > 1 && std::abs(coeffs.front()) < 1e-14 * scale)
        coeffs.erase(coeffs.begin());
    const int degree = static_cast<int>(coeffs.size()) - 1;
    std::vector<Cplx> roots;
    if (degree <= 0) return roots;
    if (degree == 1) {
        roots.push_back(-coeffs[1] / coeffs[0]);
        return roots;
    }
    Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(degree, degree);
    for (int i = 1; i < degree; ++i) companion(i, i - 1) = 1.0;
    for (int i = 0; i < degree; ++i) companion(i, degree - 1) = -coeffs[degree - i] / coeffs[0];
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(companion, false);
    for (int i = 0; i < degree; ++i) roots.push_back(es.eigenvalues()(i));
    return roots;
}

}  // namespace

double stieltjes_residual(Cplx z, Cplx m, const LimitParams& lp) {
    return std::abs(equation_lhs(z, m, lp));
}

Cplx stieltjes_solve(Cplx z, const LimitParams& lp) {
    if (!(z.imag() > 0.0)) throw std::invalid_argument("stieltjes_solve: need Im z > 0");
    if (!(lp.c > 0.0)) throw std::invalid_argument("stieltjes_solve: need c > 0");
    if (lp.nu < lp.a1 * lp.a1 - 1e-12)
        throw std::invalid_argument("stieltjes_solve: need nu >= a1^2");
    if (lp.nu <= 0.0) return -1.0 / z;  // degenerate point mass at 0

    const double beta = lp.nu - lp.a1 * lp.a1;
    const auto roots = polynomial_roots(Cplx(lp.a1 * beta / lp.c), lp.a1 * z + lp.nu,
                                        lp.c * z + lp.a1, Cplx(lp.c));

    Cplx best;
    double best_residual = std::numeric_limits<double>::infinity();
    int candidates = 0;
    for (Cplx root : roots) {
        // polish on the rational equation (two Newton steps)
        for (int it = 0; it < 2; ++it) {
            const Cplx deriv = equation_derivative(z, root, lp);
            if (std::abs(deriv) < 1e-300) break;
            const Cplx step = equation_lhs(z, root, lp) / deriv;
            if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) break;
            root -= step;
        }
        if (root.imag() <= kImTol) continue;
        ++candidates;
        const double res = stieltjes_residual(z, root, lp);
        if (res < best_residual) {
            best_residual = res;
            best = root;
        }
    }
    if (candidates == 0)
        throw SolverError("stieltjes_solve: no root with Im m > 0 (z too close to the axis?)",
                          best_residual);
    if (best_residual > 1e-12)
        throw SolverError("stieltjes_solve: residual above tolerance", best_residual);
    return best;
}

DensityCurve limiting_density(const LimitParams& lp, std::vector<double> grid, double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("limiting_density: epsilon must be > 0");
    if (!std::is_sorted(grid.begin(), grid.end()))
        throw std::invalid_argument("limiting_density: grid must be sorted");
    DensityCurve curve;
    curve.grid = std::move(grid);
    curve.density.assign(curve.grid.size(), 0.0);
    std::vector<int> failed(curve.grid.size(), 0);
#pragma omp parallel for schedule(static)
    for (size_t i = 0; i < curve.grid.size(); ++i) {
        try {
            const Cplx m = stieltjes_solve(Cplx(curve.grid[i], epsilon), lp);
            curve.density[i] = m.imag() / M_PI;
        } catch (const SolverError&) {
            failed[i] = 1;
        }
    }
    for (size_t i = 0; i < failed.size(); ++i)
        if (failed[i]) curve.failed_points.push_back(static_cast<int>(i));
    if (!curve.grid.empty())
        curve.support = find_support(lp, curve.grid.front(), curve.grid.back());
    return curve;
}

std::pair<double, double> support_bounds(const LimitParams& lp) {
    // |lambda| <= 2 sqrt(nu/c) + |a1| (1 + 1/c) bounds the edges comfortably
    const double radius =
        2.0 * std::sqrt(std::max(lp.nu, 1e-300) / lp.c) + std::abs(lp.a1) * (1.0 + 1.0 / lp.c);
    return {-radius - 1.0, radius + 1.0};
}

namespace {

double edge_density(const LimitParams& lp, double x) {
    try {
        return stieltjes_solve(Cplx(x, kEdgeEps), lp).imag() / M_PI;
    } catch (const SolverError&) {
        return 0.0;
    }
}

}  // namespace

Support find_support(const LimitParams& lp, double lo, double hi, int coarse_points) {
    Support support;
    if (!(hi > lo) || coarse_points < 2) return support;
    std::vector<char> inside(coarse_points);
    const double step = (hi - lo) / (coarse_points - 1);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < coarse_points; ++i)
        inside[i] = edge_density(lp, lo + i * step) > kSupportThreshold ? 1 : 0;

    auto refine = [&](double out_x, double in_x) {
        for (int it = 0; it < 40; ++it) {
            const double mid = 0.5 * (out_x + in_x);
            if (edge_density(lp, mid) > kSupportThreshold)
                in_x = mid;
            else
                out_x = mid;
        }
        return 0.5 * (out_x + in_x);
    };

    int i = 0;
    while (i < coarse_points) {
        if (!inside[i]) {
            ++i;
            continue;
        }
        int j = i;
        while (j + 1 < coarse_points && inside[j + 1]) ++j;
        double left = lo + i * step;
        double right = lo + j * step;
        if (i > 0) left = refine(left - step, left);
        if (j + 1 < coarse_points) right = refine(right + step, right);
        support.emplace_back(left, right);
        i = j + 1;
    }
    return support;
}

std::vector<double> empirical_esd(const Mat& symmetric) {
    const int n = static_cast<int>(symmetric.rows());
    if (symmetric.cols() != n) throw std::invalid_argument("empirical_esd: matrix not square");
    if (!symmetric.allFinite()) throw std::invalid_argument("empirical_esd: non-finite entries");
    Mat work = symmetric;
    std::vector<double> eigenvalues(n);
    const int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'N', 'L', n, work.data(), n,
                                    eigenvalues.data());
    if (info != 0)
        throw SolverError("empirical_esd: dsyevd failed with info " + std::to_string(info),
                          static_cast<double>(info));
    return eigenvalues;  // LAPACK returns ascending order
}

std::vector<double> empirical_esd(const kernel::KernelMatrix& k) { return empirical_esd(k.data); }

std::vector<double> detect_spikes(const std::vector<double>& eigs, const Support& support) {
    std::vector<double> spikes;
    if (eigs.empty() || support.empty()) return spikes;
    double width = 0.0;
    for (const auto& [a, b] : support) width += b - a;
    const double delta = 0.05 * width;

    std::vector<double> sorted = eigs;
    std::sort(sorted.begin(), sorted.end());
    auto outside = [&](double x) {
        for (const auto& [a, b] : support)
            if (x >= a - delta && x <= b + delta) return false;
        return true;
    };

    // connected components under "gap <= delta"; a component touching the
    // inflated support is bulk (edge smearing), anything else is isolated
    const size_t n = sorted.size();
    size_t start = 0;
    while (start < n) {
        size_t end = start;
        bool touches_bulk = !outside(sorted[start]);
        while (end + 1 < n && sorted[end + 1] - sorted[end] <= delta) {
            ++end;
            touches_bulk = touches_bulk || !outside(sorted[end]);
        }
        if (!touches_bulk)
            for (size_t k = start; k <= end; ++k) spikes.push_back(sorted[k]);
        start = end + 1;
    }
    return spikes;
}

double esd_distance(const std::vector<double>& eigs, const DensityCurve& curve, int bins) {
    if (eigs.empty()) throw std::invalid_argument("esd_distance: no eigenvalues");
    if (curve.support.empty()) throw std::invalid_argument("esd_distance: empty support");
    if (bins < 1) throw std::invalid_argument("esd_distance: bins must be >= 1");

    double width = 0.0;
    for (const auto& [a, b] : curve.support) width += b - a;
    const double delta = 0.05 * width;
    const double lo = curve.support.front().first - delta;
    const double hi = curve.support.back().second + delta;

    const std::vector<double> spikes = detect_spikes(eigs, curve.support);
    std::vector<double> bulk;
    bulk.reserve(eigs.size());
    for (double e : eigs) {
        if (!std::binary_search(spikes.begin(), spikes.end(), e) && e >= lo && e <= hi)
            bulk.push_back(e);
    }
    if (bulk.empty()) throw std::invalid_argument("esd_distance: no bulk eigenvalues in range");

    std::vector<double> emp(bins, 0.0);
    const double bin_width = (hi - lo) / bins;
    for (double e : bulk) {
        int b = static_cast<int>((e - lo) / bin_width);
        b = std::clamp(b, 0, bins - 1);
        emp[b] += 1.0;
    }
    for (double& v : emp) v /= static_cast<double>(bulk.size());

    // integrate the curve per bin by trapezoid on its own grid resolution
    std::vector<double> model(bins, 0.0);
    auto density_at = [&](double x) {
        const auto& g = curve.grid;
        if (g.empty() || x <= g.front() || x >= g.back()) return 0.0;
        const auto it = std::upper_bound(g.begin(), g.end(), x);
        const size_t hi_idx = static_cast<size_t>(it - g.begin());
        const size_t lo_idx = hi_idx - 1;
        const double t = (x - g[lo_idx]) / (g[hi_idx] - g[lo_idx]);
        return (1.0 - t) * curve.density[lo_idx] + t * curve.density[hi_idx];
    };
    for (int b = 0; b < bins; ++b) {
        const double a = lo + b * bin_width;
        const int sub = 16;
        double acc = 0.0;
        for (int s = 0; s < sub; ++s) {
            const double x0 = a + s * bin_width / sub;
            const double x1 = a + (s + 1) * bin_width / sub;
            acc += 0.5 * (density_at(x0) + density_at(x1)) * (x1 - x0);
        }
        model[b] = acc;
    }
    double total = 0.0;
    for (double v : model) total += v;
    if (total <= 0.0) throw std::invalid_argument("esd_distance: curve has no mass in range");
    double l1 = 0.0;
    for (int b = 0; b < bins; ++b) l1 += std::abs(emp[b] - model[b] / total);
    return l1;
}

double hist_distance(const std::vector<double>& a, const std::vector<double>& b, int bins,
                     double lo, double hi) {
    if (bins < 1 || !(hi > lo)) throw std::invalid_argument("hist_distance: bad bins or range");
    auto histogram = [&](const std::vector<double>& values) {
        std::vector<double> h(bins, 0.0);
        size_t count = 0;
        for (double v : values) {
            if (v < lo || v > hi) continue;
            int idx = static_cast<int>((v - lo) / (hi - lo) * bins);
            idx = std::clamp(idx, 0, bins - 1);
            h[idx] += 1.0;
            ++count;
        }
        if (count > 0)
            for (double& x : h) x /= static_cast<double>(count);
        return h;
    };
    const std::vector<double> ha = histogram(a);
    const std::vector<double> hb = histogram(b);
    double l1 = 0.0;
    for (int i = 0; i < bins; ++i) l1 += std::abs(ha[i] - hb[i]);
    return l1;
}

}  // namespace mixkern::spectrum
