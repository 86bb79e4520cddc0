#include "mixkern/prototype.hpp"

#include <algorithm>
#include <cmath>

namespace mixkern::proto {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr double kAcceptTol = 1e-10;
constexpr double kProbeTol = 1e-6;
constexpr double kBox = 4.0;  // threshold search box

// (a1, a2) of the unit-t prototype at thresholds (s-, s+)
void unit_coeffs(double sm, double sp, double& a1, double& a2) {
    const double r = (1.0 - std::erf(sp)) / (1.0 + std::erf(sm));
    const double em = std::exp(-sm * sm);
    const double ep = std::exp(-sp * sp);
    a1 = kInvSqrt2Pi * (ep + r * em);
    a2 = kInvSqrt2Pi * (sp * ep + r * sm * em);
}

// t fixed by matching nu exactly
double t_for_nu(double sm, double sp, double nu) {
    const double r = (1.0 - std::erf(sp)) / (1.0 + std::erf(sm));
    const double denom = 0.5 * (1.0 - std::erf(sp)) * (1.0 + r);
    if (denom <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return std::sqrt(nu / denom);
}

struct Residual {
    double r1, r2;
    double norm() const { return std::max(std::abs(r1), std::abs(r2)); }
};

Residual residual_at(double sm, double sp, double a1_target, double a2_target, double nu_target) {
    const double t = t_for_nu(sm, sp, nu_target);
    if (!std::isfinite(t)) return {1e300, 1e300};
    double a1, a2;
    unit_coeffs(sm, sp, a1, a2);
    return {t * a1 - a1_target, t * a2 - a2_target};
}

// Damped Newton with a central-difference Jacobian in (s-, s+).
DesignResult newton_from(double sm, double sp, double a1t, double a2t, double nut) {
    DesignResult best;
    Residual res = residual_at(sm, sp, a1t, a2t, nut);
    for (int iter = 0; iter < 100; ++iter) {
        if (res.norm() < kAcceptTol) break;
        const double h = 1e-6;
        const Residual rpm = residual_at(sm + h, sp, a1t, a2t, nut);
        const Residual rmm = residual_at(sm - h, sp, a1t, a2t, nut);
        const Residual rpp = residual_at(sm, sp + h, a1t, a2t, nut);
        const Residual rmp = residual_at(sm, sp - h, a1t, a2t, nut);
        const double j11 = (rpm.r1 - rmm.r1) / (2 * h), j12 = (rpp.r1 - rmp.r1) / (2 * h);
        const double j21 = (rpm.r2 - rmm.r2) / (2 * h), j22 = (rpp.r2 - rmp.r2) / (2 * h);
        const double det = j11 * j22 - j12 * j21;
        if (!std::isfinite(det) || std::abs(det) < 1e-300) break;
        const double dm = (j22 * res.r1 - j12 * res.r2) / det;
        const double dp = (-j21 * res.r1 + j11 * res.r2) / det;

        double lambda = 1.0;
        bool stepped = false;
        for (int bt = 0; bt < 25; ++bt, lambda *= 0.5) {
            // keep iterates inside the search box: beyond |s| ~ 4 the family
            // degenerates (t blows up against a vanishing tail) and the probe
            // would chase limit points it cannot attain
            double nm = std::clamp(sm - lambda * dm, -kBox, kBox);
            double np = std::clamp(sp - lambda * dp, -kBox, kBox);
            if (nm > np) continue;  // keep s- <= s+
            const Residual cand = residual_at(nm, np, a1t, a2t, nut);
            if (cand.norm() < res.norm()) {
                sm = nm;
                sp = np;
                res = cand;
                stepped = true;
                break;
            }
        }
        if (!stepped) break;
    }
    best.proto.t = t_for_nu(sm, sp, nut);
    best.proto.s_minus = sm;
    best.proto.s_plus = sp;
    best.residual = res.norm();
    best.converged = res.norm() < kAcceptTol;
    return best;
}

DesignResult multistart(double a1t, double a2t, double nut, double accept_tol) {
    DesignResult best;
    for (int i = 0; i < 13; ++i) {
        for (int j = 0; j < 13; ++j) {
            const double sm = -3.0 + 0.5 * i;
            const double sp = -3.0 + 0.5 * j;
            if (sm > sp) continue;
            DesignResult cand = newton_from(sm, sp, a1t, a2t, nut);
            if (cand.residual < best.residual) best = cand;
            if (best.residual < accept_tol) return best;
        }
    }
    return best;
}

}  // namespace

void PiecewiseProto::validate() const {
    if (!(t > 0.0)) throw std::invalid_argument("piecewise proto: t must be positive");
    if (!(s_minus <= s_plus)) throw std::invalid_argument("piecewise proto: s- must be <= s+");
    if (!(r() > 0.0) || !std::isfinite(r()))
        throw std::invalid_argument("piecewise proto: ratio r not positive finite");
}

double eval_piecewise(const PiecewiseProto& proto, double x) {
    const double r = proto.r();
    double base;
    if (x <= kSqrt2 * proto.s_minus)
        base = -(r * proto.t);
    else if (x <= kSqrt2 * proto.s_plus)
        base = 0.0;
    else
        base = proto.t;
    return proto.sign_flip ? -base : base;
}

hermite::HermiteCoeffs coeffs_of_piecewise(const PiecewiseProto& proto) {
    const double r = proto.r();
    const double em = std::exp(-proto.s_minus * proto.s_minus);
    const double ep = std::exp(-proto.s_plus * proto.s_plus);
    hermite::HermiteCoeffs c;
    c.a0 = 0.0;
    c.a1 = proto.t * kInvSqrt2Pi * (ep + r * em);
    c.a2 = proto.t * kInvSqrt2Pi * (proto.s_plus * ep + r * proto.s_minus * em);
    c.nu = 0.5 * proto.t * proto.t * (1.0 - std::erf(proto.s_plus)) * (1.0 + r);
    if (proto.sign_flip) {
        c.a1 = -c.a1;
        c.a2 = -c.a2;
    }
    return c;
}

hermite::KernelFunc to_kernel_func(const PiecewiseProto& proto) {
    PiecewiseProto self = proto;
    hermite::KernelFunc kf;
    kf.tag = hermite::KernelFunc::Tag::Piecewise;
    kf.breakpoints = {kSqrt2 * proto.s_minus, kSqrt2 * proto.s_plus};
    kf.f = [self](double x) { return eval_piecewise(self, x); };
    return kf;
}

DesignResult design_piecewise(const hermite::HermiteCoeffs& target) {
    if (target.nu < target.a1 * target.a1 + target.a2 * target.a2 - 1e-12)
        throw InfeasibleError("design_piecewise: nu < a1^2 + a2^2",
                              target.a1 * target.a1 + target.a2 * target.a2 - target.nu);
    const bool flip = target.a1 < 0.0;
    const double a1t = flip ? -target.a1 : target.a1;
    const double a2t = flip ? -target.a2 : target.a2;

    DesignResult result = multistart(a1t, a2t, target.nu, kAcceptTol);
    result.proto.sign_flip = flip;
    if (!result.converged)
        throw InfeasibleError("design_piecewise: no prototype reaches the target "
                              "(best residual " + std::to_string(result.residual) + ")",
                              result.residual);
    return result;
}

FeasibilityReport feasibility(const hermite::HermiteCoeffs& target) {
    FeasibilityReport report;
    report.necessary_condition =
        target.nu >= target.a1 * target.a1 + target.a2 * target.a2 - 1e-12;
    if (!report.necessary_condition) return report;
    const bool flip = target.a1 < 0.0;
    const DesignResult probe =
        multistart(flip ? -target.a1 : target.a1, flip ? -target.a2 : target.a2, target.nu,
                   kProbeTol);
    report.best_residual = probe.residual;
    report.best_probe = probe.proto;
    report.best_probe.sign_flip = flip;
    report.feasible = probe.residual < kProbeTol;
    return report;
}

}  // namespace mixkern::proto
