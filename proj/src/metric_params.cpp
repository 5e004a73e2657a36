#include "finslerconv/metric_params.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace finslerconv {

double stable_sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double stable_sigmoid_deriv(double x) {
    const double s = stable_sigmoid(x);
    return s * (1.0 - s);
}

namespace {

void check_hyper(const ParamHyper& h) {
    if (!(h.eps_l > 0.0)) throw std::invalid_argument("ParamHyper: eps_l must be positive");
    if (!(h.eps_omega > 0.0 && h.eps_omega <= 1.0))
        throw std::invalid_argument("ParamHyper: eps_omega must be in (0,1]");
    if (!(h.eps > 0.0)) throw std::invalid_argument("ParamHyper: eps must be positive");
    if (!(h.s_min > 0.0 && h.s_min <= h.s_max))
        throw std::invalid_argument("ParamHyper: need 0 < s_min <= s_max");
}

// Rotation-like matrix of Algorithms 2/3: columns rtilde, rtilde_perp over
// (||rtilde|| + eps). Orthogonal up to the eps in the denominator.
struct SpectralFrame {
    Vec2 a;        // rtilde
    double scale;  // 1 / (||rtilde|| + eps)
};

SpectralFrame spectral_frame(double r1, double r2, double eps) {
    SpectralFrame f;
    f.a = Vec2{r1 + eps, r2 + eps};
    f.scale = 1.0 / (f.a.norm() + eps);
    return f;
}

Sym2 rotate_diag(const SpectralFrame& f, double lam1, double lam2) {
    const double c2 = f.scale * f.scale;
    const double a1 = f.a.x;
    const double a2 = f.a.y;
    return Sym2{c2 * (lam1 * a1 * a1 + lam2 * a2 * a2), c2 * a1 * a2 * (lam1 - lam2),
                c2 * (lam1 * a2 * a2 + lam2 * a1 * a1)};
}

// Extreme raw inputs can drive the smallest eigenvalue to numerical zero
// (e.g. a Cholesky diagonal crossing -eps_l); lifting the spectrum keeps the
// maps total. Eigenvalues below eps*lambda_max are unresolvable in doubles,
// so the lift also caps the condition number at 1e12. Inactive for any
// ordinary input.
constexpr double kEigenFloor = 1e-8;

Sym2 lift_spectrum(Sym2 m) {
    const double target = std::max(kEigenFloor, m.max_eigenvalue() * 1e-12);
    const double lift = target - m.min_eigenvalue();
    if (lift > 0.0) {
        m.m11 += lift;
        m.m22 += lift;
    }
    return m;
}

}  // namespace

Vec2 constrain_omega(const Vec2& omega_raw, const Sym2& m, const ParamHyper& h) {
    check_hyper(h);
    const Vec2 v = m.inverse().apply(omega_raw);
    const double n = std::sqrt(std::max(0.0, omega_raw.dot(v)) + h.eps);
    const double scale = 2.0 * (1.0 - h.eps_omega) * (stable_sigmoid(n) - 0.5) / n;
    return omega_raw * scale;
}

RandersParams metric_from_5(const RawParams5& raw, const ParamHyper& h) {
    check_hyper(h);
    const double l11 = raw.l11 + h.eps_l;
    const double l21 = raw.l21;
    const double l22 = raw.l22 + h.eps_l;
    const Sym2 m = lift_spectrum(Sym2{l11 * l11, l11 * l21, l21 * l21 + l22 * l22});
    const Vec2 w = constrain_omega(Vec2{raw.w1, raw.w2}, m, h);
    return RandersParams::make(m, w);
}

RandersParams metric_from_6(const RawParams6& raw, const ParamHyper& h) {
    check_hyper(h);
    const SpectralFrame f = spectral_frame(raw.r1, raw.r2, h.eps);
    const Sym2 m =
        lift_spectrum(rotate_diag(f, std::abs(raw.lam1) + h.eps_l, std::abs(raw.lam2) + h.eps_l));
    const Vec2 w = constrain_omega(Vec2{raw.w1, raw.w2}, m, h);
    return RandersParams::make(m, w);
}

double eigen_scale_from_raw(double s, const ParamHyper& h) {
    const double mid = 0.5 * (h.s_min + h.s_max);
    const double span = h.s_max - h.s_min;
    const double raw = mid + 2.0 * (stable_sigmoid(s) - 0.5) * span;
    return std::clamp(raw, h.s_min, h.s_max);
}

RandersParams metric_from_7(const RawParams7& raw, const ParamHyper& h) {
    check_hyper(h);
    constexpr double kLambdaFloor = 1e-8;
    const SpectralFrame f = spectral_frame(raw.r1, raw.r2, h.eps);
    const double stilde = eigen_scale_from_raw(raw.s, h);
    const double lam1 = std::max(kLambdaFloor, 2.0 * stable_sigmoid(raw.lam1) * stilde);
    const double lam2 = std::max(kLambdaFloor, 2.0 * stable_sigmoid(raw.lam2) * stilde);
    const Sym2 m = lift_spectrum(rotate_diag(f, lam1, lam2));
    const Vec2 w = constrain_omega(Vec2{raw.w1, raw.w2}, m, h);
    return RandersParams::make(m, w);
}

}  // namespace finslerconv
