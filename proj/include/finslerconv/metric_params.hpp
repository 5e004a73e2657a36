#pragma once

#include "finslerconv/randers.hpp"
#include "finslerconv/vec2.hpp"

namespace finslerconv {

// Unconstrained raw inputs of the three parameterizations.
struct RawParams5 {
    double l11{0}, l21{0}, l22{0}, w1{0}, w2{0};
};
struct RawParams6 {
    double r1{0}, r2{0}, lam1{0}, lam2{0}, w1{0}, w2{0};
};
struct RawParams7 {
    double r1{0}, r2{0}, lam1{0}, lam2{0}, s{0}, w1{0}, w2{0};
};

struct ParamHyper {
    double eps_l = 0.01;      // diagonal lift; bounds the maximum metric scale
    double eps_omega = 1.0;   // in (0,1]; 1 forces a symmetric (Riemannian) metric
    double eps = 1e-6;        // stability guard inside square roots and divisions
    double s_min = 0.1;
    double s_max = 1.5;
};

// 1/(1+exp(-x)) computed branch-wise so large |x| cannot overflow.
double stable_sigmoid(double x);
double stable_sigmoid_deriv(double x);

// Rescales a raw drift vector so that ||result||_{M^-1} < 1 - eps_omega:
//   result = 2 (1-eps_omega) (sigmoid(n) - 1/2) / n * omega,
// with n = sqrt(omega' M^-1 omega + eps). Odd in omega; zero maps to zero.
Vec2 constrain_omega(const Vec2& omega_raw, const Sym2& m, const ParamHyper& h);

// Cholesky path: Ltilde = L + eps_l*I, M = Ltilde Ltilde', drift constrained.
RandersParams metric_from_5(const RawParams5& raw, const ParamHyper& h);

// Spectral path: rotation from r (perturbed by eps elementwise and in the
// normalization), eigenvalues |lam_i| + eps_l.
RandersParams metric_from_6(const RawParams6& raw, const ParamHyper& h);

// Spectral path with a separate eigenvalue scale:
//   lam_i' = 2 sigmoid(lam_i),
//   stilde = (s_min+s_max)/2 + 2 (sigmoid(s)-1/2) (s_max-s_min), clamped to
//   [s_min, s_max] (the unclamped affine form can overshoot the interval),
//   lamtilde_i = lam_i' * stilde, floored at 1e-8 to keep M invertible.
RandersParams metric_from_7(const RawParams7& raw, const ParamHyper& h);

// Scale actually produced by the 7-number path (exposed for tests).
double eigen_scale_from_raw(double s, const ParamHyper& h);

}  // namespace finslerconv
