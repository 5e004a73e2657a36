#include "finslerconv/heuristic.hpp"

#include <cmath>
#include <stdexcept>

namespace finslerconv {

MetricField heuristic_field(const GrayImage& img, const HeuristicConfig& cfg) {
    if (!(cfg.iota > 0.0) || cfg.alpha < 0.0)
        throw std::invalid_argument("heuristic_field: need iota > 0 and alpha >= 0");
    if (!(cfg.eps_omega > 0.0 && cfg.eps_omega <= 1.0))
        throw std::invalid_argument("heuristic_field: eps_omega must be in (0,1]");

    const VecField grad = sobel_gradient(img, cfg.pad);
    double max_norm = 0.0;
    for (const Vec2& g : grad.v) max_norm = std::max(max_norm, g.norm());

    MetricField field(img.height(), img.width());
    for (int r = 0; r < img.height(); ++r) {
        for (int c = 0; c < img.width(); ++c) {
            const Vec2 g = grad.at(r, c);
            const double gn = g.norm();
            const double rel = max_norm > 0.0 ? gn / max_norm : 0.0;
            const double t = 1.0 + cfg.alpha * rel;
            double lam_along = cfg.iota * t;  // eigenvalue along the gradient
            double lam_cross = cfg.iota / t;
            if (cfg.radius_convention == RadiusConvention::Linear) {
                lam_along *= lam_along;
                lam_cross *= lam_cross;
            }
            // Exact rotation keeps det(M) at the product of the eigenvalues.
            const double theta = gn > 0.0 ? std::atan2(g.y, g.x) : 0.0;
            const double co = std::cos(theta);
            const double si = std::sin(theta);
            const Sym2 m{lam_along * co * co + lam_cross * si * si,
                         (lam_along - lam_cross) * co * si,
                         lam_along * si * si + lam_cross * co * co};

            Vec2 omega{0.0, 0.0};
            if (cfg.eps_omega < 1.0) {
                Vec2 wt = g * (1.0 / (gn + cfg.eps));
                if (cfg.omega_dir == OmegaDir::GradPerp) wt = wt.perp();
                const double wt_norm = omega_dual_norm(m, wt);
                omega = wt * ((1.0 - cfg.eps_omega) / (wt_norm + cfg.eps));
            }
            field.at(r, c) = RandersParams::make(m, omega);
        }
    }
    return field;
}

MetricField heuristic_field_ugb(const GrayImage& img, HeuristicConfig cfg) {
    cfg.alpha = 10.0;
    cfg.iota = 1.0;
    return heuristic_field(img, cfg);
}

}  // namespace finslerconv
