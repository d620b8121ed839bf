#pragma once

#include <array>
#include <cmath>

#include "gridtie/errors.hpp"

namespace gridtie {

using Vec2 = std::array<double, 2>;

// One affine flow dx/dt = A x + B u with a constant scalar input u.
struct AffineMode {
    std::array<double, 4> a{};  // row-major 2x2
    Vec2 b{};
    double input = 0.0;
};

// Global sampling clock: recorded sample k lies at t = k * dt.
struct SimClock {
    double t = 0.0;
    double dt = 1e-6;
};

namespace detail {

// sinh(z)/z, series for small z
inline double sinhc(double z) {
    if (std::abs(z) < 1e-5) {
        const double z2 = z * z;
        return 1.0 + z2 / 6.0 + z2 * z2 / 120.0;
    }
    return std::sinh(z) / z;
}

// sin(z)/z, series for small z
inline double sinc(double z) {
    if (std::abs(z) < 1e-5) {
        const double z2 = z * z;
        return 1.0 - z2 / 6.0 + z2 * z2 / 120.0;
    }
    return std::sin(z) / z;
}

// Phi and J*drive via the scaled-and-squared Taylor exponential of the
// augmented system [[A, B u], [0, 0]] * h. Uniformly stable; covers the
// nearly-singular / nearly-defective region where the closed forms lose
// digits to cancellation.
struct AugmentedStep {
    std::array<double, 4> phi;
    std::array<double, 2> jdrive;
};

inline AugmentedStep augmented_exp(const std::array<double, 4>& a, const std::array<double, 2>& drive,
                                   double h) {
    std::array<double, 9> n = {a[0] * h, a[1] * h, drive[0] * h,
                               a[2] * h, a[3] * h, drive[1] * h,
                               0.0,      0.0,      0.0};
    double norm = 0.0;
    for (int r = 0; r < 3; ++r)
        norm = std::max(norm, std::abs(n[3 * r]) + std::abs(n[3 * r + 1]) + std::abs(n[3 * r + 2]));
    int squarings = 0;
    while (norm > 0.5 && squarings < 64) {
        for (double& v : n) v *= 0.5;
        norm *= 0.5;
        ++squarings;
    }

    auto mul = [](const std::array<double, 9>& x, const std::array<double, 9>& y) {
        std::array<double, 9> z{};
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                z[3 * r + c] =
                    x[3 * r] * y[c] + x[3 * r + 1] * y[3 + c] + x[3 * r + 2] * y[6 + c];
        return z;
    };

    std::array<double, 9> result = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    std::array<double, 9> term = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    for (int k = 1; k <= 20; ++k) {
        term = mul(term, n);
        for (double& v : term) v /= k;
        for (int i = 0; i < 9; ++i) result[i] += term[i];
    }
    for (int s = 0; s < squarings; ++s) result = mul(result, result);

    return AugmentedStep{{result[0], result[1], result[3], result[4]}, {result[2], result[5]}};
}

}  // namespace detail

// Exact solution of dx/dt = A x + B u over a step of length h:
//   x(h) = Phi x(0) + J B u,   Phi = e^{Ah},   J = int_0^h e^{As} ds.
//
// Phi comes from the scalar decomposition A = (tr/2) I + M, M^2 = (tr^2/4 - det) I.
// The input integral has a closed form in each case:
//   det != 0           J = A^{-1} (Phi - I)
//   det == 0, tr != 0  A^2 = tr A, so Phi = I + A (e^{tr h} - 1)/tr
//   det == 0, tr == 0  A^2 = 0
// All branches are exact up to floating-point rounding; composing steps is
// therefore equivalent to one long step.
inline Vec2 step_affine(const Vec2& x, const AffineMode& mode, double h) {
    if (!(h > 0.0)) throw contract_violation("step_affine: step length must be positive");
    const auto& a = mode.a;
    for (double v : a)
        if (!std::isfinite(v)) throw invalid_parameter("step_affine: non-finite dynamics matrix");
    if (!std::isfinite(mode.b[0]) || !std::isfinite(mode.b[1]) || !std::isfinite(mode.input))
        throw invalid_parameter("step_affine: non-finite input term");

    const double tr = a[0] + a[3];
    const double det = a[0] * a[3] - a[1] * a[2];
    const double scale = tr * tr + 4.0 * std::abs(det);
    const Vec2 drive = {mode.b[0] * mode.input, mode.b[1] * mode.input};

    std::array<double, 4> phi;
    Vec2 jd;  // J * (B u)
    if (det == 0.0 && tr != 0.0) {
        // A^2 = tr A (Cayley-Hamilton with vanishing determinant)
        const double e1 = std::expm1(tr * h);
        const double f = e1 / tr;
        const double g = (e1 - tr * h) / (tr * tr);
        phi = {1.0 + f * a[0], f * a[1], f * a[2], 1.0 + f * a[3]};
        jd = {h * drive[0] + g * (a[0] * drive[0] + a[1] * drive[1]),
              h * drive[1] + g * (a[2] * drive[0] + a[3] * drive[1])};
    } else if (det == 0.0) {
        // A^2 = 0
        const double g = 0.5 * h * h;
        phi = {1.0 + h * a[0], h * a[1], h * a[2], 1.0 + h * a[3]};
        jd = {h * drive[0] + g * (a[0] * drive[0] + a[1] * drive[1]),
              h * drive[1] + g * (a[2] * drive[0] + a[3] * drive[1])};
    } else if (std::abs(det) >= 1e-3 * scale) {
        // well-conditioned: scalar decomposition A = alpha I + M, M^2 = mu^2 I
        const double alpha = 0.5 * tr;
        const double disc = tr * tr - 4.0 * det;  // (2 mu)^2
        double c, s;  // cosh(mu h) and sinh(mu h)/mu, or the trigonometric pair
        if (disc >= 0.0) {
            const double mu = 0.5 * std::sqrt(disc);
            c = std::cosh(mu * h);
            s = h * detail::sinhc(mu * h);
        } else {
            const double w = 0.5 * std::sqrt(-disc);
            c = std::cos(w * h);
            s = h * detail::sinc(w * h);
        }
        const double e = std::exp(alpha * h);
        phi = {e * (c + s * (a[0] - alpha)), e * (s * a[1]),
               e * (s * a[2]), e * (c + s * (a[3] - alpha))};
        // J = A^{-1} (Phi - I)
        const std::array<double, 4> d = {phi[0] - 1.0, phi[1], phi[2], phi[3] - 1.0};
        const std::array<double, 4> j = {
            (a[3] * d[0] - a[1] * d[2]) / det, (a[3] * d[1] - a[1] * d[3]) / det,
            (-a[2] * d[0] + a[0] * d[2]) / det, (-a[2] * d[1] + a[0] * d[3]) / det};
        jd = {j[0] * drive[0] + j[1] * drive[1], j[2] * drive[0] + j[3] * drive[1]};
    } else {
        // nearly singular: the closed forms above lose digits to cancellation
        const detail::AugmentedStep aug = detail::augmented_exp(a, drive, h);
        phi = aug.phi;
        jd = aug.jdrive;
    }

    const Vec2 out = {phi[0] * x[0] + phi[1] * x[1] + jd[0],
                      phi[2] * x[0] + phi[3] * x[1] + jd[1]};
    if (!std::isfinite(out[0]) || !std::isfinite(out[1]))
        throw numerical_error("step_affine: state diverged to a non-finite value");
    return out;
}

}  // namespace gridtie
