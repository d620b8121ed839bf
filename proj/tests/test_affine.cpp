#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "gridtie/affine.hpp"
#include "gridtie/converter.hpp"

using namespace gridtie;
using Catch::Approx;

namespace {

// Independent oracle: classic RK4 with many substeps. Deliberately shares no
// code with step_affine.
Vec2 rk4_reference(Vec2 x, const AffineMode& m, double h, int substeps) {
    auto f = [&m](const Vec2& s) {
        return Vec2{m.a[0] * s[0] + m.a[1] * s[1] + m.b[0] * m.input,
                    m.a[2] * s[0] + m.a[3] * s[1] + m.b[1] * m.input};
    };
    const double dt = h / substeps;
    for (int i = 0; i < substeps; ++i) {
        const Vec2 k1 = f(x);
        const Vec2 k2 = f({x[0] + 0.5 * dt * k1[0], x[1] + 0.5 * dt * k1[1]});
        const Vec2 k3 = f({x[0] + 0.5 * dt * k2[0], x[1] + 0.5 * dt * k2[1]});
        const Vec2 k4 = f({x[0] + dt * k3[0], x[1] + dt * k3[1]});
        x[0] += dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
        x[1] += dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
    }
    return x;
}

double rel_diff(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-30});
}

}  // namespace

TEST_CASE("zero dynamics fix every point") {
    const AffineMode zero{};
    const Vec2 x{1.0, 2.0};
    for (double h : {1e-9, 1e-6, 1.0, 3600.0}) {
        const Vec2 y = step_affine(x, zero, h);
        CHECK(y[0] == 1.0);
        CHECK(y[1] == 2.0);
    }
}

TEST_CASE("closed mode integrates the inductor ramp exactly") {
    // dI/dt = V_sp / L with V_sp = 18.6 V, L = 40 uH over 1 us from rest
    ConverterParams p;
    const AffineMode m = converter_mode_dynamics(SwitchPhase::Close, p);
    const Vec2 y = step_affine({0.0, 0.0}, m, 1e-6);
    CHECK(y[0] == Approx(0.465).epsilon(1e-12));
}

TEST_CASE("closed mode decays the capacitor voltage exponentially") {
    // V(h) = V0 exp(-h/(RC)); R = 4 ohm, C = 60 uF, h = RC = 240 us
    ConverterParams p;
    const AffineMode m = converter_mode_dynamics(SwitchPhase::Close, p);
    const Vec2 y = step_affine({0.0, 10.0}, m, 240e-6);
    CHECK(y[1] == Approx(10.0 * std::exp(-1.0)).epsilon(1e-12));
    CHECK(y[1] == Approx(3.6788).epsilon(1e-4));
}

TEST_CASE("open mode matches a fine-step RK4 reference") {
    ConverterParams p;
    const AffineMode m = converter_mode_dynamics(SwitchPhase::Open, p);
    const Vec2 x0{8.0, 17.0};
    const double h = 2e-6;
    const Vec2 exact = step_affine(x0, m, h);
    const Vec2 ref = rk4_reference(x0, m, h, 4000);
    CHECK(rel_diff(exact[0], ref[0]) < 1e-9);
    CHECK(rel_diff(exact[1], ref[1]) < 1e-9);
}

TEST_CASE("driven singular modes match the RK4 reference") {
    AffineMode m;
    m.a = {0.0, 0.0, 3.0, -2.0};  // det = 0, tr != 0, with both drive entries
    m.b = {1.5, -0.5};
    m.input = 2.0;
    const Vec2 x0{0.3, -0.7};
    const Vec2 exact = step_affine(x0, m, 0.37);
    const Vec2 ref = rk4_reference(x0, m, 0.37, 20000);
    CHECK(rel_diff(exact[0], ref[0]) < 1e-9);
    CHECK(rel_diff(exact[1], ref[1]) < 1e-9);

    AffineMode nil;  // det = 0, tr = 0, nilpotent
    nil.a = {0.0, 2.0, 0.0, 0.0};
    nil.b = {0.0, 1.0};
    nil.input = 3.0;
    const Vec2 e2 = step_affine(x0, nil, 0.5);
    const Vec2 r2 = rk4_reference(x0, nil, 0.5, 20000);
    CHECK(rel_diff(e2[0], r2[0]) < 1e-10);
    CHECK(rel_diff(e2[1], r2[1]) < 1e-10);
}

TEST_CASE("stepping is a semigroup: one step equals two half steps") {
    ConverterParams p;
    std::mt19937_64 gen(7);
    auto u = [&gen] { return 2.0 * (static_cast<double>(gen() >> 11) * 0x1.0p-53) - 1.0; };

    // the two converter modes plus assorted random matrices of every branch
    std::vector<AffineMode> modes = {converter_mode_dynamics(SwitchPhase::Open, p),
                                     converter_mode_dynamics(SwitchPhase::Close, p)};
    for (int i = 0; i < 40; ++i) {
        AffineMode m;
        m.a = {4.0 * u(), 4.0 * u(), 4.0 * u(), 4.0 * u()};
        m.b = {u(), u()};
        m.input = 5.0 * u();
        if (i % 3 == 0) {  // force det = 0
            m.a[2] = (m.a[1] == 0.0) ? 0.0 : m.a[0] * m.a[3] / m.a[1];
        }
        modes.push_back(m);
    }
    for (const AffineMode& m : modes) {
        const Vec2 x0{0.8, -1.3};
        const double h = 0.11;
        const Vec2 whole = step_affine(x0, m, h);
        const Vec2 halves = step_affine(step_affine(x0, m, h / 2), m, h / 2);
        CHECK(rel_diff(whole[0], halves[0]) < 1e-12);
        CHECK(rel_diff(whole[1], halves[1]) < 1e-12);
    }
}

TEST_CASE("pure decay composition stays exact over PWM-scale steps") {
    ConverterParams p;
    const AffineMode m = converter_mode_dynamics(SwitchPhase::Close, p);
    const double h = 1.9e-6;
    Vec2 a = step_affine({0.0, 10.0}, m, h);
    Vec2 b = step_affine(step_affine({0.0, 10.0}, m, h / 2), m, h / 2);
    CHECK(rel_diff(a[1], b[1]) < 1e-12);
}

TEST_CASE("step contract violations are reported") {
    const AffineMode m{};
    CHECK_THROWS_AS(step_affine({0, 0}, m, 0.0), contract_violation);
    CHECK_THROWS_AS(step_affine({0, 0}, m, -1.0), contract_violation);

    AffineMode bad;
    bad.a = {std::numeric_limits<double>::quiet_NaN(), 0, 0, 0};
    CHECK_THROWS_AS(step_affine({0, 0}, bad, 1.0), invalid_parameter);

    AffineMode blowup;
    blowup.a = {2000.0, 0, 0, 1000.0};  // positive eigenvalues; overflows for huge h
    CHECK_THROWS_AS(step_affine({1.0, 1.0}, blowup, 1e6), numerical_error);
}
