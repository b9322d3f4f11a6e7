#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <random>

#include "vcd/optics.hpp"

using namespace vcd;
using Catch::Matchers::WithinAbs;

namespace {
constexpr double kDisplay = 0.25;
constexpr double kFocus = 0.38;
constexpr double kRetinaDepth = 0.025;

double in_focus_f(double d_o, double d_e) { return 1.0 / (1.0 / d_o + 1.0 / d_e); }

void check_equal(const RayTransferMatrix& m, const RayTransferMatrix& e, double tol) {
    CHECK_THAT(m.a, WithinAbs(e.a, tol));
    CHECK_THAT(m.b, WithinAbs(e.b, tol));
    CHECK_THAT(m.c, WithinAbs(e.c, tol));
    CHECK_THAT(m.d, WithinAbs(e.d, tol));
}
}  // namespace

TEST_CASE("translate builds the propagation shear") {
    check_equal(translate(0.0), RayTransferMatrix::identity(), 0.0);
    RayTransferMatrix m = translate(0.25);
    CHECK(m.a == 1.0);
    CHECK(m.b == 0.25);
    CHECK(m.c == 0.0);
    CHECK(m.d == 1.0);
    check_equal(translate(0.1) * translate(0.2), translate(0.3), 1e-15);
    CHECK_THROWS_AS(translate(std::numeric_limits<double>::quiet_NaN()), NumericError);
}

TEST_CASE("refract builds the thin-lens matrix") {
    check_equal(refract(std::numeric_limits<double>::infinity()),
                RayTransferMatrix::identity(), 0.0);
    double f = in_focus_f(kFocus, kRetinaDepth);
    CHECK_THAT(f, WithinAbs(0.023457, 1e-6));
    CHECK_THAT(refract(0.023457).c, WithinAbs(-42.632, 1e-3));
    CHECK_THAT(refract(0.003).c, WithinAbs(-333.333, 1e-2));
    CHECK_THROWS_AS(refract(0.0), NumericError);
}

TEST_CASE("reparam places the angular plane on the pupil") {
    RayTransferMatrix q0 = reparam(0.0);
    CHECK(q0.a == 1.0);
    CHECK(q0.b == 0.0);
    CHECK(q0.c == 1.0);
    CHECK(q0.d == 0.0);
    RayTransferMatrix q = reparam(kRetinaDepth);
    CHECK(q.d == -0.025);
    CHECK_THAT(q.det(), WithinAbs(-0.025, 1e-15));
}

TEST_CASE("compose multiplies in application order") {
    RayTransferMatrix m{1.5, 0.2, -0.3, 0.9};
    check_equal(compose(RayTransferMatrix::identity(), m), m, 0.0);

    // An eye focused at the display distance images every display point to a
    // single retinal point: the position row loses its slope dependence.
    double f = in_focus_f(kFocus, kRetinaDepth);
    RayTransferMatrix chain = translate(kRetinaDepth) * refract(f) * translate(kFocus);
    CHECK(std::abs(chain.b) <= 1e-9);
}

TEST_CASE("eye_transport composes the display-to-retina map") {
    double f = in_focus_f(kFocus, kRetinaDepth);
    RayTransferMatrix m = eye_transport(kDisplay, f, kRetinaDepth);
    CHECK_THAT(m.det(), WithinAbs(-kRetinaDepth, 1e-12));

    RayTransferMatrix focused = eye_transport(kFocus, f, kRetinaDepth);
    CHECK_THAT(focused.a, WithinAbs(-kRetinaDepth / kFocus, 1e-6));
    CHECK_THAT(focused.b, WithinAbs(0.0, 1e-6));

    RayTransferMatrix round = invert(m) * m;
    check_equal(round, RayTransferMatrix::identity(), 1e-12);
    CHECK_THROWS_AS(eye_transport(-0.1, f, kRetinaDepth), NumericError);
}

TEST_CASE("invert computes the closed-form inverse") {
    check_equal(invert(RayTransferMatrix::identity()), RayTransferMatrix::identity(), 0.0);
    check_equal(invert(translate(0.25)), translate(-0.25), 1e-15);

    RayTransferMatrix q = reparam(0.025);
    RayTransferMatrix qi = invert(q);
    check_equal(qi, RayTransferMatrix{1.0, 0.0, 40.0, -40.0}, 1e-12);

    RayTransferMatrix singular{1.0, 2.0, 0.5, 1.0};  // det = 0
    try {
        invert(singular);
        FAIL("expected SingularMatrixError");
    } catch (const SingularMatrixError& e) {
        CHECK_THAT(e.determinant(), WithinAbs(0.0, 1e-15));
    }
}

TEST_CASE("apply maps ray coordinates") {
    RayCoord r{0.001, 0.002};
    RayCoord out = apply(RayTransferMatrix::identity(), r);
    CHECK(out.x == 0.001);
    CHECK(out.u == 0.002);

    out = apply(translate(0.25), RayCoord{0.0, 0.003});
    CHECK_THAT(out.x, WithinAbs(0.00075, 1e-15));
    CHECK_THAT(out.u, WithinAbs(0.003, 1e-15));

    out = apply(refract(0.025), RayCoord{0.001, 0.0});
    CHECK_THAT(out.x, WithinAbs(0.001, 1e-15));
    CHECK_THAT(out.u, WithinAbs(-0.04, 1e-15));
}

TEST_CASE("shear additivity holds for random distances") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        double a = dist(rng), b = dist(rng);
        check_equal(translate(a) * translate(b), translate(a + b), 1e-12);
    }
}

TEST_CASE("determinant identities") {
    std::mt19937 rng(12);
    std::uniform_real_distribution<double> d(-2.0, 2.0);
    std::uniform_real_distribution<double> fdist(0.005, 10.0);
    for (int i = 0; i < 500; ++i) {
        CHECK_THAT(translate(d(rng)).det(), WithinAbs(1.0, 1e-12));
        CHECK_THAT(refract(fdist(rng)).det(), WithinAbs(1.0, 1e-12));
        double q = d(rng);
        CHECK_THAT(reparam(q).det(), WithinAbs(-q, 1e-12 * std::max(1.0, std::abs(q))));
        double d_o = 0.05 + std::abs(d(rng));
        double d_e = 0.01 + 0.02 * std::abs(d(rng));
        double det = eye_transport(d_o, fdist(rng), d_e).det();
        CHECK_THAT(det, WithinAbs(-d_e, 1e-12));
    }
}

TEST_CASE("focused chains lose slope dependence for random conjugates") {
    std::mt19937 rng(13);
    std::uniform_real_distribution<double> od(0.05, 2.0);
    std::uniform_real_distribution<double> ed(0.01, 0.05);
    for (int i = 0; i < 500; ++i) {
        double d_o = od(rng), d_e = ed(rng);
        double f = in_focus_f(d_o, d_e);
        RayTransferMatrix chain = translate(d_e) * refract(f) * translate(d_o);
        CHECK(std::abs(chain.b) <= 1e-9 * d_o);
    }
}

TEST_CASE("inversion round-trips ray coordinates") {
    std::mt19937 rng(14);
    std::uniform_real_distribution<double> e(-2.0, 2.0);
    std::uniform_real_distribution<double> mm(-0.005, 0.005);
    int tested = 0;
    while (tested < 500) {
        RayTransferMatrix m{e(rng), e(rng), e(rng), e(rng)};
        if (std::abs(m.det()) < 0.05) continue;
        ++tested;
        RayCoord r{mm(rng), mm(rng)};
        RayCoord back = apply(invert(m), apply(m, r));
        CHECK_THAT(back.x, WithinAbs(r.x, 1e-9));
        CHECK_THAT(back.u, WithinAbs(r.u, 1e-9));
    }
}
