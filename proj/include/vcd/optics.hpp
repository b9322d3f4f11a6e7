#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "vcd/errors.hpp"

namespace vcd {

/// Paraxial ray state for one transverse axis. `x` is the position on the
/// current spatial plane; `u` is the conjugate coordinate the active
/// parameterization assigns (slope on the display side, pupil intercept on
/// the retinal side after reparameterization).
struct RayCoord {
    double x = 0.0;
    double u = 0.0;
};

/// 2x2 ray-transfer matrix [[a,b],[c,d]] acting on (x, u) column vectors.
struct RayTransferMatrix {
    double a = 1.0, b = 0.0, c = 0.0, d = 1.0;

    static RayTransferMatrix identity() { return {1.0, 0.0, 0.0, 1.0}; }

    double det() const { return a * d - b * c; }

    bool finite() const {
        return std::isfinite(a) && std::isfinite(b) && std::isfinite(c) && std::isfinite(d);
    }
};

/// Free propagation over distance d: [[1,d],[0,1]].
inline RayTransferMatrix translate(double d) {
    if (!std::isfinite(d)) throw NumericError("translate: distance must be finite");
    return {1.0, d, 0.0, 1.0};
}

/// Thin-lens refraction with focal length f: [[1,0],[-1/f,1]].
/// f = +infinity denotes a flat element and yields the identity; f = 0 is
/// rejected.
inline RayTransferMatrix refract(double f) {
    if (f == 0.0) throw NumericError("refract: focal length must be nonzero");
    if (std::isnan(f)) throw NumericError("refract: focal length must not be NaN");
    if (std::isinf(f)) return RayTransferMatrix::identity();
    return {1.0, 0.0, -1.0 / f, 1.0};
}

/// Re-parameterization placing the angular coordinate on the pupil plane a
/// distance d behind the current plane: [[1,0],[1,-d]].
inline RayTransferMatrix reparam(double d) {
    if (!std::isfinite(d)) throw NumericError("reparam: distance must be finite");
    return {1.0, 0.0, 1.0, -d};
}

/// Matrix product m2*m1: m1 is applied first.
inline RayTransferMatrix compose(const RayTransferMatrix& m2, const RayTransferMatrix& m1) {
    return {m2.a * m1.a + m2.b * m1.c, m2.a * m1.b + m2.b * m1.d,
            m2.c * m1.a + m2.d * m1.c, m2.c * m1.b + m2.d * m1.d};
}

inline RayTransferMatrix operator*(const RayTransferMatrix& m2, const RayTransferMatrix& m1) {
    return compose(m2, m1);
}

/// Display-to-retina transport for an eye focused at distance 1/(1/f - 1/d_e):
/// reparam(d_e) * translate(d_e) * refract(f) * translate(d_o).
/// Input: (position on display plane, slope). Output: (position on retina,
/// intercept on the pupil plane). det = -d_e.
inline RayTransferMatrix eye_transport(double d_o, double f, double d_e) {
    if (!(d_o > 0.0)) throw NumericError("eye_transport: display distance must be positive");
    if (!(d_e > 0.0)) throw NumericError("eye_transport: retina depth must be positive");
    return reparam(d_e) * translate(d_e) * refract(f) * translate(d_o);
}

inline RayTransferMatrix invert(const RayTransferMatrix& m) {
    double det = m.det();
    if (std::abs(det) <= 1e-15)
        throw SingularMatrixError("invert: matrix is singular within tolerance", det);
    return {m.d / det, -m.b / det, -m.c / det, m.a / det};
}

inline RayCoord apply(const RayTransferMatrix& m, const RayCoord& r) {
    return {m.a * r.x + m.b * r.u, m.c * r.x + m.d * r.u};
}

}  // namespace vcd
