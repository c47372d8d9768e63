#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <string_view>

#include "rpr/detail/format.hpp"
#include "rpr/errors.hpp"

namespace rpr {

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Legs shorter than this have no defined direction; dependent computations refuse them.
inline constexpr double kLenEpsilon = 1e-9;

/// Normalize an angle to [0, 2*pi).
inline double wrap_angle(double a) {
    double w = std::fmod(a, kTwoPi);
    if (w < 0.0) w += kTwoPi;
    if (w >= kTwoPi) w = 0.0;
    return w;
}

/// Planar 3-RPR manipulator: base revolute joints A1, A2, A3 and a rigid
/// triangular platform B1B2B3 carried by three actuated extensible legs
/// Ai-Bi. The frame is centered at A1 with the x-axis through A2, so
/// A1 = (0, 0), A2 = (a2x, 0), A3 = (a3x, a3y).
///
/// The platform triangle is given by its edge lengths:
///   d1 = |B1B2|, d2 = |B2B3|, d3 = |B1B3|.
/// beta is the derived interior angle at B1, measured counterclockwise from
/// B1B2 to B1B3 (beta > 0 places B3 on the upper side of the B1B2 edge; the
/// mirrored platform yields a mirrored joint-space surface).
struct ManipulatorGeometry {
    double a2x = 0.0;
    double a3x = 0.0;
    double a3y = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
    double d3 = 0.0;
    double beta = 0.0;  // derived from d1, d2, d3
};

/// Interior platform angle at B1 from the law of cosines:
/// beta = arccos((d1^2 + d3^2 - d2^2) / (2 d1 d3)), in [0, pi].
/// Collinear platforms (weak triangle inequality) map to the boundary values
/// 0 and pi; anything beyond a 1e-12 cosine tolerance is rejected.
inline double platform_angle(double d1, double d2, double d3) {
    if (!(d1 > 0.0) || !(d2 > 0.0) || !(d3 > 0.0))
        throw ValidationError("platform_angle: non-positive edge length");
    const double c = (d1 * d1 + d3 * d3 - d2 * d2) / (2.0 * d1 * d3);
    constexpr double cos_tol = 1e-12;
    if (c > 1.0 + cos_tol || c < -1.0 - cos_tol)
        throw ValidationError("platform_angle: degenerate platform, triangle inequality violated");
    return std::acos(std::clamp(c, -1.0, 1.0));
}

namespace detail {
inline void require_finite(double v, const char* field) {
    if (!std::isfinite(v)) throw ValidationError(std::string("geometry: non-finite value for ") + field);
}
}  // namespace detail

/// Validate raw parameters and derive beta. Degenerate (collinear) platforms
/// are rejected here even though platform_angle tolerates them.
inline ManipulatorGeometry make_geometry(double a2x, double a3x, double a3y,
                                         double d1, double d2, double d3) {
    detail::require_finite(a2x, "a2x");
    detail::require_finite(a3x, "a3x");
    detail::require_finite(a3y, "a3y");
    detail::require_finite(d1, "d1");
    detail::require_finite(d2, "d2");
    detail::require_finite(d3, "d3");
    if (!(d1 > 0.0)) throw ValidationError("geometry: non-positive edge d1");
    if (!(d2 > 0.0)) throw ValidationError("geometry: non-positive edge d2");
    if (!(d3 > 0.0)) throw ValidationError("geometry: non-positive edge d3");
    if (!(a2x > 0.0)) throw ValidationError("geometry: a2x must be positive");
    if (!(d2 < d1 + d3)) throw ValidationError("geometry: triangle inequality violated, d2 >= d1 + d3");
    if (!(d1 < d2 + d3)) throw ValidationError("geometry: triangle inequality violated, d1 >= d2 + d3");
    if (!(d3 < d1 + d2)) throw ValidationError("geometry: triangle inequality violated, d3 >= d1 + d2");

    ManipulatorGeometry g;
    g.a2x = a2x;
    g.a3x = a3x;
    g.a3y = a3y;
    g.d1 = d1;
    g.d2 = d2;
    g.d3 = d3;
    g.beta = platform_angle(d1, d2, d3);
    return g;
}

/// Parse a geometry config: line-oriented `key = value` text with `#`
/// comments, requiring exactly the keys a2x, a3x, a3y, d1, d2, d3
/// (lengths in one consistent arbitrary unit). Deterministic: identical
/// text yields bit-identical geometry.
inline ManipulatorGeometry load_geometry(std::string_view config_text) {
    static const std::set<std::string> known = {"a2x", "a3x", "a3y", "d1", "d2", "d3"};
    double values[6] = {};
    bool seen[6] = {};
    const char* order[6] = {"a2x", "a3x", "a3y", "d1", "d2", "d3"};

    for (const auto& [key, value] : detail::parse_key_values(config_text)) {
        if (!known.count(key)) throw ValidationError("geometry config: unknown key '" + key + "'");
        for (int i = 0; i < 6; ++i) {
            if (key == order[i]) {
                if (seen[i]) throw ValidationError("geometry config: duplicate key '" + key + "'");
                values[i] = detail::parse_double(value, "geometry config key '" + key + "'");
                seen[i] = true;
            }
        }
    }
    for (int i = 0; i < 6; ++i)
        if (!seen[i]) throw ValidationError(std::string("geometry config: missing key '") + order[i] + "'");

    return make_geometry(values[0], values[1], values[2], values[3], values[4], values[5]);
}

/// Stable hash of the six defining parameters, used to tie derived artifacts
/// (clouds, box reports) back to the geometry that produced them.
inline std::string geometry_fingerprint(const ManipulatorGeometry& g) {
    std::string canon;
    for (double v : {g.a2x, g.a3x, g.a3y, g.d1, g.d2, g.d3}) {
        canon += detail::fmt_sig(v, 17);
        canon += ',';
    }
    return detail::to_hex(detail::fnv1a64(canon));
}

}  // namespace rpr
