#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "rpr/detail/rootscan.hpp"
#include "rpr/errors.hpp"
#include "rpr/model.hpp"

namespace rpr {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 v) { return std::sqrt(v.x * v.x + v.y * v.y); }

/// Platform configuration: position (x, y) of the operational point B1 and
/// platform orientation alpha.
struct Pose {
    double x = 0.0;
    double y = 0.0;
    double alpha = 0.0;
};

/// Actuated leg lengths (rho1, rho2, rho3) — a point of the joint space.
struct JointVector {
    double rho1 = 0.0;
    double rho2 = 0.0;
    double rho3 = 0.0;

    double operator[](int i) const { return i == 0 ? rho1 : (i == 1 ? rho2 : rho3); }
    double& operator[](int i) {
        switch (i) {
            case 0: return rho1;
            case 1: return rho2;
            default: return rho3;
        }
    }
};

/// Leg-axis directions measured from the global x-axis; defined only for
/// legs longer than kLenEpsilon.
struct LegAngles {
    double theta1 = 0.0;
    double theta2 = 0.0;
    double theta3 = 0.0;

    double operator[](int i) const { return i == 0 ? theta1 : (i == 1 ? theta2 : theta3); }
};

/// Leg-axis line a*x + b*y + c = 0 with (a, b) unit-normalized.
struct LegLine {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
};

struct AttachmentPoints {
    Vec2 b1, b2, b3;
};

inline Vec2 base_anchor(const ManipulatorGeometry& g, int i) {
    switch (i) {
        case 0: return {0.0, 0.0};
        case 1: return {g.a2x, 0.0};
        default: return {g.a3x, g.a3y};
    }
}

/// Platform attachment points for a pose:
///   B1 = (x, y),
///   B2 = B1 + d1 (cos a, sin a),
///   B3 = B1 + d3 (cos(a+beta), sin(a+beta)).
inline AttachmentPoints attachment_points(const ManipulatorGeometry& g, const Pose& p) {
    AttachmentPoints pts;
    pts.b1 = {p.x, p.y};
    pts.b2 = pts.b1 + Vec2{g.d1 * std::cos(p.alpha), g.d1 * std::sin(p.alpha)};
    pts.b3 = pts.b1 + Vec2{g.d3 * std::cos(p.alpha + g.beta), g.d3 * std::sin(p.alpha + g.beta)};
    return pts;
}

/// rho_i = |B_i - A_i|. Always defined.
inline JointVector inverse_kinematics(const ManipulatorGeometry& g, const Pose& p) {
    const auto pts = attachment_points(g, p);
    return {norm(pts.b1 - base_anchor(g, 0)),
            norm(pts.b2 - base_anchor(g, 1)),
            norm(pts.b3 - base_anchor(g, 2))};
}

/// theta_i = angle of (B_i - A_i) from the global x-axis, in [0, 2*pi).
/// Refused when any leg is shorter than kLenEpsilon.
inline LegAngles leg_angles(const ManipulatorGeometry& g, const Pose& p) {
    const auto pts = attachment_points(g, p);
    const Vec2 e[3] = {pts.b1 - base_anchor(g, 0), pts.b2 - base_anchor(g, 1),
                       pts.b3 - base_anchor(g, 2)};
    double theta[3];
    for (int i = 0; i < 3; ++i) {
        if (norm(e[i]) <= kLenEpsilon)
            throw ValidationError("leg_angles: degenerate leg " + std::to_string(i + 1) +
                                  " (length below eps, direction undefined)");
        theta[i] = wrap_angle(std::atan2(e[i].y, e[i].x));
    }
    return {theta[0], theta[1], theta[2]};
}

/// Line through A_i with direction (cos theta_i, sin theta_i), written as
/// a*x + b*y + c = 0 with (a, b) = (sin theta_i, -cos theta_i).
inline std::array<LegLine, 3> leg_lines(const ManipulatorGeometry& g, const LegAngles& t) {
    std::array<LegLine, 3> lines;
    for (int i = 0; i < 3; ++i) {
        const Vec2 anchor = base_anchor(g, i);
        const double a = std::sin(t[i]);
        const double b = -std::cos(t[i]);
        lines[i] = {a, b, -(a * anchor.x + b * anchor.y)};
    }
    return lines;
}

inline double line_det(const LegLine& l1, const LegLine& l2, const LegLine& l3) {
    return l1.a * (l2.b * l3.c - l3.b * l2.c) - l1.b * (l2.a * l3.c - l3.a * l2.c) +
           l1.c * (l2.a * l3.b - l3.a * l2.b);
}

/// Determinant of the 3x3 matrix of unit-normalized leg-line coefficients.
/// Zero exactly when the three leg axes meet at a common point, possibly at
/// infinity — the parallel singularity condition. With the (sin, -cos)
/// normalization this equals the closed-form singularity residual
/// a2x s2 s31 + (a3x s3 - a3y c3) s12 identically (normalization factor 1).
inline double leg_lines_det(const ManipulatorGeometry& g, const LegAngles& t) {
    const auto lines = leg_lines(g, t);
    return line_det(lines[0], lines[1], lines[2]);
}

/// Residuals of the four scalar constraint equations tying a pose to a joint
/// vector (leg directions come from the pose, lengths from q):
///   a2x + r2 c2 - r1 c1 - d1 cos a = 0
///   r2 s2 - r1 s1 - d1 sin a       = 0
///   a3x + r3 c3 - r1 c1 - d3 cos(a+beta) = 0
///   a3y + r3 s3 - r1 s1 - d3 sin(a+beta) = 0
inline std::array<double, 4> constraint_residuals(const ManipulatorGeometry& g, const Pose& p,
                                                  const JointVector& q) {
    const auto pts = attachment_points(g, p);
    auto unit = [](Vec2 e) {
        const double n = norm(e);
        // Zero-length leg: any direction represents it; the residual is then
        // dominated by the corresponding rho.
        return n > kLenEpsilon ? Vec2{e.x / n, e.y / n} : Vec2{1.0, 0.0};
    };
    const Vec2 u1 = unit(pts.b1 - base_anchor(g, 0));
    const Vec2 u2 = unit(pts.b2 - base_anchor(g, 1));
    const Vec2 u3 = unit(pts.b3 - base_anchor(g, 2));
    const double ca = std::cos(p.alpha), sa = std::sin(p.alpha);
    const double cab = std::cos(p.alpha + g.beta), sab = std::sin(p.alpha + g.beta);
    return {g.a2x + q.rho2 * u2.x - q.rho1 * u1.x - g.d1 * ca,
            q.rho2 * u2.y - q.rho1 * u1.y - g.d1 * sa,
            g.a3x + q.rho3 * u3.x - q.rho1 * u1.x - g.d3 * cab,
            g.a3y + q.rho3 * u3.y - q.rho1 * u1.y - g.d3 * sab};
}

struct DkpOptions {
    int alpha_grid = 3600;        // samples of alpha over [0, 2*pi)
    double residual_tol = 1e-12;  // refinement target on the sweep residual
    double dedup_radius = 1e-7;   // roots closer than this in alpha are merged
};

struct DkpDiagnostics {
    long merged_roots = 0;      // tangency-like duplicates removed (multiplicity 2)
    long degenerate_cells = 0;  // grid cells lost to a parallel difference system
    long rejected = 0;          // refined roots failing the constraint residual check
};

/// Direct kinematics by alpha-sweep.
///
/// For fixed alpha the three circle constraints |B_i - A_i| = rho_i reduce, by
/// subtracting the first from the other two, to two equations linear in
/// B1 = (x, y):
///     2 n1 . B1 = rho2^2 - rho1^2 - |n1|^2,   n1 = d1 u(alpha)      - A2
///     2 n2 . B1 = rho3^2 - rho1^2 - |n2|^2,   n2 = d3 u(alpha+beta) - A3
/// with u(t) = (cos t, sin t). Solving them leaves a single sweep residual
///     g(alpha) = |B1(alpha)|^2 - rho1^2
/// whose roots over [0, 2*pi) are the assembly modes (at most 6). The sweep
/// brackets sign changes of g on a grid, closes the circle through the
/// wraparound interval, and refines each bracket by bisection. Isolated
/// alpha values where the two difference lines are parallel make the linear
/// solve degenerate; those intervals are subdivided rather than failed.
/// Near-coalescing solution pairs (joint vectors close to the singular
/// surface) are resolved by rescanning |g| local minima at subresolution;
/// a pair coalescing exactly on an all-parallel singularity coincides with
/// the degenerate alpha of the elimination and cannot be represented.
///
/// The grid tables (n1, n2, their squared norms and the system determinant)
/// depend only on geometry, so one engine serves many joint vectors.
class DkpEngine {
public:
    explicit DkpEngine(const ManipulatorGeometry& g, DkpOptions opts = {})
        : geom_(g), opts_(opts) {
        if (opts_.alpha_grid < 8) throw ValidationError("direct_kinematics: alpha_grid must be >= 8");
        if (!(opts_.residual_tol > 0.0)) throw ValidationError("direct_kinematics: residual_tol must be positive");
        if (!(opts_.dedup_radius >= 0.0)) throw ValidationError("direct_kinematics: dedup_radius must be >= 0");
        const int n = opts_.alpha_grid;
        nodes_.resize(n + 1);
        for (int k = 0; k <= n; ++k) nodes_[k] = make_node(kTwoPi * k / n);
    }

    const ManipulatorGeometry& geometry() const { return geom_; }
    const DkpOptions& options() const { return opts_; }

    /// Sweep residual g(alpha); NaN where the difference system is degenerate.
    double sweep_residual(const JointVector& q, double alpha) const {
        double x, y;
        return eval(make_node(alpha), q, x, y);
    }

    std::vector<Pose> solve(const JointVector& q, DkpDiagnostics* diag = nullptr) const {
        if (!(q.rho1 >= 0.0) || !(q.rho2 >= 0.0) || !(q.rho3 >= 0.0))
            throw ValidationError("direct_kinematics: negative leg length");

        DkpDiagnostics local;
        DkpDiagnostics& d = diag ? *diag : local;

        auto f = [&](double alpha) {
            double x, y;
            return eval(make_node(alpha), q, x, y);
        };

        const int n = opts_.alpha_grid;
        std::vector<double> values(n + 1);
        for (int k = 0; k <= n; ++k) {
            double x, y;
            values[k] = eval(nodes_[k], q, x, y);
        }
        // g is periodic; rounding makes g(2*pi) differ from g(0) by ulps,
        // which can swallow a root sitting exactly on the seam
        values[n] = values[0];

        std::vector<detail::RootHit> hits;
        for (int k = 0; k < n; ++k)
            detail::scan_interval(f, nodes_[k].alpha, values[k], nodes_[k + 1].alpha, values[k + 1],
                                  6, opts_.residual_tol, 1e-13, hits, &d.degenerate_cells);

        // Two assembly modes closer than the grid step leave no sign change:
        // |g| dips near zero at a local minimum instead. Rescan such intervals
        // at 64x subresolution so near-coalescing solution pairs are resolved.
        const double step = kTwoPi / n;
        for (int k = 0; k < n; ++k) {
            const double gk = values[k];
            const double gp = values[(k + n - 1) % n];
            const double gn = values[k + 1];
            if (std::isnan(gk) || std::isnan(gp) || std::isnan(gn)) continue;
            if (std::abs(gk) > std::abs(gp) || std::abs(gk) > std::abs(gn)) continue;
            if ((gp < 0.0) != (gk < 0.0) || (gk < 0.0) != (gn < 0.0)) continue;
            const double slope = (std::abs(gn - gk) + std::abs(gk - gp)) / (2.0 * step);
            const double scale = std::max(1.0, q.rho1 * q.rho1);
            if (std::abs(gk) > 2.0 * step * slope && std::abs(gk) > 1e-6 * scale) continue;
            const double lo = nodes_[k].alpha - step, hi = nodes_[k].alpha + step;
            constexpr int sub = 64;
            const std::size_t before = hits.size();
            double a_prev = lo, f_prev = f(lo);
            for (int s = 1; s <= sub; ++s) {
                const double a_cur = lo + (hi - lo) * s / sub;
                const double f_cur = f(a_cur);
                detail::scan_interval(f, a_prev, f_prev, a_cur, f_cur, 2, opts_.residual_tol,
                                      1e-13, hits, &d.degenerate_cells);
                a_prev = a_cur;
                f_prev = f_cur;
            }
            if (hits.size() == before) {
                // |g| touches zero without crossing: two assembly modes
                // coalescing exactly at this alpha (a singular configuration)
                auto probe = detail::min_abs_search(f, lo, hi, opts_.residual_tol);
                if (probe.converged) {
                    hits.push_back(probe);
                    ++d.merged_roots;
                }
            }
        }
        for (auto& h : hits) h.x = wrap_angle(h.x);

        // Merge roots closer than the dedup radius in alpha (circularly);
        // a merged pair is a tangency reported with multiplicity 2.
        std::sort(hits.begin(), hits.end(),
                  [](const detail::RootHit& a, const detail::RootHit& b) { return a.x < b.x; });
        std::vector<detail::RootHit> roots;
        for (const auto& h : hits) {
            if (!roots.empty() && h.x - roots.back().x < opts_.dedup_radius) {
                ++d.merged_roots;
                if (std::abs(h.f) < std::abs(roots.back().f)) roots.back() = h;
                continue;
            }
            roots.push_back(h);
        }
        if (roots.size() > 1 && (kTwoPi - roots.back().x) + roots.front().x < opts_.dedup_radius) {
            ++d.merged_roots;
            if (std::abs(roots.back().f) < std::abs(roots.front().f)) roots.front() = roots.back();
            roots.pop_back();
        }

        std::vector<Pose> poses;
        for (const auto& r : roots) {
            double x, y;
            const double g_res = eval(make_node(r.x), q, x, y);
            if (std::isnan(g_res)) {
                ++d.degenerate_cells;
                continue;
            }
            Pose p{x, y, wrap_angle(r.x)};
            const auto res = constraint_residuals(geom_, p, q);
            const double worst = std::max({std::abs(res[0]), std::abs(res[1]), std::abs(res[2]),
                                           std::abs(res[3])});
            if (worst > kConstraintTol) {
                ++d.rejected;
                continue;
            }
            poses.push_back(p);
        }
        std::sort(poses.begin(), poses.end(), [](const Pose& a, const Pose& b) { return a.alpha < b.alpha; });
        if (poses.size() > 6)
            throw ValidationError("direct_kinematics: more than 6 assembly modes found; "
                                  "root deduplication failed");
        return poses;
    }

    static constexpr double kConstraintTol = 1e-8;

private:
    struct AlphaNode {
        double alpha;
        double n1x, n1y, n2x, n2y;
        double n1sq, n2sq;
        double det;  // cross(n1, n2)
    };

    AlphaNode make_node(double alpha) const {
        AlphaNode nd;
        nd.alpha = alpha;
        nd.n1x = geom_.d1 * std::cos(alpha) - geom_.a2x;
        nd.n1y = geom_.d1 * std::sin(alpha);
        nd.n2x = geom_.d3 * std::cos(alpha + geom_.beta) - geom_.a3x;
        nd.n2y = geom_.d3 * std::sin(alpha + geom_.beta) - geom_.a3y;
        nd.n1sq = nd.n1x * nd.n1x + nd.n1y * nd.n1y;
        nd.n2sq = nd.n2x * nd.n2x + nd.n2y * nd.n2y;
        nd.det = nd.n1x * nd.n2y - nd.n1y * nd.n2x;
        return nd;
    }

    double eval(const AlphaNode& nd, const JointVector& q, double& x, double& y) const {
        const double scale = std::max(1.0, std::sqrt(nd.n1sq * nd.n2sq));
        if (std::abs(nd.det) < 1e-14 * scale) {
            x = y = std::numeric_limits<double>::quiet_NaN();
            return std::numeric_limits<double>::quiet_NaN();
        }
        const double r1sq = q.rho1 * q.rho1;
        const double rhs1 = 0.5 * (q.rho2 * q.rho2 - r1sq - nd.n1sq);
        const double rhs2 = 0.5 * (q.rho3 * q.rho3 - r1sq - nd.n2sq);
        x = (rhs1 * nd.n2y - rhs2 * nd.n1y) / nd.det;
        y = (nd.n1x * rhs2 - nd.n2x * rhs1) / nd.det;
        return x * x + y * y - r1sq;
    }

    ManipulatorGeometry geom_;
    DkpOptions opts_;
    std::vector<AlphaNode> nodes_;
};

/// All real assembly modes for a joint vector (0 to 6 poses, sorted by alpha).
/// Unreachable joint vectors yield an empty list, not an error.
inline std::vector<Pose> direct_kinematics(const ManipulatorGeometry& g, const JointVector& q,
                                           const DkpOptions& opts = {},
                                           DkpDiagnostics* diag = nullptr) {
    return DkpEngine(g, opts).solve(q, diag);
}

}  // namespace rpr
