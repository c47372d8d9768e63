#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "rpr/detail/format.hpp"
#include "rpr/detail/rootscan.hpp"
#include "rpr/kinematics.hpp"
#include "rpr/model.hpp"
#include "rpr/parallel.hpp"

namespace rpr {

/// Parallel-singularity residual in the leg angles:
///   a2x s2 s31 + (a3x s3 - a3y c3) s12
/// with s_i = sin(theta_i), c_i = cos(theta_i), s_ij = sin(theta_i - theta_j).
/// Vanishes exactly when the three leg axes are concurrent or parallel, and
/// equals leg_lines_det for the unit (sin, -cos) line normalization.
inline double singularity_residual(const ManipulatorGeometry& g, const LegAngles& t) {
    const double s1 = std::sin(t.theta1), c1 = std::cos(t.theta1);
    const double s2 = std::sin(t.theta2), c2 = std::cos(t.theta2);
    const double s3 = std::sin(t.theta3), c3 = std::cos(t.theta3);
    const double s31 = s3 * c1 - c3 * s1;
    const double s12 = s1 * c2 - c1 * s2;
    return g.a2x * s2 * s31 + (g.a3x * s3 - g.a3y * c3) * s12;
}

struct LegPair {
    double rho2 = 0.0;
    double rho3 = 0.0;
};

namespace detail {

/// Trig of the slice-plane variables, hoisted out of the inner scan loop.
struct SliceTrig {
    double ca, sa;    // cos/sin alpha
    double cab, sab;  // cos/sin (alpha + beta)
};

inline SliceTrig slice_trig(const ManipulatorGeometry& g, double alpha) {
    return {std::cos(alpha), std::sin(alpha), std::cos(alpha + g.beta), std::sin(alpha + g.beta)};
}

/// Core of the reduced singularity equation: with B1 = rho1 (c1, s1), the
/// directions of legs 2 and 3 come out of the constraint equations as
/// (B2 - A2)/rho2 and (B3 - A3)/rho3 and are substituted into the residual.
/// Returns NaN (and the raw lengths) when a leg collapses below kLenEpsilon.
inline double reduced_eval(const ManipulatorGeometry& g, double rho1, const SliceTrig& t,
                           double c1, double s1, LegPair& legs) {
    const double b1x = rho1 * c1, b1y = rho1 * s1;
    const double e2x = b1x + g.d1 * t.ca - g.a2x;
    const double e2y = b1y + g.d1 * t.sa;
    const double e3x = b1x + g.d3 * t.cab - g.a3x;
    const double e3y = b1y + g.d3 * t.sab - g.a3y;
    const double r2 = std::sqrt(e2x * e2x + e2y * e2y);
    const double r3 = std::sqrt(e3x * e3x + e3y * e3y);
    legs.rho2 = r2;
    legs.rho3 = r3;
    if (r2 <= kLenEpsilon || r3 <= kLenEpsilon) return std::numeric_limits<double>::quiet_NaN();
    const double c2 = e2x / r2, s2 = e2y / r2;
    const double c3 = e3x / r3, s3 = e3y / r3;
    const double s31 = s3 * c1 - c3 * s1;
    const double s12 = s1 * c2 - c1 * s2;
    return g.a2x * s2 * s31 + (g.a3x * s3 - g.a3y * c3) * s12;
}

}  // namespace detail

/// Leg lengths reached from the reduced coordinates (rho1, alpha, theta1):
/// rho2 = |B1 + d1 u(alpha) - A2|, rho3 = |B1 + d3 u(alpha+beta) - A3| with
/// B1 = rho1 (cos theta1, sin theta1).
inline LegPair leg_lengths_from(const ManipulatorGeometry& g, double rho1, double alpha,
                                double theta1) {
    LegPair legs;
    detail::reduced_eval(g, rho1, detail::slice_trig(g, alpha), std::cos(theta1), std::sin(theta1),
                         legs);
    return legs;
}

/// Singularity residual rewritten as a function of (rho1, alpha, theta1).
/// Sign-continuous away from degenerate legs; refuses configurations where
/// rho2 or rho3 collapses (the slice solver skips those cells instead).
inline double reduced_residual(const ManipulatorGeometry& g, double rho1, double alpha,
                               double theta1) {
    LegPair legs;
    const double r = detail::reduced_eval(g, rho1, detail::slice_trig(g, alpha), std::cos(theta1),
                                          std::sin(theta1), legs);
    if (std::isnan(r))
        throw ValidationError("reduced_residual: degenerate leg (rho2 or rho3 below eps)");
    return r;
}

/// One sampled joint-space singular point with its generating root in the
/// reduced (rho1, alpha, theta1) space.
struct SingularPoint {
    double rho1 = 0.0;
    double rho2 = 0.0;
    double rho3 = 0.0;
    double alpha = 0.0;
    double theta1 = 0.0;

    JointVector joints() const { return {rho1, rho2, rho3}; }
};

/// Scan orientation for the slice solver. Theta1Outer walks theta1 grid
/// lines and root-finds in alpha; AlphaOuter is the transposed scan, which
/// resolves curve branches running tangent to the alpha lines; Both merges
/// the two passes for the densest, direction-unbiased sampling.
enum class ScanMode { kTheta1Outer, kAlphaOuter, kBoth };

struct SliceSpec {
    double rho1 = 0.0;
    int n_theta1 = 720;
    int n_alpha = 720;
    double tol_root = 1e-10;
    double rho_min = 1e-9;  // filter on rho2 and rho3
    double rho_max = 50.0;
    ScanMode scan_mode = ScanMode::kTheta1Outer;
};

struct SliceDiagnostics {
    long degenerate_cells = 0;  // cells skipped because a leg collapsed
    long unconverged = 0;       // brackets that never reached tol_root
    long tangency_probes = 0;   // near-zero samples probed without a sign change
    long tangency_roots = 0;    // probes that produced a root
};

inline void validate(const SliceSpec& s) {
    if (!(s.rho1 >= 0.0)) throw ValidationError("slice: rho1 must be >= 0");
    if (s.n_theta1 < 8 || s.n_alpha < 8) throw ValidationError("slice: grid counts must be >= 8");
    if (!(s.tol_root > 0.0)) throw ValidationError("slice: tol_root must be positive");
    if (!(s.rho_min >= 0.0) || !(s.rho_max > s.rho_min))
        throw ValidationError("slice: need rho_max > rho_min >= 0");
}

namespace detail {

/// One scan pass at a fixed orientation; transposed = true walks alpha grid
/// lines and root-finds in theta1.
inline std::vector<SingularPoint> scan_slice(const ManipulatorGeometry& g, const SliceSpec& spec,
                                             bool transposed, SliceDiagnostics& d) {
    const int n_scan = transposed ? spec.n_alpha : spec.n_theta1;  // outer lines
    const int n_root = transposed ? spec.n_theta1 : spec.n_alpha;  // root variable
    const double rho_lo = std::max(spec.rho_min, kLenEpsilon);

    // Trig tables of the root variable's closed grid.
    std::vector<double> grid(n_root + 1);
    for (int k = 0; k <= n_root; ++k) grid[k] = kTwoPi * k / n_root;

    std::vector<SingularPoint> out;
    std::vector<double> values(n_root + 1);
    std::vector<detail::RootHit> hits;

    for (int line = 0; line < n_scan; ++line) {
        const double fixed = kTwoPi * line / n_scan;

        // residual as a function of the root variable on this scan line
        double c1 = 0.0, s1 = 0.0;
        detail::SliceTrig trig{};
        if (!transposed) {
            c1 = std::cos(fixed);
            s1 = std::sin(fixed);
        } else {
            trig = detail::slice_trig(g, fixed);
        }
        auto f = [&](double v) {
            LegPair legs;
            return transposed
                       ? detail::reduced_eval(g, spec.rho1, trig, std::cos(v), std::sin(v), legs)
                       : detail::reduced_eval(g, spec.rho1, detail::slice_trig(g, v), c1, s1, legs);
        };

        for (int k = 0; k <= n_root; ++k) values[k] = f(grid[k]);
        // periodic closure: keep a seam-exact root from falling between the
        // rounding-mismatched values at 0 and 2*pi
        values[n_root] = values[0];

        hits.clear();
        for (int k = 0; k < n_root; ++k)
            detail::scan_interval(f, grid[k], values[k], grid[k + 1], values[k + 1], 4,
                                  spec.tol_root, 1e-12, hits, &d.degenerate_cells);

        // Tangential roots: a near-zero sample with no sign change on either side.
        for (int k = 0; k < n_root; ++k) {
            const double v = values[k];
            if (std::isnan(v) || v == 0.0 || std::abs(v) >= 10.0 * spec.tol_root) continue;
            const double prev = values[k == 0 ? n_root - 1 : k - 1];
            const double next = values[k + 1];
            const bool change_before = !std::isnan(prev) && (prev < 0.0) != (v < 0.0);
            const bool change_after = !std::isnan(next) && (v < 0.0) != (next < 0.0);
            if (change_before || change_after) continue;
            ++d.tangency_probes;
            const double lo = grid[k] - kTwoPi / n_root;
            const double hi = grid[k] + kTwoPi / n_root;
            auto probe = detail::min_abs_search(f, lo, hi, spec.tol_root);
            if (probe.converged) {
                hits.push_back(probe);
                ++d.tangency_roots;
            }
        }

        for (auto& h : hits) h.x = wrap_angle(h.x);
        std::sort(hits.begin(), hits.end(),
                  [](const detail::RootHit& a, const detail::RootHit& b) { return a.x < b.x; });

        double last = -1.0;
        double first_kept = -1.0;
        for (const auto& h : hits) {
            if (!h.converged) {
                ++d.unconverged;
                continue;
            }
            const double root = h.x;
            // same root reached from adjacent brackets (or across the wraparound)
            if (last >= 0.0 && root - last < 1e-9) continue;
            if (first_kept >= 0.0 && (kTwoPi - root) + first_kept < 1e-9) continue;
            last = root;
            if (first_kept < 0.0) first_kept = root;

            LegPair legs;
            if (!transposed) {
                legs = leg_lengths_from(g, spec.rho1, root, fixed);
            } else {
                legs = leg_lengths_from(g, spec.rho1, fixed, root);
            }
            if (legs.rho2 < rho_lo || legs.rho2 > spec.rho_max) continue;
            if (legs.rho3 < rho_lo || legs.rho3 > spec.rho_max) continue;

            SingularPoint pt;
            pt.rho1 = spec.rho1;
            pt.rho2 = legs.rho2;
            pt.rho3 = legs.rho3;
            pt.alpha = transposed ? fixed : root;
            pt.theta1 = transposed ? root : fixed;
            out.push_back(pt);
        }
    }
    return out;
}

}  // namespace detail

/// Singular configurations in the (rho2, rho3) plane at fixed rho1.
///
/// Scan lines of the outer variable are walked over a closed grid of the
/// root variable (wraparound interval included); sign changes are bracketed
/// and refined by bisection until |residual| < tol_root or the bracket width
/// falls below 1e-12 rad. Grid samples lying within 10*tol_root of zero
/// without an adjacent sign change spawn a local |residual|-minimization
/// probe, which captures tangential roots. A root is emitted only when its
/// residual converged and (rho2, rho3) passes the bounds filter. Output is
/// sorted by (theta1, alpha) and fully deterministic.
inline std::vector<SingularPoint> compute_slice(const ManipulatorGeometry& g, const SliceSpec& spec,
                                                SliceDiagnostics* diag = nullptr) {
    validate(spec);
    SliceDiagnostics local;
    SliceDiagnostics& d = diag ? *diag : local;

    std::vector<SingularPoint> out;
    if (spec.scan_mode != ScanMode::kAlphaOuter)
        out = detail::scan_slice(g, spec, false, d);
    if (spec.scan_mode != ScanMode::kTheta1Outer) {
        auto transposed = detail::scan_slice(g, spec, true, d);
        out.insert(out.end(), transposed.begin(), transposed.end());
    }
    if (spec.scan_mode == ScanMode::kBoth) {
        std::sort(out.begin(), out.end(), [](const SingularPoint& a, const SingularPoint& b) {
            return a.theta1 != b.theta1 ? a.theta1 < b.theta1 : a.alpha < b.alpha;
        });
        // the two passes sample the same curve at different parameters; drop
        // only exact coincidences (curve passing through a grid-grid node)
        out.erase(std::unique(out.begin(), out.end(),
                              [](const SingularPoint& a, const SingularPoint& b) {
                                  return std::abs(a.theta1 - b.theta1) < 1e-9 &&
                                         std::abs(a.alpha - b.alpha) < 1e-9;
                              }),
                  out.end());
    }
    return out;
}

struct SweepSpec {
    double rho1_start = 0.0;
    double rho1_end = 50.0;
    double rho1_step = 0.5;
    SliceSpec slice{};  // template; rho1 is overwritten per slice
};

inline void validate(const SweepSpec& s) {
    if (!(s.rho1_start >= 0.0)) throw ValidationError("sweep: rho1_start must be >= 0");
    if (!(s.rho1_end > s.rho1_start)) throw ValidationError("sweep: rho1_end must exceed rho1_start");
    if (!(s.rho1_step > 0.0)) throw ValidationError("sweep: rho1_step must be positive");
    SliceSpec probe = s.slice;
    probe.rho1 = s.rho1_start;
    validate(probe);
}

inline int sweep_slice_count(const SweepSpec& s) {
    return static_cast<int>(std::floor((s.rho1_end - s.rho1_start) / s.rho1_step * (1.0 + 1e-12))) + 1;
}

struct SurfaceSlice {
    double rho1 = 0.0;
    std::vector<SingularPoint> points;
};

/// Sampled joint-space singularity surface: slices stacked along rho1.
struct SingularityCloud {
    std::vector<SurfaceSlice> slices;
    SweepSpec spec{};
    std::string geometry_fingerprint;

    std::size_t point_count() const {
        std::size_t n = 0;
        for (const auto& s : slices) n += s.points.size();
        return n;
    }
    bool empty() const { return point_count() == 0; }
};

/// Stack compute_slice over rho1 in {start, start+step, ...}. Slices are
/// independent and run as a parallel map; assembly by slice index keeps the
/// result identical for any thread count.
inline SingularityCloud sweep_surface(const ManipulatorGeometry& g, const SweepSpec& spec,
                                      unsigned threads = 0, SliceDiagnostics* diag = nullptr) {
    validate(spec);
    const int count = sweep_slice_count(spec);

    SingularityCloud cloud;
    cloud.spec = spec;
    cloud.geometry_fingerprint = geometry_fingerprint(g);
    cloud.slices.resize(count);

    std::vector<SliceDiagnostics> slice_diags(count);
    parallel_for(static_cast<std::size_t>(count), threads, [&](std::size_t i) {
        SliceSpec s = spec.slice;
        s.rho1 = spec.rho1_start + static_cast<double>(i) * spec.rho1_step;
        cloud.slices[i].rho1 = s.rho1;
        cloud.slices[i].points = compute_slice(g, s, &slice_diags[i]);
    });
    if (diag) {
        for (const auto& sd : slice_diags) {
            diag->degenerate_cells += sd.degenerate_cells;
            diag->unconverged += sd.unconverged;
            diag->tangency_probes += sd.tangency_probes;
            diag->tangency_roots += sd.tangency_roots;
        }
    }
    return cloud;
}

// ---------------------------------------------------------------------------
// Cloud serialization. CSV carries the generating coordinates alongside the
// joint-space point; PLY is a plain ASCII point cloud with (x, y, z) =
// (rho1, rho2, rho3). Both writers are byte-deterministic.

inline constexpr const char* kCloudCsvHeader = "rho1,rho2,rho3,alpha,theta1";

inline std::string cloud_to_csv(const SingularityCloud& cloud) {
    std::string out(kCloudCsvHeader);
    out += '\n';
    for (const auto& slice : cloud.slices) {
        for (const auto& p : slice.points) {
            out += detail::fmt_sig(p.rho1, 12);
            out += ',';
            out += detail::fmt_sig(p.rho2, 12);
            out += ',';
            out += detail::fmt_sig(p.rho3, 12);
            out += ',';
            out += detail::fmt_sig(p.alpha, 12);
            out += ',';
            out += detail::fmt_sig(p.theta1, 12);
            out += '\n';
        }
    }
    return out;
}

inline std::string cloud_to_ply(const SingularityCloud& cloud) {
    const std::size_t n = cloud.point_count();
    if (n == 0) throw ValidationError("cloud_to_ply: empty cloud");
    std::string out = "ply\nformat ascii 1.0\ncomment joint-space singularity point cloud\n"
                      "comment x=rho1 y=rho2 z=rho3\nelement vertex ";
    out += std::to_string(n);
    out += "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
    for (const auto& slice : cloud.slices) {
        for (const auto& p : slice.points) {
            out += detail::fmt_sig(p.rho1, 12);
            out += ' ';
            out += detail::fmt_sig(p.rho2, 12);
            out += ' ';
            out += detail::fmt_sig(p.rho3, 12);
            out += '\n';
        }
    }
    return out;
}

/// Parse a cloud CSV produced by cloud_to_csv. Rows are grouped into slices
/// on consecutive runs of equal rho1; slices must come out ascending. The
/// sweep spec is reconstructed from the slice values as far as possible.
inline SingularityCloud cloud_from_csv(const std::string& text) {
    SingularityCloud cloud;
    std::size_t pos = 0;
    bool first = true;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        std::string line = detail::trim(
            text.substr(pos, nl == std::string::npos ? nl : nl - pos));
        pos = (nl == std::string::npos) ? text.size() : nl + 1;
        if (line.empty()) continue;
        if (first) {
            if (line != kCloudCsvHeader)
                throw ValidationError("cloud CSV: unexpected header '" + line + "'");
            first = false;
            continue;
        }
        const auto fields = detail::split(line, ',');
        if (fields.size() != 5) throw ValidationError("cloud CSV: expected 5 columns, got row '" + line + "'");
        SingularPoint p;
        p.rho1 = detail::parse_double(fields[0], "cloud CSV rho1");
        p.rho2 = detail::parse_double(fields[1], "cloud CSV rho2");
        p.rho3 = detail::parse_double(fields[2], "cloud CSV rho3");
        p.alpha = detail::parse_double(fields[3], "cloud CSV alpha");
        p.theta1 = detail::parse_double(fields[4], "cloud CSV theta1");
        if (cloud.slices.empty() || cloud.slices.back().rho1 != p.rho1) {
            if (!cloud.slices.empty() && p.rho1 < cloud.slices.back().rho1)
                throw ValidationError("cloud CSV: slices not ascending in rho1");
            cloud.slices.push_back({p.rho1, {}});
        }
        cloud.slices.back().points.push_back(p);
    }
    if (first) throw ValidationError("cloud CSV: missing header");

    if (!cloud.slices.empty()) {
        cloud.spec.rho1_start = cloud.slices.front().rho1;
        cloud.spec.rho1_end = cloud.slices.back().rho1;
        cloud.spec.rho1_step = cloud.slices.size() > 1
                                   ? (cloud.spec.rho1_end - cloud.spec.rho1_start) /
                                         static_cast<double>(cloud.slices.size() - 1)
                                   : 0.0;
    }
    // the CSV does not carry the slicing grids or filter; zero marks unknown
    cloud.spec.slice.n_theta1 = 0;
    cloud.spec.slice.n_alpha = 0;
    cloud.spec.slice.rho_min = 0.0;
    cloud.spec.slice.rho_max = 0.0;
    return cloud;
}

/// Hash of the canonical CSV serialization; identifies the exact sampled cloud.
inline std::string cloud_fingerprint(const SingularityCloud& cloud) {
    return detail::to_hex(detail::fnv1a64(cloud_to_csv(cloud)));
}

}  // namespace rpr
