#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "rpr/boxsearch.hpp"
#include "rpr/kinematics.hpp"
#include "rpr/parallel.hpp"
#include "rpr/singularity.hpp"

namespace rpr {

/// One direct-kinematics image of a sampled joint vector, with the normalized
/// leg-line determinant and the aspect label (its sign).
struct WorkspaceSample {
    Pose pose{};
    JointVector source_q{};
    double det = 0.0;
    int aspect = 0;  // +1 or -1
};

struct CubeImageOptions {
    int n_per_axis = 25;
    double det_floor = 1e-8;    // |det| at or below this is singular: claim violation
    double near_floor = 1e-3;   // diagnostics-only near-singular flag
    DkpOptions dkp{};
    unsigned threads = 0;
};

struct CubeImageDiagnostics {
    std::size_t solutions = 0;      // DKP solutions across the whole grid
    std::size_t near_singular = 0;  // |det| < near_floor
    std::vector<WorkspaceSample> violations;  // |det| <= det_floor, kept out of the groups
};

struct CubeImage {
    std::vector<WorkspaceSample> positive;
    std::vector<WorkspaceSample> negative;
    CubeImageDiagnostics diag{};
};

/// Images through direct kinematics of the margined box, sampled on a regular
/// n^3 joint grid and grouped by determinant sign. Samples at or below the
/// determinant floor contradict the box's singularity-free claim; they are
/// reported in the diagnostics rather than silently dropped. Output is sorted
/// by (source_q lexicographic, alpha) for any thread count.
inline CubeImage cube_image(const ManipulatorGeometry& g, const SingularityFreeBox& box,
                            const CubeImageOptions& opts = {}) {
    if (opts.n_per_axis < 2) throw ValidationError("cube_image: n_per_axis must be >= 2");
    for (int i = 0; i < 3; ++i)
        if (!(box.limit_hi[i] > box.limit_lo[i]))
            throw ValidationError("cube_image: box limits are empty on some axis");

    const int n = opts.n_per_axis;
    const DkpEngine engine(g, opts.dkp);

    const std::size_t cells = static_cast<std::size_t>(n) * n * n;
    std::vector<std::vector<WorkspaceSample>> per_cell(cells);

    auto axis_value = [&](int axis, int k) {
        return box.limit_lo[axis] +
               (box.limit_hi[axis] - box.limit_lo[axis]) * static_cast<double>(k) /
                   static_cast<double>(n - 1);
    };

    parallel_for(cells, opts.threads, [&](std::size_t cell) {
        const int i = static_cast<int>(cell / (static_cast<std::size_t>(n) * n));
        const int j = static_cast<int>((cell / n) % n);
        const int k = static_cast<int>(cell % n);
        const JointVector q{axis_value(0, i), axis_value(1, j), axis_value(2, k)};
        const auto poses = engine.solve(q);
        auto& bucket = per_cell[cell];
        bucket.reserve(poses.size());
        for (const Pose& p : poses) {
            WorkspaceSample s;
            s.pose = p;
            s.source_q = q;
            try {
                s.det = leg_lines_det(g, leg_angles(g, p));
            } catch (const ValidationError&) {
                s.det = 0.0;  // degenerate leg: cannot certify, treat as violation
            }
            s.aspect = (s.det > 0.0) ? +1 : -1;
            bucket.push_back(s);
        }
    });

    CubeImage image;
    for (const auto& bucket : per_cell) {
        for (const auto& s : bucket) {
            ++image.diag.solutions;
            if (std::abs(s.det) <= opts.det_floor) {
                image.diag.violations.push_back(s);
                continue;
            }
            if (std::abs(s.det) < opts.near_floor) ++image.diag.near_singular;
            (s.aspect > 0 ? image.positive : image.negative).push_back(s);
        }
    }
    return image;
}

struct PlanarPoint {
    double x = 0.0;
    double y = 0.0;
    int aspect = 0;
};

/// Drop alpha, keeping the aspect label. Never changes cardinality.
inline std::vector<PlanarPoint> project_xy(const std::vector<WorkspaceSample>& samples) {
    std::vector<PlanarPoint> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back({s.pose.x, s.pose.y, s.aspect});
    return out;
}

/// Distance between poses used by the adjacency check: max of the coordinate
/// gaps, with the angular gap taken on the circle.
inline double pose_distance(const Pose& a, const Pose& b) {
    double da = std::abs(wrap_angle(a.alpha) - wrap_angle(b.alpha));
    da = std::min(da, kTwoPi - da);
    return std::max({std::abs(a.x - b.x), std::abs(a.y - b.y), da});
}

/// Connected-component sizes (descending) of one aspect group under grid
/// adjacency: two samples connect when their source joint vectors are
/// neighbors on the sampling grid and their poses are within pose_tol.
/// This is the fallback aspect labeling for geometries where determinant
/// sign alone cannot separate components.
inline std::vector<std::size_t> component_sizes(const std::vector<WorkspaceSample>& group,
                                                const SingularityFreeBox& box, int n_per_axis,
                                                double pose_tol = 0.5) {
    const int n = n_per_axis;
    auto cell_index = [&](const JointVector& q, int axis) {
        const double span = box.limit_hi[axis] - box.limit_lo[axis];
        return static_cast<int>(std::lround((q[axis] - box.limit_lo[axis]) / span * (n - 1)));
    };

    std::vector<int> parent(group.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };

    // bucket samples by grid cell
    std::vector<std::vector<int>> cell_samples(static_cast<std::size_t>(n) * n * n);
    for (std::size_t s = 0; s < group.size(); ++s) {
        const auto& q = group[s].source_q;
        const std::size_t cell =
            (static_cast<std::size_t>(cell_index(q, 0)) * n + cell_index(q, 1)) * n +
            cell_index(q, 2);
        cell_samples[cell].push_back(static_cast<int>(s));
    }

    const int strides[3] = {n * n, n, 1};
    for (std::size_t cell = 0; cell < cell_samples.size(); ++cell) {
        if (cell_samples[cell].empty()) continue;
        const int i = static_cast<int>(cell / (static_cast<std::size_t>(n) * n));
        const int j = static_cast<int>((cell / n) % n);
        const int k = static_cast<int>(cell % n);
        const int ijk[3] = {i, j, k};
        for (int axis = 0; axis < 3; ++axis) {
            if (ijk[axis] + 1 >= n) continue;
            const std::size_t other = cell + strides[axis];
            for (int a : cell_samples[cell]) {
                for (int b : cell_samples[other]) {
                    if (pose_distance(group[a].pose, group[b].pose) <= pose_tol) {
                        const int ra = find(a), rb = find(b);
                        if (ra != rb) parent[ra] = rb;
                    }
                }
            }
        }
    }

    std::vector<std::size_t> count(group.size(), 0);
    for (std::size_t s = 0; s < group.size(); ++s) ++count[find(static_cast<int>(s))];
    std::vector<std::size_t> sizes;
    for (auto c : count)
        if (c > 0) sizes.push_back(c);
    std::sort(sizes.rbegin(), sizes.rend());
    return sizes;
}

struct ScanRegion {
    double x0 = 0.0, x1 = 0.0;
    double y0 = 0.0, y1 = 0.0;
};

/// Workspace singularity curve at fixed alpha: the singularity residual is
/// evaluated on a (resolution x resolution) node grid over the region and its
/// zero set is extracted per grid edge by linear interpolation of the sign
/// change. Nodes with a degenerate leg are skipped.
inline std::vector<Vec2> workspace_singularity_scan(const ManipulatorGeometry& g,
                                                    const ScanRegion& region, double alpha,
                                                    int resolution) {
    if (resolution < 16) throw ValidationError("workspace scan: resolution must be >= 16");
    if (!(region.x1 > region.x0) || !(region.y1 > region.y0))
        throw ValidationError("workspace scan: empty region");

    const int n = resolution;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> value(static_cast<std::size_t>(n) * n, nan);

    auto node_x = [&](int i) { return region.x0 + (region.x1 - region.x0) * i / double(n - 1); };
    auto node_y = [&](int j) { return region.y0 + (region.y1 - region.y0) * j / double(n - 1); };

    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const Pose p{node_x(i), node_y(j), alpha};
            try {
                value[static_cast<std::size_t>(j) * n + i] = singularity_residual(g, leg_angles(g, p));
            } catch (const ValidationError&) {
                // degenerate leg at this node; leave NaN
            }
        }
    }

    std::vector<Vec2> points;
    auto emit_edge = [&](double xa, double ya, double fa, double xb, double yb, double fb) {
        if (std::isnan(fa) || std::isnan(fb)) return;
        if (fa == 0.0) {
            points.push_back({xa, ya});
            return;
        }
        if ((fa < 0.0) == (fb < 0.0)) return;
        const double t = fa / (fa - fb);
        points.push_back({xa + t * (xb - xa), ya + t * (yb - ya)});
    };

    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const double f = value[static_cast<std::size_t>(j) * n + i];
            if (i + 1 < n)
                emit_edge(node_x(i), node_y(j), f, node_x(i + 1), node_y(j),
                          value[static_cast<std::size_t>(j) * n + i + 1]);
            if (j + 1 < n)
                emit_edge(node_x(i), node_y(j), f, node_x(i), node_y(j + 1),
                          value[(static_cast<std::size_t>(j) + 1) * n + i]);
        }
    }
    return points;
}

// ---------------------------------------------------------------------------
// CSV / PLY writers (byte-deterministic).

inline constexpr const char* kImageCsvHeader = "x,y,alpha,rho1,rho2,rho3,det,aspect";

namespace detail {
inline void append_image_rows(std::string& out, const std::vector<WorkspaceSample>& samples) {
    for (const auto& s : samples) {
        out += fmt_sig(s.pose.x, 12);
        out += ',';
        out += fmt_sig(s.pose.y, 12);
        out += ',';
        out += fmt_sig(s.pose.alpha, 12);
        out += ',';
        out += fmt_sig(s.source_q.rho1, 12);
        out += ',';
        out += fmt_sig(s.source_q.rho2, 12);
        out += ',';
        out += fmt_sig(s.source_q.rho3, 12);
        out += ',';
        out += fmt_sig(s.det, 12);
        out += ',';
        out += (s.aspect > 0 ? '+' : '-');
        out += '\n';
    }
}
}  // namespace detail

inline std::string image_to_csv(const CubeImage& image) {
    std::string out(kImageCsvHeader);
    out += '\n';
    detail::append_image_rows(out, image.positive);
    detail::append_image_rows(out, image.negative);
    return out;
}

/// PLY of the (x, y, alpha) image cloud for 3D viewing.
inline std::string image_to_ply(const CubeImage& image) {
    const std::size_t count = image.positive.size() + image.negative.size();
    if (count == 0) throw ValidationError("image_to_ply: empty image");
    std::string out = "ply\nformat ascii 1.0\ncomment workspace image of a joint-space cube\n"
                      "comment x=x y=y z=alpha\nelement vertex ";
    out += std::to_string(count);
    out += "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
    auto rows = [&](const std::vector<WorkspaceSample>& samples) {
        for (const auto& s : samples) {
            out += detail::fmt_sig(s.pose.x, 12);
            out += ' ';
            out += detail::fmt_sig(s.pose.y, 12);
            out += ' ';
            out += detail::fmt_sig(s.pose.alpha, 12);
            out += '\n';
        }
    };
    rows(image.positive);
    rows(image.negative);
    return out;
}

inline std::string scan_to_csv(const std::vector<Vec2>& points, double alpha) {
    std::string out = "x,y,alpha\n";
    for (const auto& p : points) {
        out += detail::fmt_sig(p.x, 12);
        out += ',';
        out += detail::fmt_sig(p.y, 12);
        out += ',';
        out += detail::fmt_sig(alpha, 12);
        out += '\n';
    }
    return out;
}

}  // namespace rpr
