#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "rpr/detail/format.hpp"
#include "rpr/errors.hpp"
#include "rpr/kinematics.hpp"
#include "rpr/singularity.hpp"

namespace rpr {

/// L-infinity distance: max of per-joint absolute differences.
inline double chebyshev_distance(const JointVector& p, const JointVector& q) {
    return std::max({std::abs(p.rho1 - q.rho1), std::abs(p.rho2 - q.rho2),
                     std::abs(p.rho3 - q.rho3)});
}

/// Axis-aligned joint-space region the cloud was sampled over. Clearances are
/// clamped to the distance to this boundary: beyond it the cloud says nothing,
/// so a "singularity-free" claim must not extend there.
struct JointBounds {
    JointVector lo{0.0, 0.0, 0.0};
    JointVector hi{0.0, 0.0, 0.0};

    bool valid() const {
        for (int i = 0; i < 3; ++i)
            if (!(hi[i] > lo[i])) return false;
        return true;
    }
    bool contains(const JointVector& p) const {
        for (int i = 0; i < 3; ++i)
            if (p[i] < lo[i] || p[i] > hi[i]) return false;
        return true;
    }
    bool strictly_contains(const JointVector& p) const {
        for (int i = 0; i < 3; ++i)
            if (!(p[i] > lo[i]) || !(p[i] < hi[i])) return false;
        return true;
    }
    /// Chebyshev distance from an interior point to the nearest face.
    double boundary_distance(const JointVector& p) const {
        double d = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 3; ++i) d = std::min({d, p[i] - lo[i], hi[i] - p[i]});
        return d;
    }
};

struct ClearanceWitness {
    bool boundary = false;
    SingularPoint point{};  // meaningful when !boundary
    int axis = -1;          // meaningful when boundary: 0..2
    int side = 0;           // -1 low face, +1 high face
};

struct Clearance {
    double d = std::numeric_limits<double>::infinity();
    ClearanceWitness witness{};
};

/// Smallest Chebyshev distance from a center to any sampled singular point,
/// clamped by the distance to the domain boundary. Brute force over the whole
/// cloud; ties between the cloud and boundary terms resolve to the cloud
/// witness.
inline Clearance min_clearance(const SingularityCloud& cloud, const JointVector& center,
                               const JointBounds& domain) {
    if (!domain.valid()) throw ValidationError("min_clearance: invalid domain bounds");
    if (!domain.contains(center)) throw ValidationError("min_clearance: center outside domain");

    Clearance best;
    for (const auto& slice : cloud.slices) {
        const double d1 = std::abs(center.rho1 - slice.rho1);
        if (d1 >= best.d) continue;  // whole slice is at least this far
        for (const auto& p : slice.points) {
            const double d2 = std::abs(center.rho2 - p.rho2);
            if (d2 >= best.d) continue;
            const double d3 = std::abs(center.rho3 - p.rho3);
            const double d = std::max({d1, d2, d3});
            if (d < best.d) {
                best.d = d;
                best.witness.boundary = false;
                best.witness.point = p;
            }
        }
    }
    for (int i = 0; i < 3; ++i) {
        const double dlo = center[i] - domain.lo[i];
        if (dlo < best.d) best = {dlo, {true, {}, i, -1}};
        const double dhi = domain.hi[i] - center[i];
        if (dhi < best.d) best = {dhi, {true, {}, i, +1}};
    }
    return best;
}

struct HJParams {
    double initial_step = 1.0;
    double reduction = 0.5;
    double min_step = 0.125;
    int max_iters = 10000;
};

inline void validate(const HJParams& p) {
    if (!(p.min_step > 0.0)) throw ValidationError("hooke_jeeves: min_step must be positive");
    if (!(p.initial_step >= p.min_step))
        throw ValidationError("hooke_jeeves: initial_step must be >= min_step");
    if (!(p.reduction > 0.0 && p.reduction < 1.0))
        throw ValidationError("hooke_jeeves: reduction must lie in (0, 1)");
    if (p.max_iters <= 0) throw ValidationError("hooke_jeeves: max_iters must be positive");
}

struct BoxQuery {
    JointVector center0{};
    double security = 0.1;
    JointBounds domain{};
    HJParams optimizer{};
};

inline void validate(const BoxQuery& q) {
    validate(q.optimizer);
    if (!q.domain.valid()) throw ValidationError("box query: invalid domain bounds");
    if (!q.domain.strictly_contains(q.center0))
        throw ValidationError("box query: center0 must lie strictly inside the domain");
    if (!(q.security >= 0.0)) throw ValidationError("box query: security must be >= 0");
}

struct HJTraceEntry {
    int iter = 0;
    double step = 0.0;
    JointVector center{};
    double objective = 0.0;
};

struct HJResult {
    JointVector center{};
    double d_min = 0.0;
    ClearanceWitness witness{};
    std::vector<HJTraceEntry> trace;  // accepted base points, objective non-decreasing
    long evaluations = 0;
    int iterations = 0;
};

/// Pattern search maximizing the Chebyshev clearance.
///
/// Exploratory moves try +step then -step along each joint axis in the fixed
/// order rho1, rho2, rho3, accepting the first strict improvement per axis;
/// a successful exploration is followed by pattern moves through the improved
/// point. Failure shrinks the step by the reduction factor; the search stops
/// when the step falls below min_step or the iteration budget runs out. Ties
/// count as failures, so the walk cannot cycle, and every accepted base point
/// improves the objective.
inline HJResult hooke_jeeves_maximize(const SingularityCloud& cloud, const BoxQuery& query) {
    validate(query);

    HJResult result;
    auto f = [&](const JointVector& c) -> double {
        ++result.evaluations;
        if (!query.domain.contains(c)) return -1.0;  // never beats a valid clearance
        return min_clearance(cloud, c, query.domain).d;
    };

    auto explore = [&](JointVector x, double fx, double step) {
        for (int axis = 0; axis < 3; ++axis) {
            for (double delta : {step, -step}) {
                JointVector cand = x;
                cand[axis] += delta;
                const double fc = f(cand);
                if (fc > fx) {
                    x = cand;
                    fx = fc;
                    break;
                }
            }
        }
        return std::pair<JointVector, double>{x, fx};
    };

    const HJParams& p = query.optimizer;
    JointVector base = query.center0;
    double fbase = f(base);
    double step = p.initial_step;
    int iter = 0;
    result.trace.push_back({iter, step, base, fbase});

    while (step >= p.min_step && iter < p.max_iters) {
        ++iter;
        auto [x, fx] = explore(base, fbase, step);
        if (!(fx > fbase)) {
            step *= p.reduction;
            continue;
        }
        while (true) {
            const JointVector prev = base;
            base = x;
            fbase = fx;
            result.trace.push_back({iter, step, base, fbase});
            if (iter >= p.max_iters) break;
            ++iter;
            JointVector pattern = base;
            for (int i = 0; i < 3; ++i) pattern[i] += base[i] - prev[i];
            const double fpat = f(pattern);
            auto [y, fy] = explore(pattern, fpat, step);
            if (fy > fbase) {
                x = y;
                fx = fy;
            } else {
                break;
            }
        }
    }

    result.center = base;
    result.d_min = fbase;
    result.iterations = iter;
    result.witness = min_clearance(cloud, base, query.domain).witness;
    return result;
}

/// Optimized singularity-free cube and the joint limits derived from it.
/// The cube of edge 2*d_min touches the nearest singular sample; the limits
/// retreat by the security margin s:
///   rho_i in [center_i - (d_min - s), center_i + (d_min - s)].
struct SingularityFreeBox {
    JointVector center{};
    double d_min = 0.0;    // optimized Chebyshev clearance
    double security = 0.0;
    double edge = 0.0;     // 2 * d_min
    JointVector limit_lo{};
    JointVector limit_hi{};
    ClearanceWitness witness{};
    std::string cloud_fingerprint;
    std::string geometry_fingerprint;

    double d_min_optimizer = 0.0;  // pattern-search objective before any refinement trim
    bool refined = false;          // a refinement sweep was run against this box
    bool refine_converged = false; // the final refinement pass confirmed the claim

    // provenance
    SweepSpec sweep{};  // spec of the cloud the box was optimized against
    JointVector center0{};
    JointBounds domain{};
    HJParams optimizer{};
    int hj_iterations = 0;
    long hj_evaluations = 0;
    std::size_t hj_accepted = 0;

    double half_width() const { return d_min - security; }
};

inline SingularityFreeBox build_box(const SingularityCloud& cloud, const BoxQuery& query,
                                    HJResult* optimizer_result = nullptr) {
    validate(query);
    HJResult opt = hooke_jeeves_maximize(cloud, query);
    if (optimizer_result) *optimizer_result = opt;
    if (!(opt.d_min > query.security))
        throw ValidationError("build_box: box degenerate, security margin " +
                              detail::fmt_sig(query.security, 6) + " swallows the optimized clearance " +
                              detail::fmt_sig(opt.d_min, 6));

    SingularityFreeBox box;
    box.center = opt.center;
    box.d_min = opt.d_min;
    box.d_min_optimizer = opt.d_min;
    box.security = query.security;
    box.edge = 2.0 * opt.d_min;
    for (int i = 0; i < 3; ++i) {
        box.limit_lo[i] = opt.center[i] - (opt.d_min - query.security);
        box.limit_hi[i] = opt.center[i] + (opt.d_min - query.security);
    }
    box.witness = opt.witness;
    box.cloud_fingerprint = cloud_fingerprint(cloud);
    box.geometry_fingerprint = cloud.geometry_fingerprint;
    box.sweep = cloud.spec;
    box.center0 = query.center0;
    box.domain = query.domain;
    box.optimizer = query.optimizer;
    box.hj_iterations = opt.iterations;
    box.hj_evaluations = opt.evaluations;
    box.hj_accepted = opt.trace.size();

    // Exact by construction; asserted anyway.
    const Clearance check = min_clearance(cloud, box.center, query.domain);
    if (check.d != opt.d_min)
        throw std::logic_error("build_box: clearance at optimized center does not reproduce d_min");
    return box;
}

/// Verify a box against a denser surface sampling and trim it if needed.
///
/// Chebyshev clearance to sampled slices overestimates the distance to the
/// continuous surface wherever the surface drifts sideways between slices,
/// so an optimized cube can overclaim by up to the inter-slice drift. This
/// stage re-slices the margined box's rho1 range with the given (denser)
/// slice settings and half step, re-measures the clearance at the optimized
/// center, and shrinks d_min to the refined value. Trimming moves the
/// margined range, so the sweep repeats until a pass confirms the claim
/// (normally one or two rounds).
inline SingularityFreeBox refine_box(const ManipulatorGeometry& g, SingularityFreeBox box,
                                     const SliceSpec& refined_slice, double rho1_step,
                                     unsigned threads = 0, int max_rounds = 5) {
    if (!(rho1_step > 0.0)) throw ValidationError("refine_box: rho1_step must be positive");
    box.refined = true;
    box.refine_converged = false;
    for (int round = 0; round < max_rounds; ++round) {
        // Pad by the security margin rounded up to whole steps: that covers
        // every point that could bind the clearance while keeping the slice
        // lattice phase-aligned with a sweep of the margined range alone.
        const double pad = std::ceil(box.security / rho1_step - 1e-9) * rho1_step;
        SweepSpec ref;
        ref.rho1_start = std::max({0.0, box.domain.lo.rho1, box.limit_lo.rho1 - pad});
        ref.rho1_end = std::min(box.domain.hi.rho1, box.limit_hi.rho1 + pad);
        ref.rho1_step = rho1_step;
        ref.slice = refined_slice;
        if (!(ref.rho1_end > ref.rho1_start)) break;  // degenerate range, nothing to check
        const auto refined = sweep_surface(g, ref, threads);
        const Clearance c = min_clearance(refined, box.center, box.domain);
        if (c.d >= box.d_min - 1e-12) {
            box.refine_converged = true;
            break;
        }
        box.d_min = c.d;
        box.edge = 2.0 * c.d;
        box.witness = c.witness;
        if (!(box.d_min > box.security))
            throw ValidationError("refine_box: refined clearance " + detail::fmt_sig(box.d_min, 6) +
                                  " no longer exceeds the security margin");
        for (int i = 0; i < 3; ++i) {
            box.limit_lo[i] = box.center[i] - (box.d_min - box.security);
            box.limit_hi[i] = box.center[i] + (box.d_min - box.security);
        }
    }
    return box;
}

// ---------------------------------------------------------------------------
// Box report: `key = value` structured text, exact-round-trip numbers.

namespace detail {
inline std::string joints_str(const JointVector& q) {
    return fmt_exact(q.rho1) + " " + fmt_exact(q.rho2) + " " + fmt_exact(q.rho3);
}
inline std::vector<double> parse_number_list(const std::string& s, std::size_t count,
                                             const std::string& what) {
    auto parts = split(trim(s), ' ');
    std::vector<double> values;
    for (auto& t : parts)
        if (!trim(t).empty()) values.push_back(parse_double(trim(t), what));
    if (values.size() != count)
        throw ValidationError(what + ": expected " + std::to_string(count) + " numbers");
    return values;
}

inline JointVector parse_joints(const std::string& s, const std::string& what) {
    const auto v = parse_number_list(s, 3, what);
    return {v[0], v[1], v[2]};
}
}  // namespace detail

inline std::string box_report_text(const SingularityFreeBox& box) {
    using detail::fmt_exact;
    std::string out;
    out += "# singularity-free joint-space cube\n";
    out += "geometry_fingerprint = " + (box.geometry_fingerprint.empty() ? "unknown" : box.geometry_fingerprint) + "\n";
    out += "cloud_fingerprint = " + box.cloud_fingerprint + "\n";
    out += "domain_lo = " + detail::joints_str(box.domain.lo) + "\n";
    out += "domain_hi = " + detail::joints_str(box.domain.hi) + "\n";
    out += "sweep_rho1 = " + fmt_exact(box.sweep.rho1_start) + " " + fmt_exact(box.sweep.rho1_end) +
           " " + fmt_exact(box.sweep.rho1_step) + "\n";
    // grid 0 marks a cloud loaded from CSV, where the slicing grids are unknown
    out += "sweep_grids = " + std::to_string(box.sweep.slice.n_theta1) + " " +
           std::to_string(box.sweep.slice.n_alpha) + "\n";
    out += "sweep_rho_bounds = " + fmt_exact(box.sweep.slice.rho_min) + " " +
           fmt_exact(box.sweep.slice.rho_max) + "\n";
    out += "q0 = " + detail::joints_str(box.center0) + "\n";
    out += "security = " + fmt_exact(box.security) + "\n";
    out += "hj_initial_step = " + fmt_exact(box.optimizer.initial_step) + "\n";
    out += "hj_reduction = " + fmt_exact(box.optimizer.reduction) + "\n";
    out += "hj_min_step = " + fmt_exact(box.optimizer.min_step) + "\n";
    out += "hj_max_iters = " + std::to_string(box.optimizer.max_iters) + "\n";
    out += "hj_iterations = " + std::to_string(box.hj_iterations) + "\n";
    out += "hj_evaluations = " + std::to_string(box.hj_evaluations) + "\n";
    out += "hj_accepted = " + std::to_string(box.hj_accepted) + "\n";
    out += "center = " + detail::joints_str(box.center) + "\n";
    out += "d_min = " + fmt_exact(box.d_min) + "\n";
    out += "d_min_optimizer = " + fmt_exact(box.d_min_optimizer) + "\n";
    out += "refined = " + std::string(box.refined ? "1" : "0") + "\n";
    out += "refine_converged = " + std::string(box.refine_converged ? "1" : "0") + "\n";
    out += "half_width = " + fmt_exact(box.half_width()) + "\n";
    out += "edge = " + fmt_exact(box.edge) + "\n";
    out += "limit_lo = " + detail::joints_str(box.limit_lo) + "\n";
    out += "limit_hi = " + detail::joints_str(box.limit_hi) + "\n";
    if (box.witness.boundary) {
        const char* axes[3] = {"rho1", "rho2", "rho3"};
        out += std::string("witness = boundary ") + axes[box.witness.axis] + " " +
               (box.witness.side < 0 ? "lo" : "hi") + "\n";
    } else {
        const auto& w = box.witness.point;
        out += "witness = point " + fmt_exact(w.rho1) + " " + fmt_exact(w.rho2) + " " +
               fmt_exact(w.rho3) + " " + fmt_exact(w.alpha) + " " + fmt_exact(w.theta1) + "\n";
    }
    return out;
}

inline SingularityFreeBox parse_box_report(const std::string& text) {
    SingularityFreeBox box;
    bool have_center = false, have_lo = false, have_hi = false, have_d = false;
    for (const auto& [key, value] : detail::parse_key_values(text)) {
        if (key == "geometry_fingerprint") box.geometry_fingerprint = (value == "unknown") ? "" : value;
        else if (key == "cloud_fingerprint") box.cloud_fingerprint = value;
        else if (key == "domain_lo") box.domain.lo = detail::parse_joints(value, "box report domain_lo");
        else if (key == "domain_hi") box.domain.hi = detail::parse_joints(value, "box report domain_hi");
        else if (key == "sweep_rho1") {
            const auto v = detail::parse_number_list(value, 3, "box report sweep_rho1");
            box.sweep.rho1_start = v[0];
            box.sweep.rho1_end = v[1];
            box.sweep.rho1_step = v[2];
        }
        else if (key == "sweep_grids") {
            const auto v = detail::parse_number_list(value, 2, "box report sweep_grids");
            box.sweep.slice.n_theta1 = static_cast<int>(v[0]);
            box.sweep.slice.n_alpha = static_cast<int>(v[1]);
        }
        else if (key == "sweep_rho_bounds") {
            const auto v = detail::parse_number_list(value, 2, "box report sweep_rho_bounds");
            box.sweep.slice.rho_min = v[0];
            box.sweep.slice.rho_max = v[1];
        }
        else if (key == "q0") box.center0 = detail::parse_joints(value, "box report q0");
        else if (key == "security") box.security = detail::parse_double(value, "box report security");
        else if (key == "hj_initial_step") box.optimizer.initial_step = detail::parse_double(value, "box report hj_initial_step");
        else if (key == "hj_reduction") box.optimizer.reduction = detail::parse_double(value, "box report hj_reduction");
        else if (key == "hj_min_step") box.optimizer.min_step = detail::parse_double(value, "box report hj_min_step");
        else if (key == "hj_max_iters") box.optimizer.max_iters = static_cast<int>(detail::parse_double(value, "box report hj_max_iters"));
        else if (key == "hj_iterations") box.hj_iterations = static_cast<int>(detail::parse_double(value, "box report hj_iterations"));
        else if (key == "hj_evaluations") box.hj_evaluations = static_cast<long>(detail::parse_double(value, "box report hj_evaluations"));
        else if (key == "hj_accepted") box.hj_accepted = static_cast<std::size_t>(detail::parse_double(value, "box report hj_accepted"));
        else if (key == "center") { box.center = detail::parse_joints(value, "box report center"); have_center = true; }
        else if (key == "d_min") { box.d_min = detail::parse_double(value, "box report d_min"); have_d = true; }
        else if (key == "d_min_optimizer") box.d_min_optimizer = detail::parse_double(value, "box report d_min_optimizer");
        else if (key == "refined") box.refined = detail::parse_double(value, "box report refined") != 0.0;
        else if (key == "refine_converged") box.refine_converged = detail::parse_double(value, "box report refine_converged") != 0.0;
        else if (key == "half_width") { /* derived */ }
        else if (key == "edge") box.edge = detail::parse_double(value, "box report edge");
        else if (key == "limit_lo") { box.limit_lo = detail::parse_joints(value, "box report limit_lo"); have_lo = true; }
        else if (key == "limit_hi") { box.limit_hi = detail::parse_joints(value, "box report limit_hi"); have_hi = true; }
        else if (key == "witness") {
            auto tokens = detail::split(detail::trim(value), ' ');
            std::vector<std::string> t;
            for (auto& s : tokens)
                if (!detail::trim(s).empty()) t.push_back(detail::trim(s));
            if (t.empty()) throw ValidationError("box report: empty witness");
            if (t[0] == "boundary") {
                if (t.size() != 3) throw ValidationError("box report: malformed boundary witness");
                box.witness.boundary = true;
                const char* axes[3] = {"rho1", "rho2", "rho3"};
                box.witness.axis = -1;
                for (int i = 0; i < 3; ++i)
                    if (t[1] == axes[i]) box.witness.axis = i;
                if (box.witness.axis < 0) throw ValidationError("box report: unknown witness axis " + t[1]);
                box.witness.side = (t[2] == "lo") ? -1 : +1;
            } else if (t[0] == "point") {
                if (t.size() != 6) throw ValidationError("box report: malformed point witness");
                box.witness.boundary = false;
                box.witness.point.rho1 = detail::parse_double(t[1], "witness rho1");
                box.witness.point.rho2 = detail::parse_double(t[2], "witness rho2");
                box.witness.point.rho3 = detail::parse_double(t[3], "witness rho3");
                box.witness.point.alpha = detail::parse_double(t[4], "witness alpha");
                box.witness.point.theta1 = detail::parse_double(t[5], "witness theta1");
            } else {
                throw ValidationError("box report: unknown witness kind '" + t[0] + "'");
            }
        } else {
            throw ValidationError("box report: unknown key '" + key + "'");
        }
    }
    if (!have_center || !have_lo || !have_hi || !have_d)
        throw ValidationError("box report: missing required fields (center, d_min, limit_lo, limit_hi)");
    return box;
}

}  // namespace rpr
