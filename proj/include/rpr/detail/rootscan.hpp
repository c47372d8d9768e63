#pragma once

#include <cmath>
#include <vector>

namespace rpr::detail {

struct RootHit {
    double x = 0.0;
    double f = 0.0;
    bool converged = false;  // |f| dropped below tol before the width floor
};

/// Bisection inside a strict sign-change bracket. The integrand may be NaN at
/// isolated points (degenerate cells); such midpoints are sidestepped by
/// probing off-center. Terminates on |f| < tol or width < width_floor.
template <class F>
RootHit bisect_root(F&& f, double lo, double flo, double hi, double fhi,
                    double tol, double width_floor, int max_iters = 120) {
    RootHit hit;
    for (int i = 0; i < max_iters; ++i) {
        const double width = hi - lo;
        if (width < width_floor) break;
        double mid = 0.5 * (lo + hi);
        double fm = f(mid);
        if (std::isnan(fm)) {
            mid = lo + 0.4 * width;
            fm = f(mid);
        }
        if (std::isnan(fm)) {
            mid = lo + 0.6 * width;
            fm = f(mid);
        }
        if (std::isnan(fm)) break;  // bracket pinched onto a degeneracy
        if (fm == 0.0) {
            hit.x = mid;
            hit.f = 0.0;
            hit.converged = true;
            return hit;
        }
        if ((flo < 0.0) != (fm < 0.0)) {
            hi = mid;
            fhi = fm;
        } else {
            lo = mid;
            flo = fm;
        }
        if (std::abs(fm) < tol) {
            hit.x = mid;
            hit.f = fm;
            hit.converged = true;
            return hit;
        }
    }
    // Width floor reached: report the endpoint with the smaller residual.
    if (std::abs(flo) <= std::abs(fhi)) {
        hit.x = lo;
        hit.f = flo;
    } else {
        hit.x = hi;
        hit.f = fhi;
    }
    hit.converged = std::abs(hit.f) < tol;
    return hit;
}

/// Scan one grid interval for roots of f. NaN endpoints (degenerate linear
/// system, zero-length legs) trigger recursive subdivision rather than a
/// failure; intervals still NaN at full depth are counted and skipped.
template <class F>
void scan_interval(F&& f, double a0, double f0, double a1, double f1, int depth,
                   double tol, double width_floor, std::vector<RootHit>& roots,
                   long* degenerate_count) {
    const bool nan0 = std::isnan(f0), nan1 = std::isnan(f1);
    if (nan0 || nan1) {
        if (depth <= 0) {
            if (degenerate_count) ++*degenerate_count;
            return;
        }
        const double mid = 0.5 * (a0 + a1);
        const double fm = f(mid);
        scan_interval(f, a0, f0, mid, fm, depth - 1, tol, width_floor, roots, degenerate_count);
        scan_interval(f, mid, fm, a1, f1, depth - 1, tol, width_floor, roots, degenerate_count);
        return;
    }
    if (f0 == 0.0) {
        roots.push_back({a0, 0.0, true});
        return;  // a1 == 0 is picked up as the next interval's left endpoint
    }
    if ((f0 < 0.0) != (f1 < 0.0))
        roots.push_back(bisect_root(f, a0, f0, a1, f1, tol, width_floor));
}

/// Minimize |f| on [lo, hi] by golden-section search; used for tangential
/// roots that touch zero without a sign change.
template <class F>
RootHit min_abs_search(F&& f, double lo, double hi, double tol, int max_iters = 200) {
    const double gr = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    auto absf = [&](double x) {
        const double v = f(x);
        return std::isnan(v) ? HUGE_VAL : std::abs(v);
    };
    double f1 = absf(x1), f2 = absf(x2);
    for (int i = 0; i < max_iters && (b - a) > 1e-14; ++i) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = absf(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = absf(x2);
        }
    }
    RootHit hit;
    hit.x = (f1 <= f2) ? x1 : x2;
    hit.f = f(hit.x);
    hit.converged = std::abs(hit.f) < tol;
    return hit;
}

}  // namespace rpr::detail
