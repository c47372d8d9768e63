// rpr3 — joint-space singularity surfaces and singularity-free boxes for
// planar 3-RPR parallel manipulators.
//
// Subcommands: slice, sweep, maxbox, image, check. Every file-producing run
// also writes a manifest with all resolved parameters so results can be
// reproduced byte-for-byte. Exit codes: 0 success, 1 domain/validation
// error, 2 I/O error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "rpr/rpr.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw rpr::IoError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw rpr::IoError("read failure on '" + path + "'");
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    const fs::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(p.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw rpr::IoError("cannot write '" + path + "'");
    out << content;
    out.flush();
    if (!out) throw rpr::IoError("write failure on '" + path + "'");
}

rpr::ManipulatorGeometry load_geometry_file(const std::string& path) {
    return rpr::load_geometry(read_file(path));
}

std::vector<double> parse_numbers(const std::string& text, char sep, std::size_t expected,
                                  const std::string& what) {
    const auto parts = rpr::detail::split(text, sep);
    if (parts.size() != expected)
        throw rpr::ValidationError(what + ": expected " + std::to_string(expected) +
                                   " values separated by '" + std::string(1, sep) + "', got '" +
                                   text + "'");
    std::vector<double> out;
    for (const auto& p : parts) out.push_back(rpr::detail::parse_double(p, what));
    return out;
}

rpr::JointVector parse_joint_triple(const std::string& text, const std::string& what) {
    const auto v = parse_numbers(text, ',', 3, what);
    return {v[0], v[1], v[2]};
}

// "lo:hi" pairs, comma-separated per axis: "0:50,0:60,0:60"
rpr::JointBounds parse_domain(const std::string& text) {
    const auto axes = rpr::detail::split(text, ',');
    if (axes.size() != 3)
        throw rpr::ValidationError("domain: expected three lo:hi ranges, got '" + text + "'");
    rpr::JointBounds b;
    for (int i = 0; i < 3; ++i) {
        const auto v = parse_numbers(axes[i], ':', 2, "domain axis " + std::to_string(i + 1));
        b.lo[i] = v[0];
        b.hi[i] = v[1];
    }
    if (!b.valid()) throw rpr::ValidationError("domain: lo must be below hi on every axis");
    return b;
}

json tool_info() {
    return json{{"name", "rpr3"}, {"version", rpr::kVersion}};
}

void write_manifest(const std::string& out_prefix, json manifest) {
    manifest["tool"] = tool_info();
    write_file(out_prefix + ".manifest.json", manifest.dump(2) + "\n");
}

// ---------------------------------------------------------------------------

struct SliceArgs {
    std::string geometry_path;
    double rho1 = 0.0;
    int n_theta1 = 720;
    int n_alpha = 720;
    double tol_root = 1e-10;
    std::string rho_bounds = "0:50";
    std::string scan_mode = "theta1";
    std::string out;
    bool gnuplot = false;
};

rpr::ScanMode parse_scan_mode(const std::string& name) {
    if (name == "theta1") return rpr::ScanMode::kTheta1Outer;
    if (name == "alpha") return rpr::ScanMode::kAlphaOuter;
    if (name == "both") return rpr::ScanMode::kBoth;
    throw rpr::ValidationError("scan-mode: expected theta1, alpha or both, got '" + name + "'");
}

int run_slice(const SliceArgs& a) {
    const auto geom = load_geometry_file(a.geometry_path);
    const auto bounds = parse_numbers(a.rho_bounds, ':', 2, "rho-bounds");

    rpr::SliceSpec spec;
    spec.rho1 = a.rho1;
    spec.n_theta1 = a.n_theta1;
    spec.n_alpha = a.n_alpha;
    spec.tol_root = a.tol_root;
    spec.rho_min = bounds[0];
    spec.rho_max = bounds[1];
    spec.scan_mode = parse_scan_mode(a.scan_mode);

    rpr::SliceDiagnostics diag;
    rpr::SingularityCloud cloud;
    cloud.geometry_fingerprint = rpr::geometry_fingerprint(geom);
    cloud.spec.rho1_start = spec.rho1;
    cloud.spec.rho1_end = spec.rho1;
    cloud.spec.rho1_step = 0.0;
    cloud.spec.slice = spec;
    cloud.slices.push_back({spec.rho1, rpr::compute_slice(geom, spec, &diag)});

    write_file(a.out + ".csv", rpr::cloud_to_csv(cloud));
    if (a.gnuplot) {
        std::string gp = "set datafile separator ','\n"
                         "set xlabel 'rho2'\nset ylabel 'rho3'\nset size ratio -1\n"
                         "plot '" + a.out + ".csv' skip 1 using 2:3 with dots notitle\n"
                         "pause -1\n";
        write_file(a.out + ".gp", gp);
    }

    json manifest{
        {"command", "slice"},
        {"geometry_fingerprint", cloud.geometry_fingerprint},
        {"inputs", {{"geometry", a.geometry_path}}},
        {"outputs", {{"csv", a.out + ".csv"}}},
        {"parameters",
         {{"rho1", spec.rho1},
          {"n_theta1", spec.n_theta1},
          {"n_alpha", spec.n_alpha},
          {"tol_root", spec.tol_root},
          {"rho_min", spec.rho_min},
          {"rho_max", spec.rho_max},
          {"scan_mode", a.scan_mode}}},
        {"results",
         {{"points", cloud.point_count()},
          {"cloud_fingerprint", rpr::cloud_fingerprint(cloud)},
          {"degenerate_cells", diag.degenerate_cells},
          {"unconverged", diag.unconverged},
          {"tangency_probes", diag.tangency_probes}}}};
    write_manifest(a.out, manifest);

    std::cout << "slice rho1=" << spec.rho1 << ": " << cloud.point_count() << " points -> "
              << a.out << ".csv\n";
    return 0;
}

struct SweepArgs {
    std::string geometry_path;
    std::string rho1_range = "0:50:0.5";
    int n_theta1 = 720;
    int n_alpha = 720;
    double tol_root = 1e-10;
    // The rho2/rho3 filter reaches past the rho1 range so that clearance
    // queries near the far corner of the swept region stay cloud-determined.
    std::string rho_bounds = "0:60";
    // Both scan orientations by default: branches running tangent to the
    // alpha lines would otherwise be undersampled and inflate clearances.
    std::string scan_mode = "both";
    unsigned threads = 0;
    std::string out;
    bool gnuplot = false;
};

int run_sweep(const SweepArgs& a) {
    const auto geom = load_geometry_file(a.geometry_path);
    const auto range = parse_numbers(a.rho1_range, ':', 3, "rho1 range");
    const auto bounds = parse_numbers(a.rho_bounds, ':', 2, "rho-bounds");

    rpr::SweepSpec spec;
    spec.rho1_start = range[0];
    spec.rho1_end = range[1];
    spec.rho1_step = range[2];
    spec.slice.n_theta1 = a.n_theta1;
    spec.slice.n_alpha = a.n_alpha;
    spec.slice.tol_root = a.tol_root;
    spec.slice.rho_min = bounds[0];
    spec.slice.rho_max = bounds[1];
    spec.slice.scan_mode = parse_scan_mode(a.scan_mode);

    rpr::SliceDiagnostics diag;
    const auto cloud = rpr::sweep_surface(geom, spec, a.threads, &diag);

    write_file(a.out + ".csv", rpr::cloud_to_csv(cloud));
    bool wrote_ply = false;
    if (!cloud.empty()) {
        write_file(a.out + ".ply", rpr::cloud_to_ply(cloud));
        wrote_ply = true;
    } else {
        std::cerr << "sweep: empty cloud, skipping PLY output\n";
    }
    if (a.gnuplot) {
        std::string gp = "set datafile separator ','\n"
                         "set xlabel 'rho1'\nset ylabel 'rho2'\nset zlabel 'rho3'\n"
                         "splot '" + a.out + ".csv' skip 1 using 1:2:3 with dots notitle\n"
                         "pause -1\n";
        write_file(a.out + ".gp", gp);
    }

    json outputs{{"csv", a.out + ".csv"}};
    if (wrote_ply) outputs["ply"] = a.out + ".ply";
    json manifest{
        {"command", "sweep"},
        {"geometry_fingerprint", cloud.geometry_fingerprint},
        {"inputs", {{"geometry", a.geometry_path}}},
        {"outputs", outputs},
        {"parameters",
         {{"rho1_start", spec.rho1_start},
          {"rho1_end", spec.rho1_end},
          {"rho1_step", spec.rho1_step},
          {"n_theta1", spec.slice.n_theta1},
          {"n_alpha", spec.slice.n_alpha},
          {"tol_root", spec.slice.tol_root},
          {"rho_min", spec.slice.rho_min},
          {"rho_max", spec.slice.rho_max},
          {"scan_mode", a.scan_mode},
          {"threads", a.threads}}},
        {"results",
         {{"slices", cloud.slices.size()},
          {"points", cloud.point_count()},
          {"cloud_fingerprint", rpr::cloud_fingerprint(cloud)},
          {"degenerate_cells", diag.degenerate_cells},
          {"unconverged", diag.unconverged},
          {"tangency_probes", diag.tangency_probes}}}};
    write_manifest(a.out, manifest);

    std::cout << "sweep " << a.rho1_range << ": " << cloud.slices.size() << " slices, "
              << cloud.point_count() << " points -> " << a.out << ".csv\n";
    return 0;
}

// Geometry fingerprint travels with the sweep manifest; pick it up when the
// cloud CSV still sits next to it.
std::string sibling_manifest_fingerprint(const std::string& cloud_path) {
    std::string base = cloud_path;
    if (base.size() > 4 && base.substr(base.size() - 4) == ".csv") base.resize(base.size() - 4);
    const std::string manifest_path = base + ".manifest.json";
    std::error_code ec;
    if (!fs::exists(manifest_path, ec)) return {};
    try {
        const json m = json::parse(read_file(manifest_path));
        if (m.contains("geometry_fingerprint")) return m["geometry_fingerprint"].get<std::string>();
    } catch (...) {
        // unusable manifest: treat the fingerprint as unknown
    }
    return {};
}

struct MaxboxArgs {
    std::string cloud_path;
    std::string center;
    double security = 0.1;
    std::string domain = "0:50,0:60,0:60";
    double initial_step = 1.0;
    double reduction = 0.5;
    double min_step = 0.125;
    int max_iters = 10000;
    bool trace = false;
    std::string geometry_path;  // enables the refinement stage
    bool refine = false;
    double refine_step = 0.25;
    int refine_grid = 1440;
    std::string refine_rho_bounds = "0:60";
    std::string refine_scan_mode = "both";
    unsigned threads = 0;
    std::string out;
};

int run_maxbox(const MaxboxArgs& a) {
    auto cloud = rpr::cloud_from_csv(read_file(a.cloud_path));
    cloud.geometry_fingerprint = sibling_manifest_fingerprint(a.cloud_path);

    rpr::BoxQuery query;
    query.center0 = parse_joint_triple(a.center, "center");
    query.security = a.security;
    query.domain = parse_domain(a.domain);
    query.optimizer = {a.initial_step, a.reduction, a.min_step, a.max_iters};

    const rpr::Clearance initial = rpr::min_clearance(cloud, query.center0, query.domain);

    rpr::HJResult opt;
    auto box = rpr::build_box(cloud, query, &opt);
    if (a.refine) {
        if (a.geometry_path.empty())
            throw rpr::ValidationError("maxbox: --refine needs --geometry to re-slice the surface");
        const auto geom = load_geometry_file(a.geometry_path);
        if (!cloud.geometry_fingerprint.empty() &&
            cloud.geometry_fingerprint != rpr::geometry_fingerprint(geom))
            throw rpr::ValidationError("maxbox: --geometry does not match the cloud's manifest "
                                       "(fingerprint mismatch)");
        const auto rb = parse_numbers(a.refine_rho_bounds, ':', 2, "refine-rho-bounds");
        rpr::SliceSpec rslice;
        rslice.n_theta1 = a.refine_grid;
        rslice.n_alpha = a.refine_grid;
        rslice.rho_min = rb[0];
        rslice.rho_max = rb[1];
        rslice.scan_mode = parse_scan_mode(a.refine_scan_mode);
        box = rpr::refine_box(geom, box, rslice, a.refine_step, a.threads);
        if (!box.refine_converged)
            std::cerr << "maxbox: refinement did not converge within the round budget; "
                         "the reported clearance is the last trim\n";
    }
    write_file(a.out + ".txt", rpr::box_report_text(box));

    if (a.trace) {
        std::string csv = "iter,step,rho1,rho2,rho3,objective\n";
        for (const auto& e : opt.trace) {
            csv += std::to_string(e.iter);
            csv += ',';
            csv += rpr::detail::fmt_sig(e.step, 12);
            csv += ',';
            csv += rpr::detail::fmt_sig(e.center.rho1, 12);
            csv += ',';
            csv += rpr::detail::fmt_sig(e.center.rho2, 12);
            csv += ',';
            csv += rpr::detail::fmt_sig(e.center.rho3, 12);
            csv += ',';
            csv += rpr::detail::fmt_sig(e.objective, 12);
            csv += '\n';
        }
        write_file(a.out + ".trace.csv", csv);
    }

    json outputs{{"report", a.out + ".txt"}};
    if (a.trace) outputs["trace"] = a.out + ".trace.csv";
    json manifest{
        {"command", "maxbox"},
        {"geometry_fingerprint",
         cloud.geometry_fingerprint.empty() ? "unknown" : cloud.geometry_fingerprint},
        {"inputs", {{"cloud", a.cloud_path}}},
        {"outputs", outputs},
        {"parameters",
         {{"center0", {query.center0.rho1, query.center0.rho2, query.center0.rho3}},
          {"security", query.security},
          {"domain_lo", {query.domain.lo.rho1, query.domain.lo.rho2, query.domain.lo.rho3}},
          {"domain_hi", {query.domain.hi.rho1, query.domain.hi.rho2, query.domain.hi.rho3}},
          {"initial_step", query.optimizer.initial_step},
          {"reduction", query.optimizer.reduction},
          {"min_step", query.optimizer.min_step},
          {"max_iters", query.optimizer.max_iters},
          {"refine", a.refine},
          {"refine_step", a.refine_step},
          {"refine_grid", a.refine_grid},
          {"refine_rho_bounds", a.refine_rho_bounds},
          {"refine_scan_mode", a.refine_scan_mode},
          {"threads", a.threads}}},
        {"results",
         {{"cloud_points", cloud.point_count()},
          {"cloud_fingerprint", box.cloud_fingerprint},
          {"initial_clearance", initial.d},
          {"d_min", box.d_min},
          {"d_min_optimizer", box.d_min_optimizer},
          {"refined", box.refined},
          {"refine_converged", box.refine_converged},
          {"half_width", box.half_width()},
          {"center", {box.center.rho1, box.center.rho2, box.center.rho3}},
          {"hj_iterations", box.hj_iterations},
          {"hj_evaluations", box.hj_evaluations}}}};
    write_manifest(a.out, manifest);

    std::cout << "initial clearance at Q0: " << initial.d << "\n"
              << "optimizer d_min: " << box.d_min_optimizer << "\n"
              << (box.refined ? "refined d_min: " : "final d_min: ") << box.d_min
              << " at center (" << box.center.rho1 << ", " 
              << box.center.rho2 << ", " << box.center.rho3 << ")\n"
              << "half-width after security " << box.security << ": " << box.half_width() << "\n"
              << "joint limits: rho1 [" << box.limit_lo.rho1 << ", " << box.limit_hi.rho1
              << "]  rho2 [" << box.limit_lo.rho2 << ", " << box.limit_hi.rho2 << "]  rho3 ["
              << box.limit_lo.rho3 << ", " << box.limit_hi.rho3 << "]\n"
              << "report -> " << a.out << ".txt\n";
    return 0;
}

struct ImageArgs {
    std::string geometry_path;
    std::string box_path;
    int n = 25;
    double det_floor = 1e-8;
    int alpha_grid = 3600;
    unsigned threads = 0;
    bool ply = false;
    double scan_alpha = std::numeric_limits<double>::quiet_NaN();
    std::string scan_window;
    int scan_res = 200;
    bool degrees = false;
    std::string out;
    bool gnuplot = false;
};

int run_image(const ImageArgs& a) {
    const auto geom = load_geometry_file(a.geometry_path);
    const auto box = rpr::parse_box_report(read_file(a.box_path));

    const std::string geom_fp = rpr::geometry_fingerprint(geom);
    if (!box.geometry_fingerprint.empty() && box.geometry_fingerprint != geom_fp)
        throw rpr::ValidationError("image: box report was produced for a different geometry "
                                   "(fingerprint mismatch)");

    rpr::CubeImageOptions opts;
    opts.n_per_axis = a.n;
    opts.det_floor = a.det_floor;
    opts.dkp.alpha_grid = a.alpha_grid;
    opts.threads = a.threads;

    const auto image = rpr::cube_image(geom, box, opts);
    write_file(a.out + ".csv", rpr::image_to_csv(image));
    if (a.ply) write_file(a.out + ".ply", rpr::image_to_ply(image));

    if (!image.diag.violations.empty()) {
        std::cerr << "image: " << image.diag.violations.size()
                  << " sample(s) violate the singularity-free claim (|det| <= " << a.det_floor
                  << "); see " << a.out << ".violations.csv\n";
        rpr::CubeImage v;
        v.positive = image.diag.violations;
        write_file(a.out + ".violations.csv", rpr::image_to_csv(v));
    }

    bool scanned = false;
    if (!std::isnan(a.scan_alpha)) {
        if (a.scan_window.empty())
            throw rpr::ValidationError("image: --scan-window is required with --scan-alpha");
        // window format: "x0:x1,y0:y1"
        const auto parts = rpr::detail::split(a.scan_window, ',');
        if (parts.size() != 2)
            throw rpr::ValidationError("scan-window: expected x0:x1,y0:y1, got '" + a.scan_window + "'");
        const auto xs = parse_numbers(parts[0], ':', 2, "scan-window x");
        const auto ys = parse_numbers(parts[1], ':', 2, "scan-window y");
        const double alpha = a.degrees ? a.scan_alpha * rpr::kPi / 180.0 : a.scan_alpha;
        const auto curve = rpr::workspace_singularity_scan(
            geom, {xs[0], xs[1], ys[0], ys[1]}, alpha, a.scan_res);
        write_file(a.out + "_scan.csv", rpr::scan_to_csv(curve, alpha));
        scanned = true;
    }

    if (a.gnuplot) {
        std::string gp = "set datafile separator ','\n"
                         "set xlabel 'x'\nset ylabel 'y'\nset size ratio -1\n"
                         "plot '" + a.out + ".csv' skip 1 using 1:2 with dots notitle";
        if (scanned) gp += ", \\\n     '" + a.out + "_scan.csv' skip 1 using 1:2 with points pt 7 ps 0.3 notitle";
        gp += "\npause -1\n";
        write_file(a.out + ".gp", gp);
    }

    json outputs{{"csv", a.out + ".csv"}};
    if (a.ply) outputs["ply"] = a.out + ".ply";
    if (scanned) outputs["scan_csv"] = a.out + "_scan.csv";
    if (!image.diag.violations.empty()) outputs["violations_csv"] = a.out + ".violations.csv";
    json manifest{
        {"command", "image"},
        {"geometry_fingerprint", geom_fp},
        {"inputs", {{"geometry", a.geometry_path}, {"box_report", a.box_path}}},
        {"outputs", outputs},
        {"parameters",
         {{"n_per_axis", a.n},
          {"det_floor", a.det_floor},
          {"alpha_grid", a.alpha_grid},
          {"threads", a.threads},
          {"scan_alpha", a.scan_window.empty() ? json(nullptr) : json(a.scan_alpha)},
          {"scan_res", a.scan_res},
          {"degrees", a.degrees}}},
        {"results",
         {{"solutions", image.diag.solutions},
          {"positive", image.positive.size()},
          {"negative", image.negative.size()},
          {"near_singular", image.diag.near_singular},
          {"violations", image.diag.violations.size()}}}};
    write_manifest(a.out, manifest);

    std::cout << "image: " << image.diag.solutions << " solutions over " << a.n << "^3 grid, "
              << image.positive.size() << " in aspect '+', " << image.negative.size()
              << " in aspect '-', " << image.diag.violations.size() << " violations -> " << a.out
              << ".csv\n";
    return 0;
}

struct CheckArgs {
    std::string geometry_path;
    std::string pose;
    std::string joints;
    bool degrees = false;
    int alpha_grid = 3600;
};

int run_check(const CheckArgs& a) {
    const auto geom = load_geometry_file(a.geometry_path);
    std::ostringstream out;
    out.precision(12);

    if (!a.pose.empty()) {
        const auto v = parse_numbers(a.pose, ',', 3, "pose");
        const double alpha = a.degrees ? v[2] * rpr::kPi / 180.0 : v[2];
        const rpr::Pose pose{v[0], v[1], alpha};
        const auto q = rpr::inverse_kinematics(geom, pose);
        out << "pose: x=" << pose.x << " y=" << pose.y << " alpha=" << pose.alpha << "\n";
        out << "joints: rho1=" << q.rho1 << " rho2=" << q.rho2 << " rho3=" << q.rho3 << "\n";
        try {
            const auto t = rpr::leg_angles(geom, pose);
            const double res = rpr::singularity_residual(geom, t);
            const double det = rpr::leg_lines_det(geom, t);
            out << "leg angles: theta1=" << t.theta1 << " theta2=" << t.theta2
                << " theta3=" << t.theta3 << "\n";
            out << "singularity residual: " << res << "\n";
            out << "leg-line determinant: " << det << "\n";
            if (std::abs(det) <= 1e-8)
                out << "verdict: SINGULAR (parallel singularity)\n";
            else if (std::abs(det) < 1e-3)
                out << "verdict: NEAR-SINGULAR (|det| < 1e-3)\n";
            else
                out << "verdict: regular\n";
        } catch (const rpr::ValidationError& e) {
            out << "diagnostic: " << e.what() << "\n";
            out << "verdict: DEGENERATE LEG (leg angles undefined)\n";
        }
        rpr::DkpOptions opts;
        opts.alpha_grid = a.alpha_grid;
        const auto sols = rpr::direct_kinematics(geom, q, opts);
        out << "assembly modes sharing these joints: " << sols.size() << "\n";
        for (std::size_t i = 0; i < sols.size(); ++i) {
            const auto& s = sols[i];
            out << "  [" << i + 1 << "] x=" << s.x << " y=" << s.y << " alpha=" << s.alpha << "\n";
        }
    } else {
        const auto q = parse_joint_triple(a.joints, "joints");
        rpr::DkpOptions opts;
        opts.alpha_grid = a.alpha_grid;
        rpr::DkpDiagnostics diag;
        const auto sols = rpr::direct_kinematics(geom, q, opts, &diag);
        out << "joints: rho1=" << q.rho1 << " rho2=" << q.rho2 << " rho3=" << q.rho3 << "\n";
        out << "assembly modes: " << sols.size() << "\n";
        for (std::size_t i = 0; i < sols.size(); ++i) {
            const auto& s = sols[i];
            double det = 0.0;
            bool degenerate = false;
            try {
                det = rpr::leg_lines_det(geom, rpr::leg_angles(geom, s));
            } catch (const rpr::ValidationError&) {
                degenerate = true;
            }
            const auto res = rpr::constraint_residuals(geom, s, q);
            const double worst =
                std::max({std::abs(res[0]), std::abs(res[1]), std::abs(res[2]), std::abs(res[3])});
            out << "  [" << i + 1 << "] x=" << s.x << " y=" << s.y << " alpha=" << s.alpha;
            if (degenerate)
                out << " det=degenerate-leg";
            else
                out << " det=" << det;
            out << " max_residual=" << worst << "\n";
        }
        if (diag.merged_roots > 0)
            out << "note: " << diag.merged_roots
                << " root(s) merged within dedup radius (tangency, multiplicity 2)\n";
    }
    std::cout << out.str();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"joint-space singularity surfaces and singularity-free boxes "
                 "for planar 3-RPR parallel manipulators"};
    app.require_subcommand(1);
    app.set_version_flag("--version", rpr::kVersion);

    SliceArgs slice_args;
    auto* slice = app.add_subcommand("slice", "singularity curve in the (rho2, rho3) plane at fixed rho1");
    slice->add_option("geometry", slice_args.geometry_path, "geometry config file")->required();
    slice->add_option("--rho1", slice_args.rho1, "slice position")
        ->required()
        ->check(CLI::NonNegativeNumber);
    slice->add_option("--n-theta1", slice_args.n_theta1, "theta1 grid count (default 720)");
    slice->add_option("--n-alpha", slice_args.n_alpha, "alpha grid count (default 720)");
    slice->add_option("--tol-root", slice_args.tol_root, "root residual tolerance (default 1e-10)");
    slice->add_option("--rho-bounds", slice_args.rho_bounds, "rho2/rho3 filter lo:hi (default 0:50)");
    slice->add_option("--scan-mode", slice_args.scan_mode,
                      "scan orientation: theta1, alpha or both (default theta1)");
    slice->add_option("-o,--output", slice_args.out, "output prefix")->required();
    slice->add_flag("--gnuplot", slice_args.gnuplot, "also emit a gnuplot script");

    SweepArgs sweep_args;
    auto* sweep = app.add_subcommand("sweep", "stack slices into the joint-space singularity surface");
    sweep->add_option("geometry", sweep_args.geometry_path, "geometry config file")->required();
    sweep->add_option("--rho1", sweep_args.rho1_range, "rho1 range start:end:step (default 0:50:0.5)");
    sweep->add_option("--n-theta1", sweep_args.n_theta1, "theta1 grid count (default 720)");
    sweep->add_option("--n-alpha", sweep_args.n_alpha, "alpha grid count (default 720)");
    sweep->add_option("--tol-root", sweep_args.tol_root, "root residual tolerance (default 1e-10)");
    sweep->add_option("--rho-bounds", sweep_args.rho_bounds, "rho2/rho3 filter lo:hi (default 0:60)");
    sweep->add_option("--scan-mode", sweep_args.scan_mode,
                      "scan orientation: theta1, alpha or both (default both)");
    sweep->add_option("--threads", sweep_args.threads, "worker cap, 0 = all cores");
    sweep->add_option("-o,--output", sweep_args.out, "output prefix")->required();
    sweep->add_flag("--gnuplot", sweep_args.gnuplot, "also emit a gnuplot script");

    MaxboxArgs maxbox_args;
    auto* maxbox = app.add_subcommand("maxbox", "maximal singularity-free cube around a joint-space point");
    maxbox->add_option("cloud", maxbox_args.cloud_path, "cloud CSV from sweep")->required();
    maxbox->add_option("--center", maxbox_args.center, "initial center rho1,rho2,rho3")->required();
    maxbox->add_option("--security", maxbox_args.security, "security margin s (default 0.1)")
        ->check(CLI::NonNegativeNumber);
    maxbox->add_option("--domain", maxbox_args.domain,
                       "sampled region lo:hi per axis (default 0:50,0:60,0:60)");
    maxbox->add_option("--initial-step", maxbox_args.initial_step, "pattern search initial step (default 1)");
    maxbox->add_option("--reduction", maxbox_args.reduction, "step reduction factor (default 0.5)");
    maxbox->add_option("--min-step", maxbox_args.min_step, "terminal step (default 0.125)");
    maxbox->add_option("--max-iters", maxbox_args.max_iters, "iteration budget (default 10000)");
    maxbox->add_flag("--trace", maxbox_args.trace, "write the accepted-point trace CSV");
    maxbox->add_option("--geometry", maxbox_args.geometry_path,
                       "geometry config, required by --refine");
    maxbox->add_flag("--refine", maxbox_args.refine,
                     "verify the box against a denser sweep and trim the clearance");
    maxbox->add_option("--refine-step", maxbox_args.refine_step, "refinement rho1 step (default 0.25)");
    maxbox->add_option("--refine-grid", maxbox_args.refine_grid,
                       "refinement grid per angle axis (default 1440)");
    maxbox->add_option("--refine-rho-bounds", maxbox_args.refine_rho_bounds,
                       "refinement rho2/rho3 filter lo:hi (default 0:60)");
    maxbox->add_option("--refine-scan-mode", maxbox_args.refine_scan_mode,
                       "refinement scan orientation (default both)");
    maxbox->add_option("--threads", maxbox_args.threads, "worker cap, 0 = all cores");
    maxbox->add_option("-o,--output", maxbox_args.out, "output prefix")->required();

    ImageArgs image_args;
    auto* image = app.add_subcommand("image", "workspace image of a singularity-free cube via direct kinematics");
    image->add_option("geometry", image_args.geometry_path, "geometry config file")->required();
    image->add_option("box", image_args.box_path, "box report from maxbox")->required();
    image->add_option("--n", image_args.n, "grid points per joint axis (default 25)");
    image->add_option("--det-floor", image_args.det_floor, "singularity floor on |det| (default 1e-8)");
    image->add_option("--alpha-grid", image_args.alpha_grid, "DKP alpha grid (default 3600)");
    image->add_option("--threads", image_args.threads, "worker cap, 0 = all cores");
    image->add_flag("--ply", image_args.ply, "also write the (x, y, alpha) image as PLY");
    image->add_option("--scan-alpha", image_args.scan_alpha,
                      "also trace workspace singularities at this fixed alpha");
    image->add_option("--scan-window", image_args.scan_window, "scan window x0:x1,y0:y1");
    image->add_option("--scan-res", image_args.scan_res, "scan grid nodes per axis (default 200)");
    image->add_flag("--degrees", image_args.degrees, "interpret --scan-alpha in degrees");
    image->add_option("-o,--output", image_args.out, "output prefix")->required();
    image->add_flag("--gnuplot", image_args.gnuplot, "also emit a gnuplot script");

    CheckArgs check_args;
    auto* check = app.add_subcommand("check", "singularity diagnostics for a pose or joint vector");
    check->add_option("geometry", check_args.geometry_path, "geometry config file")->required();
    auto* pose_opt = check->add_option("--pose", check_args.pose, "pose x,y,alpha");
    auto* joints_opt = check->add_option("--joints", check_args.joints, "joint vector rho1,rho2,rho3");
    pose_opt->excludes(joints_opt);
    joints_opt->excludes(pose_opt);
    check->add_flag("--degrees", check_args.degrees, "interpret the pose alpha in degrees");
    check->add_option("--alpha-grid", check_args.alpha_grid, "DKP alpha grid (default 3600)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (slice->parsed()) return run_slice(slice_args);
        if (sweep->parsed()) return run_sweep(sweep_args);
        if (maxbox->parsed()) return run_maxbox(maxbox_args);
        if (image->parsed()) return run_image(image_args);
        if (check->parsed()) {
            if (check_args.pose.empty() && check_args.joints.empty())
                throw rpr::ValidationError("check: provide --pose or --joints");
            return run_check(check_args);
        }
    } catch (const rpr::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const rpr::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
