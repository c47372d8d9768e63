#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"

using namespace rpr;
using rprtest::reference_geometry;

namespace {

// Hand-sized box well inside the reference manipulator's singularity-free
// zone (around the optimized center of the large free region).
SingularityFreeBox small_free_box(double half = 2.0) {
    SingularityFreeBox box;
    box.center = {41.625, 24.875, 44.125};
    box.d_min = half;
    box.security = 0.0;
    box.edge = 2.0 * half;
    for (int i = 0; i < 3; ++i) {
        box.limit_lo[i] = box.center[i] - half;
        box.limit_hi[i] = box.center[i] + half;
    }
    return box;
}

TEST(ProjectXy, PreservesCardinality) {
    EXPECT_TRUE(project_xy({}).empty());
    WorkspaceSample s;
    s.pose = {1.5, -2.0, 0.7};
    s.aspect = +1;
    const auto pts = project_xy({s});
    ASSERT_EQ(pts.size(), 1u);
    EXPECT_DOUBLE_EQ(pts[0].x, 1.5);
    EXPECT_DOUBLE_EQ(pts[0].y, -2.0);
    EXPECT_EQ(pts[0].aspect, +1);
}

TEST(PoseDistance, WrapsAngles) {
    EXPECT_NEAR(pose_distance({0, 0, 0.1}, {0, 0, kTwoPi - 0.1}), 0.2, 1e-12);
    EXPECT_DOUBLE_EQ(pose_distance({1, 0, 0}, {0, 0, 0}), 1.0);
}

TEST(CubeImage, SmallBoxImage) {
    const auto& g = reference_geometry();
    const auto box = small_free_box();
    CubeImageOptions opts;
    opts.n_per_axis = 5;
    opts.threads = 2;
    const auto image = cube_image(g, box, opts);

    // both aspects are populated and certified nonsingular
    EXPECT_GT(image.positive.size(), 0u);
    EXPECT_GT(image.negative.size(), 0u);
    EXPECT_TRUE(image.diag.violations.empty());
    EXPECT_EQ(image.positive.size() + image.negative.size(), image.diag.solutions);

    for (const auto& s : image.positive) EXPECT_GT(s.det, 1e-8);
    for (const auto& s : image.negative) EXPECT_LT(s.det, -1e-8);

    // IK roundtrip on every sample
    auto check_roundtrip = [&](const WorkspaceSample& s) {
        const auto q = inverse_kinematics(g, s.pose);
        EXPECT_NEAR(q.rho1, s.source_q.rho1, 1e-8);
        EXPECT_NEAR(q.rho2, s.source_q.rho2, 1e-8);
        EXPECT_NEAR(q.rho3, s.source_q.rho3, 1e-8);
    };
    for (const auto& s : image.positive) check_roundtrip(s);
    for (const auto& s : image.negative) check_roundtrip(s);

    // deterministic ordering: source_q lexicographic, then alpha
    auto ordered = [](const std::vector<WorkspaceSample>& v) {
        for (std::size_t i = 1; i < v.size(); ++i) {
            const auto &a = v[i - 1], &b = v[i];
            const auto ta = std::array{a.source_q.rho1, a.source_q.rho2, a.source_q.rho3, a.pose.alpha};
            const auto tb = std::array{b.source_q.rho1, b.source_q.rho2, b.source_q.rho3, b.pose.alpha};
            if (!(ta <= tb)) return false;
        }
        return true;
    };
    EXPECT_TRUE(ordered(image.positive));
    EXPECT_TRUE(ordered(image.negative));

    // projection never changes cardinality
    EXPECT_EQ(project_xy(image.positive).size(), image.positive.size());
    EXPECT_EQ(project_xy(image.negative).size(), image.negative.size());

    // each aspect group is dominated by one connected component; the pose
    // tolerance scales with the coarse grid spacing of this small image
    for (const auto* group : {&image.positive, &image.negative}) {
        const auto sizes = component_sizes(*group, box, opts.n_per_axis, 4.0);
        ASSERT_FALSE(sizes.empty());
        EXPECT_GE(static_cast<double>(sizes[0]), 0.95 * static_cast<double>(group->size()));
    }
}

TEST(CubeImage, ThreadCountInvariant) {
    const auto& g = reference_geometry();
    const auto box = small_free_box(1.0);
    CubeImageOptions a, b;
    a.n_per_axis = b.n_per_axis = 3;
    a.threads = 1;
    b.threads = 4;
    EXPECT_EQ(image_to_csv(cube_image(g, box, a)), image_to_csv(cube_image(g, box, b)));
}

TEST(CubeImage, FloorViolationsAreReportedNotDropped) {
    // with the determinant floor raised above every sample's |det|, all
    // solutions must land in the diagnostics instead of an aspect group
    const auto& g = reference_geometry();
    const auto box = small_free_box(1.0);
    CubeImageOptions opts;
    opts.n_per_axis = 3;
    opts.det_floor = 1e6;
    const auto image = cube_image(g, box, opts);
    EXPECT_TRUE(image.positive.empty());
    EXPECT_TRUE(image.negative.empty());
    EXPECT_EQ(image.diag.violations.size(), image.diag.solutions);
    EXPECT_GT(image.diag.solutions, 0u);
    for (const auto& v : image.diag.violations) EXPECT_LE(std::abs(v.det), opts.det_floor);
}

TEST(CubeImage, RejectsBadArguments) {
    const auto& g = reference_geometry();
    auto box = small_free_box();
    CubeImageOptions opts;
    opts.n_per_axis = 1;
    EXPECT_THROW(cube_image(g, box, opts), ValidationError);
    opts.n_per_axis = 3;
    box.limit_hi = box.limit_lo;
    EXPECT_THROW(cube_image(g, box, opts), ValidationError);
}

TEST(Scan, EmptyWindowYieldsNoPoints) {
    // residual keeps one sign on this window at alpha = 0
    const auto& g = reference_geometry();
    const auto pts = workspace_singularity_scan(g, {-6.0, -2.0, 12.0, 16.0}, 0.0, 32);
    EXPECT_TRUE(pts.empty());
}

TEST(Scan, PointsSitOnTheZeroSet) {
    const auto& g = reference_geometry();
    const ScanRegion region{-15.0, 25.0, -10.0, 25.0};
    const int res = 101;
    const auto pts = workspace_singularity_scan(g, region, 0.0, res);
    ASSERT_GT(pts.size(), 10u);

    const double dx = (region.x1 - region.x0) / (res - 1);
    const double dy = (region.y1 - region.y0) / (res - 1);
    auto residual_at = [&](double x, double y) {
        return singularity_residual(g, leg_angles(g, {x, y, 0.0}));
    };
    for (const auto& p : pts) {
        // interpolation error bound: max |residual| over the containing cell corners
        const int i = std::min(res - 2, std::max(0, static_cast<int>((p.x - region.x0) / dx)));
        const int j = std::min(res - 2, std::max(0, static_cast<int>((p.y - region.y0) / dy)));
        double bound = 0.0;
        for (int di = 0; di <= 1; ++di)
            for (int dj = 0; dj <= 1; ++dj)
                bound = std::max(bound, std::abs(residual_at(region.x0 + (i + di) * dx,
                                                             region.y0 + (j + dj) * dy)));
        EXPECT_LE(std::abs(residual_at(p.x, p.y)), bound + 1e-12);
    }
}

// The residual-based extraction must flag the same cells as a leg_lines_det
// based scan of the same grid.
TEST(Scan, DualOracleAgreesOnGridCells) {
    const auto& g = reference_geometry();
    const ScanRegion region{-15.0, 25.0, -10.0, 25.0};
    const int res = 101;  // 10^4 nodes
    const auto pts = workspace_singularity_scan(g, region, 0.0, res);

    std::vector<double> det(static_cast<std::size_t>(res) * res,
                            std::numeric_limits<double>::quiet_NaN());
    auto node = [&](int i, int j) {
        return Pose{region.x0 + (region.x1 - region.x0) * i / double(res - 1),
                    region.y0 + (region.y1 - region.y0) * j / double(res - 1), 0.0};
    };
    for (int j = 0; j < res; ++j)
        for (int i = 0; i < res; ++i) {
            try {
                det[static_cast<std::size_t>(j) * res + i] = leg_lines_det(g, leg_angles(g, node(i, j)));
            } catch (const ValidationError&) {
            }
        }
    std::size_t det_edges = 0;
    auto edge = [&](double a, double b) {
        if (std::isnan(a) || std::isnan(b)) return;
        if (a == 0.0 || (a < 0.0) != (b < 0.0)) ++det_edges;
    };
    for (int j = 0; j < res; ++j)
        for (int i = 0; i < res; ++i) {
            const double f = det[static_cast<std::size_t>(j) * res + i];
            if (i + 1 < res) edge(f, det[static_cast<std::size_t>(j) * res + i + 1]);
            if (j + 1 < res) edge(f, det[(static_cast<std::size_t>(j) + 1) * res + i]);
        }
    EXPECT_EQ(pts.size(), det_edges);
}

TEST(Scan, Validation) {
    const auto& g = reference_geometry();
    EXPECT_THROW(workspace_singularity_scan(g, {0.0, 1.0, 0.0, 1.0}, 0.0, 8), ValidationError);
    EXPECT_THROW(workspace_singularity_scan(g, {1.0, 0.0, 0.0, 1.0}, 0.0, 32), ValidationError);
}

TEST(ImageCsv, SchemaAndDeterminism) {
    const auto& g = reference_geometry();
    const auto box = small_free_box(1.0);
    CubeImageOptions opts;
    opts.n_per_axis = 3;
    const auto image = cube_image(g, box, opts);
    const auto csv = image_to_csv(image);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "x,y,alpha,rho1,rho2,rho3,det,aspect");
    EXPECT_EQ(csv, image_to_csv(cube_image(g, box, opts)));

    std::size_t rows = 0;
    for (char ch : csv)
        if (ch == '\n') ++rows;
    EXPECT_EQ(rows - 1, image.diag.solutions);  // header + one row per solution

    const auto ply = image_to_ply(image);
    EXPECT_NE(ply.find("element vertex " + std::to_string(image.diag.solutions)),
              std::string::npos);
}

}  // namespace
