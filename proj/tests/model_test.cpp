#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "test_util.hpp"

using namespace rpr;

namespace {

const char* kReferenceConfig =
    "# reference manipulator\n"
    "a2x = 15.91\n"
    "a3x = 0\n"
    "a3y = 10\n"
    "d1 = 17.04\n"
    "d2 = 16.54\n"
    "d3 = 20.84\n";

TEST(Model, LoadsReferenceConfig) {
    const auto g = load_geometry(kReferenceConfig);
    EXPECT_EQ(g.a2x, 15.91);
    EXPECT_EQ(g.a3x, 0.0);
    EXPECT_EQ(g.a3y, 10.0);
    EXPECT_EQ(g.d1, 17.04);
    EXPECT_EQ(g.d2, 16.54);
    EXPECT_EQ(g.d3, 20.84);
    EXPECT_EQ(g.beta, platform_angle(17.04, 16.54, 20.84));
}

TEST(Model, RejectsNonPositiveEdge) {
    try {
        load_geometry("a2x=15.91\na3x=0\na3y=10\nd1=0\nd2=16.54\nd3=20.84\n");
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::strstr(e.what(), "non-positive edge"), nullptr) << e.what();
    }
}

TEST(Model, RejectsImpossiblePlatform) {
    // d2 = d1 + d3 + 1
    try {
        load_geometry("a2x=15.91\na3x=0\na3y=10\nd1=17.04\nd2=38.88\nd3=20.84\n");
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::strstr(e.what(), "triangle inequality violated"), nullptr) << e.what();
    }
}

TEST(Model, RejectsMissingAndUnknownKeys) {
    EXPECT_THROW(load_geometry("a2x=1\na3x=0\na3y=1\nd1=1\nd2=1\n"), ValidationError);
    EXPECT_THROW(load_geometry("a2x=1\na3x=0\na3y=1\nd1=1\nd2=1\nd3=1\nbogus=3\n"),
                 ValidationError);
    EXPECT_THROW(load_geometry("a2x=1\na3x=0\na3y=1\nd1=one\nd2=1\nd3=1\n"), ValidationError);
    EXPECT_THROW(load_geometry("a2x=inf\na3x=0\na3y=1\nd1=1\nd2=1\nd3=1\n"), ValidationError);
}

TEST(Model, PlatformAngleEquilateral) {
    EXPECT_NEAR(platform_angle(1.0, 1.0, 1.0), kPi / 3.0, 1e-15);
}

TEST(Model, PlatformAngleCollinearLimit) {
    // d2 = d1 + d3: arccos(-1)
    EXPECT_DOUBLE_EQ(platform_angle(2.0, 5.0, 3.0), kPi);
    // but a geometry with a collinear platform is refused
    EXPECT_THROW(make_geometry(10.0, 0.0, 5.0, 2.0, 5.0, 3.0), ValidationError);
}

TEST(Model, PlatformAngleBeyondToleranceFails) {
    EXPECT_THROW(platform_angle(1.0, 2.1, 1.0), ValidationError);
    EXPECT_THROW(platform_angle(-1.0, 1.0, 1.0), ValidationError);
}

// Oracle: place B1 = (0,0), B2 = (d1, 0), B3 = d3 (cos beta, sin beta) and
// check that |B2 - B3| reproduces d2.
TEST(Model, ReferencePlatformAngleReconstructsD2) {
    const double beta = platform_angle(17.04, 16.54, 20.84);
    const double b3x = 20.84 * std::cos(beta), b3y = 20.84 * std::sin(beta);
    const double d2 = std::hypot(b3x - 17.04, b3y);
    EXPECT_NEAR(d2 / 16.54, 1.0, 1e-9);
    EXPECT_NEAR(beta, 0.8826031097644318, 1e-12);
}

// For any valid geometry, B2 = B1 + d1 u(a) and B3 = B1 + d3 u(a+beta)
// must satisfy |B2 - B3| = d2 for every platform orientation.
TEST(Model, EdgeLengthInvariantUnderRotation) {
    const auto& g = rprtest::reference_geometry();
    auto gen = rprtest::rng(7);
    for (int i = 0; i < 1000; ++i) {
        const double a = rprtest::uniform(gen, -10.0, 10.0);
        const double b2x = g.d1 * std::cos(a), b2y = g.d1 * std::sin(a);
        const double b3x = g.d3 * std::cos(a + g.beta), b3y = g.d3 * std::sin(a + g.beta);
        EXPECT_NEAR(std::hypot(b2x - b3x, b2y - b3y), g.d2, 1e-9);
    }
}

// beta reconstruction holds for arbitrary valid platforms, not just the
// reference one
TEST(Model, RandomGeometriesReconstructD2) {
    auto gen = rprtest::rng(17);
    for (int i = 0; i < 200; ++i) {
        const double d1 = rprtest::uniform(gen, 1.0, 30.0);
        const double d3 = rprtest::uniform(gen, 1.0, 30.0);
        const double d2 = rprtest::uniform(gen, std::abs(d1 - d3) + 0.1, d1 + d3 - 0.1);
        const auto g = make_geometry(rprtest::uniform(gen, 1.0, 30.0),
                                     rprtest::uniform(gen, -15.0, 15.0),
                                     rprtest::uniform(gen, -20.0, 20.0), d1, d2, d3);
        EXPECT_GE(g.beta, 0.0);
        EXPECT_LE(g.beta, kPi);
        const double b3x = d3 * std::cos(g.beta), b3y = d3 * std::sin(g.beta);
        EXPECT_NEAR(std::hypot(b3x - d1, b3y) / d2, 1.0, 1e-9);
    }
}

TEST(Model, LoadIsDeterministic) {
    const auto g1 = load_geometry(kReferenceConfig);
    const auto g2 = load_geometry(kReferenceConfig);
    EXPECT_EQ(std::memcmp(&g1, &g2, sizeof(g1)), 0);
}

TEST(Model, FingerprintSeparatesGeometries) {
    const auto g1 = load_geometry(kReferenceConfig);
    auto g2 = make_geometry(15.91, 0.0, 10.0, 17.04, 16.54, 20.85);
    EXPECT_EQ(geometry_fingerprint(g1), geometry_fingerprint(rprtest::reference_geometry()));
    EXPECT_NE(geometry_fingerprint(g1), geometry_fingerprint(g2));
}

TEST(Model, WrapAngle) {
    EXPECT_DOUBLE_EQ(wrap_angle(0.0), 0.0);
    EXPECT_DOUBLE_EQ(wrap_angle(kTwoPi), 0.0);
    EXPECT_DOUBLE_EQ(wrap_angle(-0.5), kTwoPi - 0.5);
    EXPECT_GE(wrap_angle(-1e-18), 0.0);
    EXPECT_LT(wrap_angle(-1e-18), kTwoPi);
    EXPECT_NEAR(wrap_angle(7.0), 7.0 - kTwoPi, 1e-15);
}

}  // namespace
