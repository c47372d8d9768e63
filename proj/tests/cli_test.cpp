#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "test_util.hpp"

namespace fs = std::filesystem;

namespace {

#ifndef RPR3_BIN
#error "RPR3_BIN must point at the CLI binary"
#endif
#ifndef RPR3_DATA
#error "RPR3_DATA must point at the data directory"
#endif

const std::string kBin = RPR3_BIN;
const std::string kGeom = std::string(RPR3_DATA) + "/reference.geom";

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class CliTest : public ::testing::Test {
protected:
    static fs::path dir_;

    static void SetUpTestSuite() {
        dir_ = fs::temp_directory_path() / "rpr3_cli_test";
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    static void TearDownTestSuite() { fs::remove_all(dir_); }

    static RunResult run(const std::string& args) {
        const fs::path out = dir_ / "stdout.txt";
        const fs::path err = dir_ / "stderr.txt";
        const std::string cmd = kBin + " " + args + " > " + out.string() + " 2> " + err.string();
        const int status = std::system(cmd.c_str());
        RunResult r;
        r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.out = slurp(out);
        r.err = slurp(err);
        return r;
    }

    static std::string path(const std::string& name) { return (dir_ / name).string(); }
};

fs::path CliTest::dir_;

TEST_F(CliTest, SliceProducesCurveAndManifest) {
    const auto r = run("slice " + kGeom + " --rho1 17 --n-theta1 180 --n-alpha 180 -o " + path("s17"));
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const std::string csv = slurp(path("s17.csv"));
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "rho1,rho2,rho3,alpha,theta1");
    EXPECT_GT(std::count(csv.begin(), csv.end(), '\n'), 100);
    const std::string manifest = slurp(path("s17.manifest.json"));
    EXPECT_NE(manifest.find("\"command\": \"slice\""), std::string::npos);
    EXPECT_NE(manifest.find("geometry_fingerprint"), std::string::npos);
}

TEST_F(CliTest, SliceRejectsNegativeRho1) {
    const auto r = run("slice " + kGeom + " --rho1 -1 -o " + path("bad"));
    EXPECT_EQ(r.exit_code, 1);
    EXPECT_FALSE(fs::exists(path("bad.csv")));
}

TEST_F(CliTest, MissingGeometryIsIoError) {
    const auto r = run("slice " + path("nope.geom") + " --rho1 17 -o " + path("x"));
    EXPECT_EQ(r.exit_code, 2);
}

TEST_F(CliTest, SweepWritesCsvAndPlyWithMatchingCounts) {
    const auto r = run("sweep " + kGeom + " --rho1 14:16:1 --n-theta1 120 --n-alpha 120 -o " +
                       path("mini"));
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const std::string csv = slurp(path("mini.csv"));
    const std::string ply = slurp(path("mini.ply"));
    const long rows = std::count(csv.begin(), csv.end(), '\n') - 1;  // minus header
    EXPECT_NE(ply.find("element vertex " + std::to_string(rows) + "\n"), std::string::npos);
}

TEST_F(CliTest, SweepRejectsZeroStep) {
    const auto r = run("sweep " + kGeom + " --rho1 0:50:0 -o " + path("bad"));
    EXPECT_EQ(r.exit_code, 1);
    EXPECT_NE(r.err.find("step"), std::string::npos);
}

TEST_F(CliTest, MaxboxReportAndDegenerateSecurity) {
    ASSERT_EQ(run("sweep " + kGeom + " --rho1 14:16:0.5 --n-theta1 120 --n-alpha 120 -o " +
                  path("cloud"))
                  .exit_code,
              0);
    const auto r = run("maxbox " + path("cloud.csv") + " --center 15,20,20 --domain 14:16,0:60,0:60"
                       " --security 0.05 -o " + path("box"));
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const auto box = rpr::parse_box_report(slurp(path("box.txt")));
    EXPECT_GT(box.d_min, 0.05);
    EXPECT_DOUBLE_EQ(box.edge, 2.0 * box.d_min);
    // geometry fingerprint travels from the sweep manifest into the report
    EXPECT_FALSE(box.geometry_fingerprint.empty());

    const auto bad = run("maxbox " + path("cloud.csv") +
                         " --center 15,20,20 --domain 14:16,0:60,0:60 --security 50 -o " +
                         path("degenerate"));
    EXPECT_EQ(bad.exit_code, 1);
    EXPECT_NE(bad.err.find("security"), std::string::npos);
}

TEST_F(CliTest, MaxboxMissingCloudIsIoError) {
    EXPECT_EQ(run("maxbox " + path("absent.csv") + " --center 1,1,1 -o " + path("b")).exit_code, 2);
}

TEST_F(CliTest, ImageGroupsAspectsAndChecksFingerprint) {
    ASSERT_EQ(run("sweep " + kGeom + " --rho1 14:16:0.5 --n-theta1 120 --n-alpha 120 -o " +
                  path("icloud"))
                  .exit_code,
              0);
    ASSERT_EQ(run("maxbox " + path("icloud.csv") +
                  " --center 15,20,20 --domain 14:16,0:60,0:60 --security 0.05 -o " + path("ibox"))
                  .exit_code,
              0);
    const auto r = run("image " + kGeom + " " + path("ibox.txt") + " --n 3 -o " + path("img"));
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const std::string csv = slurp(path("img.csv"));
    EXPECT_NE(csv.find(",+\n"), std::string::npos);
    EXPECT_NE(csv.find(",-\n"), std::string::npos);

    // row count equals the solution total reported on stdout
    const long rows = std::count(csv.begin(), csv.end(), '\n') - 1;
    EXPECT_NE(r.out.find(std::to_string(rows) + " solutions"), std::string::npos);

    EXPECT_EQ(run("image " + kGeom + " " + path("missing_box.txt") + " -o " + path("i2")).exit_code, 2);

    // a box bound to a different geometry is refused
    auto box = rpr::parse_box_report(slurp(path("ibox.txt")));
    box.geometry_fingerprint = "deadbeefdeadbeef";
    std::ofstream(path("ibox_tampered.txt")) << rpr::box_report_text(box);
    const auto bad = run("image " + kGeom + " " + path("ibox_tampered.txt") + " -o " + path("i3"));
    EXPECT_EQ(bad.exit_code, 1);
    EXPECT_NE(bad.err.find("fingerprint"), std::string::npos);
}

TEST_F(CliTest, CheckPoseDiagnostics) {
    const auto degenerate = run("check " + kGeom + " --pose 0,0,0");
    EXPECT_EQ(degenerate.exit_code, 0);
    EXPECT_NE(degenerate.out.find("DEGENERATE LEG"), std::string::npos);

    // all-parallel configuration: residual ~ 0, reported singular
    const auto par = rprtest::parallel_configuration(17.0);
    std::ostringstream pose;
    pose.precision(17);
    pose << par.pose.x << ',' << par.pose.y << ',' << par.pose.alpha;
    const auto singular = run("check " + kGeom + " --pose " + pose.str());
    EXPECT_EQ(singular.exit_code, 0);
    EXPECT_NE(singular.out.find("SINGULAR"), std::string::npos);

    const auto regular = run("check " + kGeom + " --pose 3,4,0");
    EXPECT_EQ(regular.exit_code, 0);
    EXPECT_NE(regular.out.find("verdict: regular"), std::string::npos);

    EXPECT_EQ(run("check " + kGeom).exit_code, 1);  // neither --pose nor --joints
}

TEST_F(CliTest, CheckJointsRoundtrip) {
    const auto& g = rprtest::reference_geometry();
    auto gen = rprtest::rng(2024);
    const rpr::Pose pose = rprtest::random_pose(gen);
    const auto q = rpr::inverse_kinematics(g, pose);
    std::ostringstream joints;
    joints.precision(17);
    joints << q.rho1 << ',' << q.rho2 << ',' << q.rho3;
    const auto r = run("check " + kGeom + " --joints " + joints.str());
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_NE(r.out.find("assembly modes:"), std::string::npos);

    // the solution list contains the generating pose
    std::istringstream lines(r.out);
    std::string line;
    bool found = false;
    while (std::getline(lines, line)) {
        double x, y, a;
        if (std::sscanf(line.c_str(), "  [%*d] x=%lf y=%lf alpha=%lf", &x, &y, &a) == 3) {
            if (std::abs(x - pose.x) < 1e-6 && std::abs(y - pose.y) < 1e-6 &&
                rprtest::angle_gap(a, pose.alpha) < 1e-6)
                found = true;
        }
    }
    EXPECT_TRUE(found) << r.out;
}

TEST_F(CliTest, EveryCommandIsByteDeterministic) {
    struct Case {
        std::string name;
        std::string args;   // %1 / %2 replaced by the output prefix
        std::vector<std::string> products;
    };
    const std::vector<Case> cases = {
        {"slice", "slice " + kGeom + " --rho1 17 --n-theta1 120 --n-alpha 120 --gnuplot -o %1",
         {".csv", ".gp", ".manifest.json"}},
        {"sweep", "sweep " + kGeom + " --rho1 15:16:0.5 --n-theta1 120 --n-alpha 120 --threads 2 -o %1",
         {".csv", ".ply", ".manifest.json"}},
        {"maxbox", "maxbox " + path("det_cloud.csv") +
                       " --center 15,20,20 --domain 14:17,0:60,0:60 --security 0.05 --trace -o %1",
         {".txt", ".trace.csv", ".manifest.json"}},
        {"image", "image " + kGeom + " " + path("det_box.txt") + " --n 3 --ply -o %1",
         {".csv", ".ply", ".manifest.json"}},
    };

    // fixtures for maxbox/image
    ASSERT_EQ(run("sweep " + kGeom + " --rho1 14:17:0.5 --n-theta1 120 --n-alpha 120 -o " +
                  path("det_cloud"))
                  .exit_code,
              0);
    ASSERT_EQ(run("maxbox " + path("det_cloud.csv") +
                  " --center 15,20,20 --domain 14:17,0:60,0:60 --security 0.05 -o " +
                  path("det_box"))
                  .exit_code,
              0);

    for (const auto& c : cases) {
        auto subst = [&](std::string s, const std::string& prefix) {
            const auto posn = s.find("%1");
            s.replace(posn, 2, prefix);
            return s;
        };
        const std::string p1 = path("d1_" + c.name);
        const std::string p2 = path("d2_" + c.name);
        const auto r1 = run(subst(c.args, p1));
        const auto r2 = run(subst(c.args, p2));
        ASSERT_EQ(r1.exit_code, 0) << c.name << ": " << r1.err;
        ASSERT_EQ(r2.exit_code, 0) << c.name << ": " << r2.err;
        for (const auto& suffix : c.products) {
            const std::string a = slurp(p1 + suffix);
            std::string b = slurp(p2 + suffix);
            ASSERT_FALSE(a.empty()) << c.name << suffix;
            // outputs embed their own path prefix; normalize before comparing
            std::size_t at;
            while ((at = b.find("d2_" + c.name)) != std::string::npos)
                b.replace(at, c.name.size() + 3, "d1_" + c.name);
            EXPECT_EQ(a, b) << c.name << suffix << " differs between reruns";
        }
    }

    // check is stdout-only; compare the streams
    const auto c1 = run("check " + kGeom + " --joints 17,18,20");
    const auto c2 = run("check " + kGeom + " --joints 17,18,20");
    EXPECT_EQ(c1.out, c2.out);
}

}  // namespace
