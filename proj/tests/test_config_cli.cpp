#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "qstruct/config.hpp"
#include "qstruct/scenario.hpp"

using namespace qstruct;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    REQUIRE(f.good());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string small_er_config(const std::string& outdir) {
    return "scenario = er-demo\n"
           "[physics]\nm1 = 1.0\nm2 = 1.0\n"
           "[state]\nsigma1_sq = 1.0\nsigma2_sq = 2.0\n"
           "[grid]\n"
           "q1_min = -10.0\nq1_max = 10.0\nq1_n = 128\n"
           "q2_min = -10.0\nq2_max = 10.0\nq2_n = 128\n"
           "cm_min = -8.0\ncm_max = 8.0\ncm_n = 128\n"
           "r_min = -12.0\nr_max = 12.0\nr_n = 128\n"
           "[output]\ndir = " +
           outdir + "\n";
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(QSTRUCT_BIN) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string capture_cli(const std::string& args) {
    const std::string tmp = (fs::temp_directory_path() / "qstruct_cli_out.txt").string();
    const std::string cmd = std::string(QSTRUCT_BIN) + " " + args + " > " + tmp + " 2>&1";
    std::system(cmd.c_str());
    return slurp(tmp);
}

}  // namespace

TEST_CASE("parse_config: shipped sg.conf") {
    const auto cfg = parse_config(slurp(std::string(QSTRUCT_CONFIG_DIR) + "/sg.conf"),
                                  Scenario::SgRun);
    CHECK(cfg.physics.m_p == 1836.0);
    CHECK(cfg.physics.m_e == 1.0);
    CHECK(cfg.physics.dt == 0.25);
    CHECK(cfg.physics.steps == 4000);
    CHECK(cfg.physics.grid_cm.n == 256);
    CHECK(cfg.physics.grid_r.n == 128);
    CHECK(cfg.output_dir == "out/sg");
}

TEST_CASE("parse_config: shipped bohm.conf and classical.conf") {
    const auto b = parse_config(slurp(std::string(QSTRUCT_CONFIG_DIR) + "/bohm.conf"),
                                Scenario::BohmRun);
    CHECK(b.bohm.n_traj == 10000);
    CHECK(b.bohm.dt_traj_factor == 0.5);
    CHECK(b.seed == 20160901);

    const auto c = parse_config(slurp(std::string(QSTRUCT_CONFIG_DIR) + "/classical.conf"),
                                Scenario::ClassicalSweep);
    CHECK(c.sweep.sigma2_sq_steps == 8);
    CHECK(c.sweep.quadrature_check);
}

TEST_CASE("parse_config: missing required key is named") {
    std::string text = slurp(std::string(QSTRUCT_CONFIG_DIR) + "/sg.conf");
    const auto pos = text.find("dt = 0.25");
    REQUIRE(pos != std::string::npos);
    text.erase(pos, 9);
    try {
        parse_config(text, Scenario::SgRun);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("time.dt") != std::string::npos);
    }
}

TEST_CASE("parse_config: duplicate key is a parse error with line numbers") {
    std::string text = slurp(std::string(QSTRUCT_CONFIG_DIR) + "/sg.conf");
    text += "\n[time]\ndt = 0.5\n";
    try {
        parse_config(text, Scenario::SgRun);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("duplicate") != std::string::npos);
        CHECK(msg.find("time.dt") != std::string::npos);
        CHECK(msg.find("line") != std::string::npos);
    }
}

TEST_CASE("parse_config: unknown keys rejected, every violation listed") {
    std::string text = slurp(std::string(QSTRUCT_CONFIG_DIR) + "/sg.conf");
    text += "\n[physics]\ntypo_key = 1.0\n";
    const auto pos = text.find("sigma_cm = 0.5");
    text.erase(pos, 14);
    try {
        parse_config(text, Scenario::SgRun);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("physics.typo_key") != std::string::npos);   // unknown
        CHECK(msg.find("state.sigma_cm") != std::string::npos);      // missing
    }
}

TEST_CASE("parse_config: scenario declaration must match the request") {
    const std::string text = small_er_config("/tmp/unused");
    CHECK_THROWS_AS(parse_config(text, Scenario::SgRun), ValidationError);
    CHECK_NOTHROW(parse_config(text, Scenario::ErDemo));
}

TEST_CASE("parse_config: malformed numbers and booleans") {
    std::string text = slurp(std::string(QSTRUCT_CONFIG_DIR) + "/classical.conf");
    text += "\n[sweep]\n";  // reopening a section is fine; duplicates are not
    CHECK_NOTHROW(parse_config(text, Scenario::ClassicalSweep));
    std::string bad = text + "quadrature_check2 = 1\n";
    CHECK_THROWS_AS(parse_config(bad, Scenario::ClassicalSweep), ValidationError);
    std::string bad_num = slurp(std::string(QSTRUCT_CONFIG_DIR) + "/sg.conf");
    const auto pos = bad_num.find("b = 0.011");
    bad_num.replace(pos, 9, "b = zebra");
    CHECK_THROWS_AS(parse_config(bad_num, Scenario::SgRun), ValidationError);
}

TEST_CASE("parse_config: tolerance overrides") {
    std::string text = small_er_config("/tmp/unused");
    text += "[tolerances]\nmin_cmr_entropy = 0.2\n";
    const auto cfg = parse_config(text, Scenario::ErDemo);
    CHECK(cfg.tol.min_cmr_entropy == 0.2);
    CHECK(cfg.tol.product_entropy == 1e-4);  // untouched default
}

TEST_CASE("run_scenario: er-demo writes artifacts and passes") {
    const std::string outdir = (fs::temp_directory_path() / "qstruct_er_unit").string();
    fs::remove_all(outdir);
    const auto cfg = parse_config(small_er_config(outdir), Scenario::ErDemo);
    const auto outcome = run_scenario(cfg);
    CHECK(outcome.exit_code == 0);
    CHECK(fs::exists(outdir + "/summary.json"));
    CHECK(fs::exists(outdir + "/state_ep.json"));
    CHECK(fs::exists(outdir + "/state_ep.csv"));
    CHECK(fs::exists(outdir + "/state_cmr.csv"));
    fs::remove_all(outdir);
}

TEST_CASE("run_scenario: unwritable output directory raises IOError") {
    const auto cfg = parse_config(small_er_config("/proc/qstruct_cannot_write_here"),
                                  Scenario::ErDemo);
    CHECK_THROWS_AS(run_scenario(cfg), IOError);
}

TEST_CASE("cli: --help lists all four scenarios") {
    const std::string help = capture_cli("--help");
    for (const char* name : {"sg-run", "er-demo", "bohm-run", "classical-sweep"})
        CHECK(help.find(name) != std::string::npos);
}

TEST_CASE("cli: exit codes follow the 0/1/2 contract") {
    const std::string outdir = (fs::temp_directory_path() / "qstruct_er_cli").string();
    const std::string conf = (fs::temp_directory_path() / "qstruct_er_cli.conf").string();
    {
        std::ofstream f(conf);
        f << small_er_config(outdir);
    }
    fs::remove_all(outdir);
    CHECK(run_cli("er-demo --config " + conf) == 0);

    // config errors -> 1
    CHECK(run_cli("er-demo --config /nonexistent.conf") == 1);
    CHECK(run_cli("sg-run --config " + conf) == 1);  // scenario mismatch

    // unwritable output -> 1
    CHECK(run_cli("er-demo --config " + conf + " --output /proc/qstruct_nope") == 1);

    // invariant violation -> 2 (impossible entropy floor via tolerance override)
    const std::string strict = (fs::temp_directory_path() / "qstruct_er_strict.conf").string();
    {
        std::ofstream f(strict);
        f << small_er_config(outdir) << "[tolerances]\nmin_cmr_entropy = 10.0\n";
    }
    CHECK(run_cli("er-demo --config " + strict) == 2);

    fs::remove_all(outdir);
    fs::remove(conf);
    fs::remove(strict);
}

TEST_CASE("cli: reruns with identical config produce byte-identical artifacts") {
    const std::string out1 = (fs::temp_directory_path() / "qstruct_rr1").string();
    const std::string out2 = (fs::temp_directory_path() / "qstruct_rr2").string();
    const std::string conf = (fs::temp_directory_path() / "qstruct_rr.conf").string();
    {
        std::ofstream f(conf);
        f << small_er_config(out1);
    }
    fs::remove_all(out1);
    fs::remove_all(out2);
    REQUIRE(run_cli("er-demo --config " + conf) == 0);
    REQUIRE(run_cli("er-demo --config " + conf + " --output " + out2) == 0);
    for (const char* name : {"/summary.json", "/state_ep.csv", "/state_cmr.csv"}) {
        const std::string a = slurp(out1 + name), b = slurp(out2 + name);
        REQUIRE(a == b);
        REQUIRE(!a.empty());
    }
    fs::remove_all(out1);
    fs::remove_all(out2);
    fs::remove(conf);
}
