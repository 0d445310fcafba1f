#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "constraints/runner.hpp"
#include "helpers.hpp"

using namespace constraints;
using namespace testutil;

namespace {

std::filesystem::path temp_dir(const std::string& tag) {
    auto p = std::filesystem::temp_directory_path() / ("constraints_cli_" + tag);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

RunConfig config_from_string(const std::string& text) {
    std::stringstream ss(text);
    return parse_config_text(ss, "<inline>");
}

std::vector<char> slurp(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    return std::vector<char>(std::istreambuf_iterator<char>(is), {});
}

}  // namespace

TEST_CASE("config parsing") {
    SECTION("sections and keys") {
        RunConfig cfg = config_from_string(
            "[run]\nmode = stability\nn = 3\nm = 8\nout = /tmp/x\n"
            "[seed]\npreset = cmc\nparity = true\np = 3.4\nt = 1.9\n"
            "[solve]\ntol = 1e-9\nlambda_checkpoints = 0.01 0.02\n");
        CHECK(cfg.mode == "stability");
        CHECK(cfg.m == 8);
        CHECK(cfg.preset == "cmc");
        CHECK(cfg.parity);
        CHECK(cfg.p == 3.4);
        CHECK(cfg.tol == 1e-9);
        REQUIRE(cfg.lambda_checkpoints.size() == 2);
        CHECK(cfg.lambda_checkpoints[1] == 0.02);
        CHECK(cfg.raw.at("seed.preset") == "cmc");
    }

    SECTION("unknown keys and malformed lines are rejected") {
        CHECK_THROWS_AS(config_from_string("nonsense = 1\n"), ConfigError);
        CHECK_THROWS_AS(config_from_string("[run]\nmode stability\n"), ConfigError);
        CHECK_THROWS_AS(config_from_string("[run]\nm = eight\n"), ConfigError);
    }

    SECTION("validation") {
        RunConfig cfg = config_from_string("[run]\nmode = warp\n");
        CHECK_THROWS_AS(validate_config(cfg), ConfigError);
        cfg = config_from_string("[run]\nmode = check\nm = 7\n");
        CHECK_THROWS_AS(validate_config(cfg), ConfigError);
        cfg = config_from_string("[run]\nmode = check\n[seed]\np = 2\n");
        CHECK_THROWS_AS(validate_config(cfg), ConfigError);
    }
}

TEST_CASE("field literals") {
    Grid g(3, 8);
    ScalarField f = parse_field_literal(g, "const 1 + cos 0.5 1 0 0 + sin 0.25 0 2 0");
    ScalarField want = make_scalar(g, [](const std::vector<double>& x) {
        return 1.0 + 0.5 * std::cos(2.0 * M_PI * x[0]) +
               0.25 * std::sin(4.0 * M_PI * x[1]);
    });
    CHECK(max_abs_diff(f, want) < 1e-15);

    CHECK_THROWS_AS(parse_field_literal(g, "cos 0.5 1 0"), ConfigError);  // missing freq
    CHECK_THROWS_AS(parse_field_literal(g, "tanh 1 0 0 0"), ConfigError);
    CHECK_THROWS_AS(parse_field_literal(g, "   "), ConfigError);
}

TEST_CASE("bootstrap mode emits the closed-form table") {
    auto dir = temp_dir("bootstrap");
    RunConfig cfg = config_from_string("[run]\nmode = bootstrap\nn = 3\n[seed]\np = 3.2\nt = 2\n");
    cfg.out_dir = dir.string();
    RunOutcome out = run(cfg);
    REQUIRE(out.exit_code == 0);
    const auto& rows = out.report["bootstrap"]["rows"];
    for (const auto& row : rows) {
        const int i = row["i"].get<int>();
        CHECK(row["q"].get<double>() == Catch::Approx(std::pow(2.0, i + 1) + 2.0));
    }
    CHECK(std::filesystem::exists(dir / "report.json"));
}

TEST_CASE("check mode accepts a stored exact solution") {
    auto dir = temp_dir("check");
    Grid g(3, 8);
    const double s0 = 0.2;
    const double phi_c = std::pow(1.5 * s0 * s0, 1.0 / 12.0);
    save_field((dir / "phi.cfld").string(), ScalarField(g, phi_c));

    RunConfig cfg = config_from_string(
        "[run]\nmode = check\nn = 3\nm = 8\n[seed]\ntau = const 1\neta = const 0.5\n"
        "sigma_parallel = 0.2\n");
    cfg.phi_file = (dir / "phi.cfld").string();
    cfg.out_dir = (dir / "out").string();
    RunOutcome out = run(cfg);
    CHECK(out.exit_code == 0);
    CHECK(out.report["check"]["passed"] == true);

    // a spoiled solution fails the thresholds -> exit 2
    save_field((dir / "bad.cfld").string(), ScalarField(g, 1.1 * phi_c));
    cfg.phi_file = (dir / "bad.cfld").string();
    RunOutcome bad = run(cfg);
    CHECK(bad.exit_code == 2);
    CHECK(bad.report["check"]["passed"] == false);
}

TEST_CASE("stability mode exit codes") {
    auto dir = temp_dir("stab");

    SECTION("degenerate tau named and mapped to exit 3") {
        RunConfig cfg = config_from_string(
            "[run]\nmode = stability\nn = 3\nm = 8\n"
            "[seed]\ntau = const 0\neta = const 0.5\nsigma_parallel = 0.1\n");
        cfg.out_dir = dir.string();
        RunOutcome out = run(cfg);
        CHECK(out.exit_code == 3);
        const std::string msg = out.report["error"].get<std::string>();
        CHECK(msg.find("tau") != std::string::npos);
    }

    SECTION("feasible preset exits 0") {
        RunConfig cfg = config_from_string(
            "[run]\nmode = stability\nn = 3\nm = 8\n[seed]\npreset = parity-smooth\n"
            "[solve]\nprobe_count = 8\nsobolev_trials = 32\n");
        cfg.out_dir = dir.string();
        RunOutcome out = run(cfg);
        CHECK(out.exit_code == 0);
        CHECK(out.report["stability"]["feasible"] == true);
    }
}

TEST_CASE("config errors map to exit 4") {
    auto dir = temp_dir("badcfg");
    RunConfig cfg;
    cfg.mode = "no-such-mode";
    cfg.out_dir = dir.string();
    CHECK(run(cfg).exit_code == 4);

    RunConfig missing = config_from_string("[run]\nmode = check\nn = 3\nm = 8\n"
                                           "[seed]\ntau = const 1\neta = const 0.5\n");
    missing.out_dir = dir.string();
    missing.phi_file = (dir / "does_not_exist.cfld").string();
    CHECK(run(missing).exit_code == 2);  // io failure surfaces as runtime error
}

TEST_CASE("vector mode reports the kernel obstruction") {
    auto dir = temp_dir("vector");
    // even tau, odd-breaking u: the source u grad tau has a mean
    RunConfig cfg = config_from_string(
        "[run]\nmode = vector\nn = 3\nm = 8\n"
        "[seed]\ntau = const 1 + cos 0.3 1 0 0\neta = const 0.5\n"
        "u = const 1 + sin 0.5 1 0 0\n");
    cfg.out_dir = dir.string();
    RunOutcome out = run(cfg);
    REQUIRE(out.exit_code == 0);
    CHECK(out.report["obstruction_max"].get<double>() > 1e-3);

    // parity-respecting u: obstruction at rounding level
    RunConfig even = config_from_string(
        "[run]\nmode = vector\nn = 3\nm = 8\n"
        "[seed]\ntau = const 1 + cos 0.3 1 0 0\neta = const 0.5\n"
        "u = const 1 + cos 0.5 1 0 0\n");
    even.out_dir = dir.string();
    RunOutcome out2 = run(even);
    REQUIRE(out2.exit_code == 0);
    CHECK(out2.report["obstruction_max"].get<double>() < 1e-14);
}

TEST_CASE("make-tt emits a valid TT tensor") {
    auto dir = temp_dir("maketT");
    RunConfig cfg = config_from_string(
        "[run]\nmode = make-tt\nn = 3\nm = 8\n"
        "[seed]\neta = const 0.5 + cos 0.05 0 1 0\n"
        "sigma_00 = cos 0.3 0 1 0\nsigma_01 = cos 0.2 0 0 1\nsigma_11 = cos -0.2 1 0 0\n"
        "sigma_scale = 0.05\n");
    cfg.out_dir = dir.string();
    RunOutcome out = run(cfg);
    REQUIRE(out.exit_code == 0);
    CHECK(out.report["trace_linf"].get<double>() < 1e-12);
    CHECK(out.report["divergence_l2"].get<double>() < 1e-8);
    CHECK(out.report["sigma_l2"].get<double>() == Catch::Approx(0.05).epsilon(1e-10));

    SymTensorField sigma = load_sym_tensor((dir / "sigma.cfld").string());
    CHECK(l2_norm(sigma) == Catch::Approx(0.05).epsilon(1e-10));
}

TEST_CASE("identical configs give bitwise-identical artifacts") {
    auto dir1 = temp_dir("det1");
    auto dir2 = temp_dir("det2");
    const std::string text =
        "[run]\nmode = fixed-point\nn = 3\nm = 8\n[seed]\npreset = parity-smooth\n"
        "sigma_scale = 0.03\n[solve]\nprobe_count = 8\nsobolev_trials = 32\n";
    RunConfig cfg1 = config_from_string(text);
    cfg1.out_dir = dir1.string();
    RunConfig cfg2 = config_from_string(text);
    cfg2.out_dir = dir2.string();

    RunOutcome a = run(cfg1);
    RunOutcome b = run(cfg2);
    REQUIRE(a.exit_code == 0);
    REQUIRE(b.exit_code == 0);

    for (const std::string name : {"phi.cfld", "w.cfld", "sigma.cfld"}) {
        auto bytes1 = slurp(dir1 / name);
        auto bytes2 = slurp(dir2 / name);
        REQUIRE(!bytes1.empty());
        CHECK(bytes1 == bytes2);
    }
    // reports agree on every numeric field except the timing
    Json ra = a.report, rb = b.report;
    ra.erase("elapsed_seconds");
    rb.erase("elapsed_seconds");
    CHECK(ra == rb);
}

TEST_CASE("shipped configs parse") {
    for (const std::string name :
         {"constant.cfg", "parity_smooth.cfg", "cmc.cfg", "continuation.cfg", "bootstrap.cfg"}) {
        const auto path = std::filesystem::path(CONFIG_DIR) / name;
        REQUIRE(std::filesystem::exists(path));
        RunConfig cfg = parse_config(path.string());
        CHECK_NOTHROW(validate_config(cfg));
    }
}

TEST_CASE("results do not depend on the thread cap") {
    // CONSTRAINTS_NUM_THREADS only changes the probe fan-out; the
    // aggregated numbers must be identical.
    auto dir1 = temp_dir("thr1");
    auto dir2 = temp_dir("thr2");
    const std::string cfg_path = (dir1 / "cfg").string();
    {
        std::ofstream os(cfg_path);
        os << "[run]\nmode = stability\nn = 3\nm = 8\n[seed]\npreset = parity-smooth\n"
              "[solve]\nprobe_count = 16\nsobolev_trials = 32\n";
    }
    auto invoke = [&](int threads, const std::filesystem::path& out) {
        std::ostringstream cmd;
        cmd << "CONSTRAINTS_NUM_THREADS=" << threads << " " << CLI_BINARY << " --config "
            << cfg_path << " --out " << out.string() << " > /dev/null 2>&1";
        return std::system(cmd.str().c_str());
    };
    REQUIRE(invoke(1, dir1 / "out") == 0);
    REQUIRE(invoke(4, dir2 / "out") == 0);

    std::ifstream f1(dir1 / "out" / "report.json");
    std::ifstream f2(dir2 / "out" / "report.json");
    Json r1 = Json::parse(f1);
    Json r2 = Json::parse(f2);
    r1.erase("elapsed_seconds");
    r2.erase("elapsed_seconds");
    CHECK(r1 == r2);
}
