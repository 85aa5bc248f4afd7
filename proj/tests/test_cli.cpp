#include "doctest.h"

#include <cmath>
#include <sstream>
#include <unistd.h>

#include "commands.hpp"
#include "modfun/errors.hpp"

using namespace modfun;
using namespace modfun::app;

namespace {

const std::string kOscillator = R"(system={"A":[[0,1],[-1,-0.2]],"B":[[0],[1]],"C":[[1,0]]})";

struct Scratch {
    fs::path root;
    Scratch() {
        root = fs::temp_directory_path() / ("modfun_cli_" + std::to_string(::getpid()));
        fs::remove_all(root);
        fs::create_directories(root);
    }
    ~Scratch() { fs::remove_all(root); }
    fs::path operator/(const std::string& s) const { return root / s; }
};

struct Run {
    int code;
    std::string log;
};

Run run(const std::string& command, const std::vector<std::string>& overrides, const fs::path& out,
        std::optional<std::uint64_t> seed = std::nullopt) {
    const RunConfig cfg = load_config(std::nullopt, overrides, out, seed, std::nullopt);
    std::ostringstream log;
    const int code = run_command(command, cfg, log);
    return {code, log.str()};
}

json load_json(const fs::path& p) { return json::parse(read_text(p)); }

std::string quoted(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_CASE("config overrides parse JSON values and dotted keys") {
    const RunConfig cfg = load_config(std::nullopt, {"a.b=3", "name=plain text", "v=[1,2]"}, "o", 5, 0.01);
    CHECK(cfg.params["a"]["b"] == 3);
    CHECK(cfg.params["name"] == "plain text");
    CHECK(cfg.params["v"].size() == 2);
    CHECK(cfg.params["dt"] == 0.01);
    CHECK(cfg.seed == 5);
    CHECK_THROWS_AS(load_config(std::nullopt, {"novalue"}, "o", {}, {}), ValidationError);
}

TEST_CASE("scalar integrator: nullcontrol gives eta = -phi0/T") {
    Scratch s;
    const auto r = run("nullcontrol", {R"(system={"A":[[0]],"B":[[1]],"C":[[1]]})", "phi0=[1]", "horizon_T=1", "dt=0.01"},
                       s / "nc");
    REQUIRE(r.code == 0);
    const SampledSignal eta = sampled_from_json(load_json(s / "nc/pair/eta.json")["density"]);
    REQUIRE(eta.size() == 101);
    for (int k = 0; k < eta.size(); ++k) CHECK(std::abs(eta[k] + 1.0) < 1e-9);
    const json meta = load_json(s / "nc/pair/meta.json");
    CHECK(meta["horizon"] == 1.0);
    CHECK(meta["residual"].get<double>() < 1e-12);
    CHECK(fs::exists(s / "nc/config.json"));
}

TEST_CASE("wave nullcontrol writes the delayed pair and reports the residual") {
    Scratch s;
    const auto r = run("nullcontrol", {"testbed=wave", "nx=128"}, s / "w");
    CHECK(r.code == kNumericalFailure);
    CHECK(r.log.find("exceeds tolerance") != std::string::npos);
    const SampledSignal eta = sampled_from_json(load_json(s / "w/pair/eta.json")["density"]);
    const SampledSignal alpha = read_signal_csv(s / "w/alpha.csv");
    const json summary = load_json(s / "w/summary.json");
    const int i0 = static_cast<int>(std::lround(summary["xi0"].get<double>() / summary["dx"].get<double>()));
    double alpha_max = 0.0;
    for (int k = 0; k < alpha.size(); ++k) {
        alpha_max = std::max(alpha_max, std::abs(alpha[k]));
        if (k + i0 < eta.size()) CHECK(std::abs(eta[k + i0] + alpha[k]) <= 1e-15);
        else CHECK(alpha[k] == 0.0);
    }
    CHECK(alpha_max > 0.5);
    CHECK(summary["transmitted"].get<double>() < summary["residual"].get<double>());
}

TEST_CASE("wave nullcontrol with the point functional succeeds") {
    Scratch s;
    REQUIRE(run("nullcontrol", {"testbed=wave", "phi0=functional"}, s / "f").code == 0);
    const ModulatingPair pair = read_pair(s / "f/pair");
    CHECK(pair.eta.impulses().size() == 1);
    CHECK(pair.mu.impulses().size() == 1);
}

TEST_CASE("heat nullcontrol writes one bundle per basis function") {
    Scratch s;
    const auto r = run("nullcontrol", {"testbed=heat", "nx=9", "ny=9", "basis_degree=2", "horizon_T=0.5", "dt=5e-3"},
                       s / "h");
    CHECK((r.code == 0 || r.code == kNumericalFailure));
    for (int j = 0; j < 6; ++j) CHECK(fs::exists(s / ("h/pair_00" + std::to_string(j)) / "meta.json"));
    CHECK_FALSE(fs::exists(s / "h/pair_006"));
    CHECK(read_csv(s / "h/residuals.csv").rows.rows() == 6);
    CHECK(read_csv(s / "h/basis.csv").rows.rows() == 81);
}

TEST_CASE("estimate: zero data gives zero coefficients, full basis recovers the state") {
    Scratch s;
    REQUIRE(run("nullcontrol", {kOscillator, "targets=\"standard_basis\"", "horizon_T=1"}, s / "nc").code == 0);
    const std::string pairs = "pairs_dir=" + quoted(s / "nc");

    REQUIRE(run("estimate", {kOscillator, pairs, "basis=\"standard\"", "t_end=2", "stride=100"}, s / "zero").code == 0);
    const CsvData zero = read_csv(s / "zero/coeffs.csv");
    CHECK(zero.rows.rows() == 11);
    CHECK(zero.rows.rightCols(2).cwiseAbs().maxCoeff() == 0.0);

    REQUIRE(run("estimate", {kOscillator, pairs, "basis=\"standard\"", "x0=[1,-0.5]", R"(input={"kind":"smooth"})",
                             "t_end=3", "stride=50"},
                s / "full", 11)
                .code == 0);
    const CsvData err = read_csv(s / "full/error_l2.csv");
    CHECK(err.rows.rows() == 41);
    CHECK(err.rows.col(1).maxCoeff() < 1e-5);

    // Same data through the csv path.
    REQUIRE(run("simulate", {kOscillator, "x0=[1,-0.5]", R"(input={"kind":"smooth"})", "t_end=3"}, s / "sim", 11).code == 0);
    const std::string data = R"(data={"u":)" + quoted(s / "sim/u.csv") + R"(,"y":)" + quoted(s / "sim/y.csv") +
                             R"(,"states":)" + quoted(s / "sim/states.csv") + "}";
    REQUIRE(run("estimate", {pairs, "basis=\"standard\"", data, "stride=50"}, s / "csv").code == 0);
    CHECK(read_text(s / "csv/error_l2.csv") == read_text(s / "full/error_l2.csv"));
}

TEST_CASE("estimate rejects bundles with different horizons") {
    Scratch s;
    REQUIRE(run("nullcontrol", {kOscillator, "phi0=[1,0]", "horizon_T=1"}, s / "a").code == 0);
    REQUIRE(run("nullcontrol", {kOscillator, "phi0=[0,1]", "horizon_T=0.5"}, s / "b").code == 0);
    const auto r = run("estimate", {kOscillator, "pairs=[" + quoted(s / "a/pair") + "," + quoted(s / "b/pair") + "]"},
                       s / "est");
    CHECK(r.code == kValidationFailure);
    CHECK(r.log.find("horizon mismatch") != std::string::npos);
    CHECK_FALSE(fs::exists(s / "est"));
}

TEST_CASE("wave feedback: k = 0 conserves energy, k = 1 dissipates") {
    Scratch s;
    REQUIRE(run("feedback", {"testbed=wave", "nx=128", "gain_k=0", "t_end=4"}, s / "k0").code == 0);
    const CsvData e0 = read_csv(s / "k0/energy.csv");
    const double E0 = e0.rows(0, 1);
    CHECK(E0 > 0.0);
    CHECK((e0.rows.col(1).array() - E0).abs().maxCoeff() <= 1e-12 * E0);

    REQUIRE(run("feedback", {"testbed=wave", "nx=128", "gain_k=1", "t_end=4"}, s / "k1").code == 0);
    const CsvData e1 = read_csv(s / "k1/energy.csv");
    CHECK(e1.rows(e1.rows.rows() - 1, 1) <= 0.5 * e1.rows(0, 1));
    CHECK(read_csv(s / "k1/trajectory.csv").header == std::vector<std::string>{"t", "u", "y", "z", "p0"});
}

TEST_CASE("finite-dimensional feedback drives the state to zero") {
    Scratch s;
    REQUIRE(run("feedback", {kOscillator, R"(design={"targets":[[1,1.5]],"horizon_T":0.5})", "gain=[[-2]]", "x0=[1,0]",
                             "t_end=8"},
                s / "fb")
                .code == 0);
    const json summary = load_json(s / "fb/summary.json");
    CHECK(summary["state_norm_final"].get<double>() < 1e-3 * summary["state_norm_at_warmup"].get<double>());
}

TEST_CASE("runs are deterministic for a fixed seed") {
    Scratch s;
    const std::vector<std::string> args{kOscillator, "x0=\"random\"", R"(input={"kind":"smooth","terms":4})", "t_end=1"};
    REQUIRE(run("simulate", args, s / "a", 3).code == 0);
    REQUIRE(run("simulate", args, s / "b", 3).code == 0);
    REQUIRE(run("simulate", args, s / "c", 4).code == 0);
    for (const char* f : {"trajectory.csv", "u.csv", "y.csv", "states.csv", "summary.json"})
        CHECK(read_text(s / "a" / f) == read_text(s / "b" / f));
    CHECK(read_text(s / "a/u.csv") != read_text(s / "c/u.csv"));
}

TEST_CASE("validation and numerical failures write nothing") {
    Scratch s;
    CHECK(run("nullcontrol", {"phi0=[1]"}, s / "a").code == kValidationFailure);
    CHECK(run("nullcontrol", {kOscillator, "phi0=[1,2,3]"}, s / "b").code == kValidationFailure);
    CHECK(run("nullcontrol", {kOscillator, "phi0=[1,0]", "horizon_T=-1"}, s / "c").code == kValidationFailure);
    CHECK(run("simulate", {"testbed=plasma"}, s / "d").code == kValidationFailure);
    CHECK(run("simulate", {"testbed=wave", "dt=0.1"}, s / "e").code == kValidationFailure);
    CHECK(run("unknown", {}, s / "f").code == kValidationFailure);
    // x1 is invisible in y and decoupled from x2.
    const auto r = run("nullcontrol", {R"(system={"A":[[0,0],[0,-1]],"B":[[1],[1]],"C":[[0,1]]})", "phi0=[1,0]"}, s / "g");
    CHECK(r.code == kNumericalFailure);
    for (const char* d : {"a", "b", "c", "d", "e", "f", "g"}) CHECK_FALSE(fs::exists(s / d));
}
