#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "mmbm/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kM1Json = R"({"Q": [[0.0]], "mu": [-1.0], "sigma2": [1.0], "b": 1.0})";
const char* kM2Json =
    R"({"Q": [[-1.0, 1.0], [1.0, -1.0]], "mu": [1.0, -2.0], "sigma2": [1.0, 1.0], "b": 1.0})";
const char* kBadQJson = R"({"Q": [[-1.0, 2.0], [1.0, -1.0]], "mu": [-1.0, -1.0],
                            "sigma2": [1.0, 1.0], "b": 1.0})";

struct CliResult {
    int exit_code = -1;
    std::string stderr_text;
};

fs::path tmp_dir() {
    const fs::path dir = fs::path(TEST_TMP_DIR);
    fs::create_directories(dir);
    return dir;
}

fs::path write_model(const std::string& name, const std::string& text) {
    const fs::path path = tmp_dir() / name;
    std::ofstream out(path);
    out << text;
    return path;
}

CliResult run_cli(const std::string& args) {
    const fs::path errfile = tmp_dir() / "stderr.txt";
    const std::string cmd = std::string(MMBMQ_BIN) + " " + args + " > /dev/null 2> " +
                            errfile.string();
    CliResult res;
    const int rc = std::system(cmd.c_str());
    res.exit_code = WEXITSTATUS(rc);
    std::ifstream err(errfile);
    std::stringstream ss;
    ss << err.rdbuf();
    res.stderr_text = ss.str();
    return res;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json load_json(const fs::path& p) { return json::parse(slurp(p)); }

int count_lines(const std::string& text) {
    int lines = 0;
    for (char c : text) lines += (c == '\n');
    return lines;
}

}  // namespace

TEST_CASE("csv formatting round-trips doubles exactly") {
    for (double v : {1.0 / 3.0, 2.313035857063521e-5, -1.7976931348623157e308, 0.0}) {
        CHECK(std::stod(mmbm::fmt17(v)) == v);
    }
}

TEST_CASE("model JSON schema errors are input errors") {
    using mmbm::parse_model_json;
    CHECK_THROWS_AS(parse_model_json("{"), mmbm::SolverError);
    CHECK_THROWS_AS(parse_model_json(R"({"Q": [[0.0]], "mu": [-1.0, 2.0],
                                         "sigma2": [1.0], "b": 1.0})"),
                    mmbm::SolverError);
    CHECK_THROWS_AS(parse_model_json(R"({"Q": [[0.0]], "mu": [-1.0]})"), mmbm::SolverError);
    const mmbm::MmbmModel ok =
        parse_model_json(R"({"Q": [[0.0]], "mu": [-1.0], "sigma2": [1.0], "b": 1.0})");
    CHECK(ok.m == 1);
}

TEST_CASE("cli solve writes the scalar density and summary") {
    const fs::path model = write_model("m1.json", kM1Json);
    const fs::path out = tmp_dir() / "solve_m1";
    const CliResult res = run_cli("solve " + model.string() + " --out-dir " + out.string());
    REQUIRE(res.exit_code == 0);

    const json summary = load_json(out / "summary.json");
    CHECK(summary.at("limit").get<bool>());
    CHECK(std::abs(summary.at("density_at_0").get<double>() - 2.313035) < 1e-6);
    CHECK(std::abs(summary.at("density_at_b").get<double>() - 0.313035) < 1e-6);
    for (const auto& v : summary.at("mass0")) CHECK(v.get<double>() == 0.0);

    const json manifest = load_json(out / "manifest.json");
    CHECK(manifest.at("command") == "solve");
    CHECK(manifest.at("outputs").size() >= 3);
    for (const auto& f : manifest.at("outputs")) {
        CHECK(fs::exists(f.get<std::string>()));
    }
}

TEST_CASE("cli solve honors the grid option") {
    const fs::path model = write_model("m1.json", kM1Json);
    const fs::path out = tmp_dir() / "solve_grid";
    const CliResult res =
        run_cli("solve " + model.string() + " --grid 10 --out-dir " + out.string());
    REQUIRE(res.exit_code == 0);
    const std::string csv = slurp(out / "density.csv");
    CHECK(count_lines(csv) == 11);  // header + 10 rows

    // strictly increasing x
    std::istringstream ss(csv);
    std::string line;
    std::getline(ss, line);
    double prev = -1.0;
    while (std::getline(ss, line)) {
        const double x = std::stod(line.substr(0, line.find(',')));
        CHECK(x > prev);
        prev = x;
    }
}

TEST_CASE("cli rejects an invalid generator with exit 2") {
    const fs::path model = write_model("bad.json", kBadQJson);
    const CliResult res = run_cli("solve " + model.string() + " --out-dir " +
                                  (tmp_dir() / "bad").string());
    CHECK(res.exit_code == 2);
    const json err = json::parse(res.stderr_text);
    CHECK(err.at("error") == "NotAGenerator");
}

TEST_CASE("cli fluid reports masses and the alt-route discrepancy") {
    const fs::path model = write_model("m2.json", kM2Json);
    const fs::path out = tmp_dir() / "fluid_m2";
    const CliResult res = run_cli("fluid " + model.string() +
                                  " --eps 0.05 --check-alt --grid 200 --out-dir " +
                                  out.string());
    REQUIRE(res.exit_code == 0);
    const json summary = load_json(out / "summary.json");
    CHECK(summary.at("discrepancy_alt").get<double>() <= 1e-8);
    for (const auto& v : summary.at("mass0")) CHECK(v.get<double>() >= 0.0);
    for (const auto& v : summary.at("massb")) CHECK(v.get<double>() >= 0.0);
}

TEST_CASE("cli fluid rejects eps beyond the threshold") {
    const fs::path model = write_model("m1.json", kM1Json);
    const CliResult res = run_cli("fluid " + model.string() + " --eps 1.5 --out-dir " +
                                  (tmp_dir() / "fluid_bad").string());
    CHECK(res.exit_code == 2);
    const json err = json::parse(res.stderr_text);
    CHECK(err.at("error") == "EpsTooLarge");
}

TEST_CASE("cli sweep fits the convergence slope") {
    const fs::path model = write_model("m1.json", kM1Json);
    const fs::path out = tmp_dir() / "sweep_m1";
    const CliResult res = run_cli("sweep " + model.string() +
                                  " --eps-list 0.2,0.1,0.05,0.025 --out-dir " + out.string());
    REQUIRE(res.exit_code == 0);
    const json doc = load_json(out / "sweep.json");
    const double slope = doc.at("slope").get<double>();
    CHECK(slope > 0.7);
    CHECK(slope < 1.3);

    const std::string csv = slurp(out / "sweep.csv");
    CHECK(csv.rfind("eps,distance,mass0,massb,cond_N\n", 0) == 0);
    CHECK(count_lines(csv) == 5);
}

TEST_CASE("cli sweep: single eps yields a null slope; unsorted list warns") {
    const fs::path model = write_model("m1.json", kM1Json);
    const fs::path out = tmp_dir() / "sweep_one";
    CliResult res =
        run_cli("sweep " + model.string() + " --eps-list 0.1 --out-dir " + out.string());
    REQUIRE(res.exit_code == 0);
    CHECK(load_json(out / "sweep.json").at("slope").is_null());

    const fs::path out2 = tmp_dir() / "sweep_unsorted";
    res = run_cli("sweep " + model.string() + " --eps-list 0.05,0.2,0.1 --out-dir " +
                  out2.string());
    REQUIRE(res.exit_code == 0);
    CHECK(res.stderr_text.find("warning") != std::string::npos);
    CHECK(load_json(out2 / "sweep.json").at("points").at(0).at("eps").get<double>() == 0.2);
}

TEST_CASE("cli simulate requires eps in fluid mode") {
    const fs::path model = write_model("m1.json", kM1Json);
    const CliResult res = run_cli("simulate " + model.string() + " --mode fluid --out-dir " +
                                  (tmp_dir() / "sim_bad").string());
    CHECK(res.exit_code == 2);
}

TEST_CASE("cli simulate is reproducible byte for byte") {
    const fs::path model = write_model("m1.json", kM1Json);
    const fs::path out1 = tmp_dir() / "sim_a";
    const fs::path out2 = tmp_dir() / "sim_b";
    const std::string common = "simulate " + model.string() +
                               " --mode mmbm --seed 42 --horizon 2000 --burn-in 100 ";
    REQUIRE(run_cli(common + "--out-dir " + out1.string()).exit_code == 0);
    REQUIRE(run_cli(common + "--out-dir " + out2.string()).exit_code == 0);
    CHECK(slurp(out1 / "histogram.csv") == slurp(out2 / "histogram.csv"));

    const json summary = load_json(out1 / "summary.json");
    CHECK(summary.at("ks_vs_closed_form").get<double>() < 0.1);
}

TEST_CASE("cli compare rejects a zero-drift model with exit 2") {
    const fs::path model = write_model(
        "zero_drift.json",
        R"({"Q": [[-1.0, 1.0], [1.0, -1.0]], "mu": [1.0, -1.0], "sigma2": [1.0, 1.0], "b": 1.0})");
    const CliResult res = run_cli("compare " + model.string() + " --out-dir " +
                                  (tmp_dir() / "compare_zero").string());
    CHECK(res.exit_code == 2);
    CHECK(json::parse(res.stderr_text).at("error") == "ZeroMeanDrift");
}

TEST_CASE("cli compare runs the oracle battery on the scalar model") {
    const fs::path model = write_model("m1.json", kM1Json);
    const fs::path out = tmp_dir() / "compare_m1";
    const CliResult res = run_cli("compare " + model.string() +
                                  " --horizon 50000 --step 0.001 --out-dir " + out.string());
    REQUIRE(res.exit_code == 0);
    const json report = load_json(out / "report.json");
    CHECK(report.at("all_pass").get<bool>());
    CHECK(report.at("checks").size() == 4);
}
