#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "detroll/io.hpp"

namespace fs = std::filesystem;
using namespace detroll;

namespace {

struct Outcome {
    int code = -1;
    std::string output;  // stdout + stderr
};

Outcome run(const std::string& args) {
    const std::string cmd = std::string(DETROLL_CLI) + " " + args + " 2>&1";
    Outcome o;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    while (std::fgets(buf, sizeof buf, pipe)) o.output += buf;
    const int status = pclose(pipe);
    o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return o;
}

const std::string kConfigs = DETROLL_CONFIGS;

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name)
        : path(fs::temp_directory_path() / ("detroll_cli_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& f) const { return (path / f).string(); }
};

}  // namespace

TEST_CASE("help and unknown flags") {
    CHECK(run("--help").code == 0);
    const auto o = run("fit --matrix x.csv --out y.json --bogus");
    CHECK(o.code == 1);
    CHECK(run("").code == 1);
    const auto h = run("fit --help");
    CHECK(h.code == 0);
    for (const char* flag : {"--matrix", "--restarts", "--tol", "--max-iters", "--seed",
                             "--skip-validation", "--out"})
        CHECK(h.output.find(flag) != std::string::npos);
}

TEST_CASE("simulate: default scenario writes three CSVs deterministically") {
    TempDir dir("simulate");
    REQUIRE(run("simulate --scenario " + kConfigs + "/default_scenario.json --seed 7 --out " +
                dir / "a").code == 0);
    REQUIRE(run("simulate --scenario " + kConfigs + "/default_scenario.json --seed 7 --out " +
                dir / "b").code == 0);
    for (const char* f : {"matrix.csv", "gold.csv", "roles.csv"})
        CHECK(io::read_file(dir.path / "a" / f) == io::read_file(dir.path / "b" / f));
    const auto lm = io::parse_matrix_csv(io::read_file(dir.path / "a" / "matrix.csv"));
    CHECK(lm.matrix.n_cells() == 1000);
}

TEST_CASE("simulate: invalid scenario exits 1 with the field name") {
    TempDir dir("simulate_bad");
    io::write_file(dir / "s.json", R"({"raters_per_utterance": 60})");
    const auto o = run("simulate --scenario " + dir / "s.json" + " --seed 1 --out " + dir / "o");
    CHECK(o.code == 1);
    CHECK(o.output.find("raters_per_utterance") != std::string::npos);
}

TEST_CASE("missing input file exits 2") {
    TempDir dir("io");
    CHECK(run("fit --matrix " + dir / "none.csv" + " --out " + dir / "f.json").code == 2);
}

TEST_CASE("fit: Table 1 requires the skip flag") {
    TempDir dir("table1");
    const auto o = run("fit --matrix " + kConfigs + "/table1.csv --out " + dir / "f.json");
    CHECK(o.code == 1);
    CHECK(o.output.find("at least twice the columns") != std::string::npos);

    const auto s = run("fit --matrix " + kConfigs + "/table1.csv --skip-validation --out " +
                       dir / "f.json");
    REQUIRE(s.code == 0);
    CHECK(s.output.find("WARNING") != std::string::npos);
    const auto j = io::read_json(dir / "f.json");
    const auto post = j.at("posteriors").get<std::vector<double>>();
    const auto ids = j.at("utterance_ids").get<std::vector<std::string>>();
    REQUIRE(ids == std::vector<std::string>{"essay1", "essay2", "essay3", "essay4", "essay5"});
    const bool side = post[0] >= 0.5;
    CHECK((post[1] >= 0.5) == side);
    CHECK((post[2] >= 0.5) != side);
    CHECK((post[3] >= 0.5) != side);
    CHECK((post[4] >= 0.5) != side);
}

TEST_CASE("fit + impute on simulated data") {
    TempDir dir("pipeline");
    REQUIRE(run("simulate --scenario " + kConfigs + "/default_scenario.json --seed 3 --out " +
                dir / "sim").code == 0);
    const auto f = run("fit --matrix " + dir / "sim/matrix.csv" + " --seed 5 --out " + dir / "fit.json");
    REQUIRE(f.code == 0);
    const auto j = io::read_json(dir / "fit.json");
    CHECK(j.at("converged") == true);

    const auto lca = run("impute --matrix " + dir / "sim/matrix.csv" + " --fit " + dir / "fit.json" +
                         " --gold " + dir / "sim/gold.csv" + " --out " + dir / "lca.csv");
    REQUIRE(lca.code == 0);
    const auto mv = run("impute --matrix " + dir / "sim/matrix.csv" + " --mv --gold " +
                        dir / "sim/gold.csv" + " --out " + dir / "mv.csv");
    REQUIRE(mv.code == 0);
    const auto acc = [](const std::string& out) {
        const auto pos = out.find("imputation_accuracy ");
        REQUIRE(pos != std::string::npos);
        return std::stod(out.substr(pos + 20));
    };
    CHECK(acc(lca.output) > acc(mv.output));
    const auto side = io::read_json(dir / "lca.csv.json");
    CHECK(side.contains("safe_cluster"));
    CHECK(io::read_file(dir / "lca.csv").rfind("utterance_id,method,label,tied\n", 0) == 0);

    CHECK(run("impute --matrix " + dir / "sim/matrix.csv" + " --out " + dir / "x.csv").code == 1);
    CHECK(run("impute --matrix " + dir / "sim/matrix.csv" + " --mv --fit " + dir / "fit.json" +
              " --out " + dir / "x.csv").code == 1);
}

TEST_CASE("impute: noiseless simulation gives accuracy 1") {
    TempDir dir("noiseless");
    io::write_file(dir / "s.json", R"({"troll_prevalence": 0, "helper_corrupt_rate": 0})");
    REQUIRE(run("simulate --scenario " + dir / "s.json" + " --seed 1 --out " + dir / "sim").code == 0);
    REQUIRE(run("fit --matrix " + dir / "sim/matrix.csv" + " --out " + dir / "fit.json").code == 0);
    const auto o = run("impute --matrix " + dir / "sim/matrix.csv" + " --fit " + dir / "fit.json" +
                       " --gold " + dir / "sim/gold.csv" + " --out " + dir / "lca.csv");
    REQUIRE(o.code == 0);
    CHECK(o.output.find("imputation_accuracy 1\n") != std::string::npos);
}

TEST_CASE("impute --mv: unanimous rows keep their label") {
    TempDir dir("mv");
    io::write_file(dir / "m.csv", "utterance_id,user_id,label\na,x,1\na,y,1\nb,x,0\nb,y,0\n");
    REQUIRE(run("impute --matrix " + dir / "m.csv" + " --mv --out " + dir / "o.csv").code == 0);
    CHECK(io::read_file(dir / "o.csv") == "utterance_id,method,label,tied\na,MV,1,0\nb,MV,0,0\n");
}

TEST_CASE("impute: fit from a different matrix is a row mismatch") {
    TempDir dir("mismatch");
    REQUIRE(run("fit --matrix " + kConfigs + "/table1.csv --skip-validation --out " + dir / "f.json")
                .code == 0);
    io::write_file(dir / "m.csv", "utterance_id,user_id,label\na,x,1\na,y,1\nb,x,0\nb,y,0\n");
    const auto o = run("impute --matrix " + dir / "m.csv" + " --fit " + dir / "f.json" + " --out " +
                       dir / "o.csv");
    CHECK(o.code == 1);
}

TEST_CASE("experiment: smoke grid, malformed config, report") {
    TempDir dir("experiment");
    const auto start = std::chrono::steady_clock::now();
    const auto o = run("experiment --grid " + kConfigs + "/grid.json --runs 20 --jobs 2 --out " +
                       dir / "rep");
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    REQUIRE(o.code == 0);
    CHECK(secs < 60.0);
    const auto summary = io::read_file(dir.path / "rep" / "summary.csv");
    CHECK(std::count(summary.begin(), summary.end(), '\n') == 17);
    CHECK_FALSE(fs::exists(dir.path / "rep.tmp"));

    REQUIRE(run("report --runs " + dir / "rep/runs.csv" + " --out " + dir / "rep2").code == 0);
    CHECK(io::read_file(dir.path / "rep2" / "summary.csv") == summary);
    CHECK(io::read_file(dir.path / "rep2" / "runs.csv") ==
          io::read_file(dir.path / "rep" / "runs.csv"));

    io::write_file(dir / "bad.json", "{\"scenarios\": [ {\"pool_size\": 5,, } ]}");
    const auto bad = run("experiment --grid " + dir / "bad.json" + " --out " + dir / "x");
    CHECK(bad.code == 1);
    CHECK(bad.output.find("line 1, column") != std::string::npos);
    CHECK_FALSE(fs::exists(dir.path / "x"));
}
