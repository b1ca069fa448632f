#include "gplab/io.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string cli_path() {
    const char* p = std::getenv("GPLAB_CLI");
    REQUIRE_MESSAGE(p != nullptr, "GPLAB_CLI must point at the CLI binary");
    return p;
}

struct RunResult {
    int status = 0;
    std::string out_dir;
};

RunResult run_cli(const std::string& args, const fs::path& out_root) {
    const fs::path stamp = out_root / "stdout.txt";
    std::ostringstream cmd;
    cmd << cli_path() << " " << args << " --out " << (out_root / "runs").string() << " > "
        << stamp.string() << " 2> " << (out_root / "stderr.txt").string();
    RunResult r;
    r.status = std::system(cmd.str().c_str());
    std::ifstream in(stamp);
    std::getline(in, r.out_dir);
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempRoot {
    fs::path path;
    TempRoot() {
        path = fs::temp_directory_path() /
               ("gplab_cli_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempRoot() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("strato-check smooth fixture reaches 1e-10") {
    TempRoot tmp;
    RunResult r = run_cli("--kind strato-check", tmp.path);
    REQUIRE(r.status == 0);
    const json summary = json::parse(slurp(fs::path(r.out_dir) / "summary.json"));
    CHECK(summary.at("final_abs_err").get<double>() <= 1e-10);
    // manifest echoes the resolved config
    const json manifest = json::parse(slurp(fs::path(r.out_dir) / "manifest.json"));
    CHECK(manifest.at("schema").get<int>() == 1);
    CHECK(manifest.at("config").at("fn").get<std::string>() == "prod12");
    // convergence CSV has the documented header
    const std::string csv = slurp(fs::path(r.out_dir) / "convergence.csv");
    CHECK(csv.rfind("level,mesh,value,ref,abs_err,observed_order", 0) == 0);
}

TEST_CASE("wick-check p=(1,1) fixture deviation below 1e-12") {
    TempRoot tmp;
    RunResult r = run_cli("--kind wick-check --p 1,1 --n-configs 40", tmp.path);
    REQUIRE(r.status == 0);
    const json rep = json::parse(slurp(fs::path(r.out_dir) / "wick_report.json"));
    CHECK(rep.at("max_coeff_dev").get<double>() <= 1e-12);
}

TEST_CASE("duality n=0 fixture has |z| <= 3") {
    TempRoot tmp;
    RunResult r = run_cli("--kind duality --n 64 --n-samples 4000 --workers 2", tmp.path);
    REQUIRE(r.status == 0);
    const json rep = json::parse(slurp(fs::path(r.out_dir) / "duality.json"));
    CHECK(std::abs(rep.at("z").get<double>()) <= 3.0);
    CHECK(rep.at("rhs").get<double>() == 0.0);
}

TEST_CASE("sample emits the ensemble CSV and sidecar") {
    TempRoot tmp;
    RunResult r = run_cli("--kind sample --n 8 --n-samples 3 --d 2 --H 0.4", tmp.path);
    REQUIRE(r.status == 0);
    const std::string csv = slurp(fs::path(r.out_dir) / "ensemble.csv");
    CHECK(csv.rfind("sample,i,t,x_1,x_2", 0) == 0);
    const json side = json::parse(slurp(fs::path(r.out_dir) / "ensemble.json"));
    CHECK(side.at("H").get<double>() == 0.4);
    CHECK(side.at("n_samples").get<int>() == 3);
}

TEST_CASE("unknown function id fails before any output") {
    TempRoot tmp;
    RunResult r = run_cli("--kind strato-check --fn nope", tmp.path);
    CHECK(r.status != 0);
    const std::string err = slurp(tmp.path / "stderr.txt");
    const json j = json::parse(err);
    CHECK(j.at("error").get<std::string>().find("nope") != std::string::npos);
    CHECK(!fs::exists(tmp.path / "runs"));
}

TEST_CASE("run directories are never overwritten") {
    TempRoot tmp;
    RunResult first = run_cli("--kind sample --n 4 --n-samples 2", tmp.path);
    REQUIRE(first.status == 0);
    RunResult second = run_cli("--kind sample --n 4 --n-samples 2", tmp.path);
    CHECK(second.status != 0);
    const std::string err = slurp(tmp.path / "stderr.txt");
    CHECK(err.find("exists") != std::string::npos);
}

TEST_CASE("config file plus override resolves and hashes deterministically") {
    TempRoot tmp;
    gplab::write_text_file((tmp.path / "exp.cfg").string(),
                           "kind = sample\nn = 8\nn_samples = 2\nseed = 9\n# comment\n");
    RunResult a = run_cli("--config " + (tmp.path / "exp.cfg").string(), tmp.path);
    REQUIRE(a.status == 0);
    const json ma = json::parse(slurp(fs::path(a.out_dir) / "manifest.json"));
    CHECK(ma.at("config").at("seed").get<std::string>() == "9");

    TempRoot tmp2;
    RunResult b = run_cli("--config " + (tmp.path / "exp.cfg").string() + " --seed 10", tmp2.path);
    REQUIRE(b.status == 0);
    const json mb = json::parse(slurp(fs::path(b.out_dir) / "manifest.json"));
    CHECK(mb.at("config").at("seed").get<std::string>() == "10");
    CHECK(ma.at("config_hash").get<std::string>() != mb.at("config_hash").get<std::string>());
}

TEST_CASE("sko-check and compare emit the documented tables") {
    TempRoot tmp;
    RunResult r =
        run_cli("--kind sko-check --n 32 --levels 2 --n-samples 20 --workers 2", tmp.path);
    REQUIRE(r.status == 0);
    const std::string csv = slurp(fs::path(r.out_dir) / "breakdown.csv");
    CHECK(csv.rfind("path_id,level,theta1,theta2,theta3,theta_tilde,total,rhs,abs_err", 0) == 0);

    TempRoot tmp2;
    RunResult c = run_cli("--kind compare --n 64 --levels 2 --n-samples 50", tmp2.path);
    REQUIRE(c.status == 0);
    const std::string wcsv = slurp(fs::path(c.out_dir) / "weighted.csv");
    CHECK(wcsv.rfind("level,cells,mean_v2_one", 0) == 0);
}

TEST_CASE("lift-check writes residual report and a round-trippable lift") {
    TempRoot tmp;
    RunResult r = run_cli("--kind lift-check --n 32 --N 2 --d 2", tmp.path);
    REQUIRE(r.status == 0);
    const json rep = json::parse(slurp(fs::path(r.out_dir) / "lift_report.json"));
    CHECK(rep.at("multiplicativity").at("max_rel").get<double>() <= 1e-10);
    CHECK(rep.at("geometricity").at("max_rel").get<double>() <= 1e-10);
    gplab::RoughLift lift = gplab::lift_from_json(slurp(fs::path(r.out_dir) / "lift.json"));
    CHECK(lift.dim() == 2);
}
