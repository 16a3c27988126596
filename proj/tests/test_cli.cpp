#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "steinshrink/cli.hpp"
#include "steinshrink/errors.hpp"

using namespace steinshrink;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name, const std::string& content) {
    const fs::path dir = fs::temp_directory_path() / "steinshrink_cli_test";
    fs::create_directories(dir);
    const fs::path path = dir / name;
    std::ofstream(path, std::ios::binary) << content;
    return path;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

const char* kConfig =
    R"json({"scenario": "case2", "p": 30, "n": 8, "replications": 100, "seed": 17,
        "estimators": ["EB(b0)", "mST(b1)", "EB(bstar)"]})json";

}  // namespace

TEST_CASE("parse_run_config") {
    const cli::RunConfig rc = cli::parse_run_config(kConfig);
    CHECK(rc.experiment.p == 30);
    CHECK(rc.experiment.master_seed == 17);
    CHECK(rc.experiment.loss == LossEvaluator::Mode::Full);
    CHECK(rc.format == "csv");
    CHECK(cli::parse_run_config(kConfig, std::string("99")).experiment.master_seed == 99);
    CHECK_THROWS_AS(cli::parse_run_config(kConfig, std::string("abc")), ConfigError);
    CHECK_THROWS_AS(cli::parse_run_config(R"({"scenario": "case1", "p": 5, "n": 8, "seed": 1,
        "estimators": ["UB"], "colour": 1})"), ConfigError);
    CHECK_THROWS_AS(cli::parse_run_config(R"({"scenario": "case1", "p": 5, "n": 8, "seed": 1,
        "replications": 1, "estimators": ["UB"]})"), ConfigError);
    CHECK_THROWS_AS(cli::parse_run_config(R"({"scenario": "case1", "p": 5, "n": 8, "seed": -1,
        "estimators": ["UB"]})"), ConfigError);
    CHECK_THROWS_AS(cli::parse_run_config("{not json"), ConfigError);
    const cli::RunConfig sing = cli::parse_run_config(
        R"({"scenario": "singular", "r": 3, "factor_seed": 4, "p": 6, "n": 2, "seed": 1, "estimators": ["JS"]})");
    CHECK(sing.experiment.loss == LossEvaluator::Mode::Singular);
    CHECK(sing.experiment.scenario.r == 3);
}

TEST_CASE("simulate writes identical files for identical configs") {
    const fs::path cfg = temp_file("cfg.json", kConfig);
    const fs::path a = cfg.parent_path() / "a.csv";
    const fs::path b = cfg.parent_path() / "b.csv";
    std::ostringstream out;
    std::ostringstream err;
    cli::SimulateOptions opts;
    opts.config_path = cfg.string();
    opts.out = a.string();
    CHECK(cli::cmd_simulate(opts, out, err) == cli::kOk);
    opts.out = b.string();
    opts.workers = 3;
    CHECK(cli::cmd_simulate(opts, out, err) == cli::kOk);
    const std::string ca = slurp(a);
    CHECK(ca == slurp(b));
    CHECK(std::count(ca.begin(), ca.end(), '\n') == 4);

    const fs::path bad = temp_file("bad.json", R"({"scenario": "case1", "p": 5, "n": 8, "seed": 1,
        "replications": 1, "estimators": ["UB"]})");
    opts.config_path = bad.string();
    CHECK(cli::cmd_simulate(opts, out, err) == cli::kConfigError);
    opts.config_path = (cfg.parent_path() / "missing.json").string();
    CHECK(cli::cmd_simulate(opts, out, err) == cli::kDataError);
}

TEST_CASE("exact-risk command") {
    std::ostringstream out;
    std::ostringstream err;
    CHECK(cli::cmd_exact_risk(50, 50, out, err) == cli::kOk);
    CHECK(out.str().find("JS 37.096\n") != std::string::npos);

    std::ostringstream one;
    cli::cmd_exact_risk(1, 1, one, err);
    CHECK(one.str().find("BC 1.27036") != std::string::npos);
    CHECK(one.str().find("JS 1.27036") != std::string::npos);

    CHECK(cli::cmd_exact_risk(0, 3, out, err) == cli::kUsageError);
}

TEST_CASE("estimate command") {
    const fs::path data = temp_file("x.csv", "1,0,0\n0,1,0\n0,0,1\n0,0,0\n");
    std::ostringstream out;
    std::ostringstream err;
    cli::EstimateOptions opts;
    opts.data_path = data.string();
    opts.estimator = "UB";
    CHECK(cli::cmd_estimate(opts, out, err) == cli::kOk);
    const Matrix ub = [&] {
        std::istringstream in(out.str());
        return cli::read_matrix_csv(in);
    }();
    Matrix expected = Matrix::Zero(4, 4);
    expected.topLeftCorner(3, 3) = Matrix::Identity(3, 3) / 3.0;
    CHECK((ub - expected).norm() < 1e-15);
    CHECK(err.str().find("\"declared_rank\":3") != std::string::npos);

    const fs::path wide = temp_file("w.csv", "1.5,0.2\n-0.3,2.0\n0.7,0.1\n0.4,-1.1\n0.9,0.5\n");
    opts.data_path = wide.string();
    opts.estimator = "EB";
    opts.b = "bstar";
    std::ostringstream eb;
    std::ostringstream eb_err;
    CHECK(cli::cmd_estimate(opts, eb, eb_err) == cli::kOk);
    CHECK(eb_err.str().find("\"declared_rank\":5") != std::string::npos);
    CHECK(eb_err.str().find("\"lambda\":") != std::string::npos);

    opts.b.reset();
    opts.estimator = "JS";
    std::ostringstream js1;
    std::ostringstream js2;
    CHECK(cli::cmd_estimate(opts, js1, err) == cli::kOk);
    CHECK(cli::cmd_estimate(opts, js2, err) == cli::kOk);
    CHECK(js1.str() == js2.str());

    opts.estimator = "EB(b0)";
    opts.b = "b1";
    CHECK(cli::cmd_estimate(opts, out, err) == cli::kUsageError);

    const fs::path broken = temp_file("broken.csv", "1,2\n3,x\n");
    opts.data_path = broken.string();
    opts.estimator = "UB";
    opts.b.reset();
    std::ostringstream perr;
    CHECK(cli::cmd_estimate(opts, out, perr) == cli::kDataError);
    CHECK(perr.str().find("row 2, column 2") != std::string::npos);
}

TEST_CASE("read_matrix_csv errors") {
    std::istringstream ragged("1,2\n3\n");
    CHECK_THROWS_WITH_AS(cli::read_matrix_csv(ragged), "row 2: expected 2 columns, found 1", ValidationError);
    std::istringstream empty("");
    CHECK_THROWS_AS(cli::read_matrix_csv(empty), ValidationError);
    std::istringstream trailing("1,2,\n");
    CHECK_THROWS_AS(cli::read_matrix_csv(trailing), ValidationError);
}

TEST_CASE("verify command") {
    std::ostringstream out;
    std::ostringstream err;
    CHECK(cli::cmd_verify("nope", 1, out, err) == cli::kUsageError);
    CHECK(cli::cmd_verify("pinv", 1, out, err) == cli::kOk);
    CHECK(out.str().rfind("PASS pinv", 0) == 0);
}
