#include <doctest.h>

#include <cmath>
#include <sstream>

#include "steinshrink/errors.hpp"
#include "steinshrink/loss.hpp"
#include "steinshrink/risksim.hpp"
#include "steinshrink/reftable.hpp"

using namespace steinshrink;

namespace {

ExperimentConfig config(ScenarioSpec scenario, Index p, Index n, std::vector<std::string> labels,
                        Index reps = 400, std::uint64_t seed = 1) {
    ExperimentConfig c;
    c.scenario = scenario;
    c.p = p;
    c.n = n;
    c.replications = reps;
    c.master_seed = seed;
    c.estimators = std::move(labels);
    return c;
}

}  // namespace

TEST_CASE("simulated BC risk matches the exact risk") {
    const RiskReport r = simulate_risk(config(ScenarioSpec::benchmark(2), 10, 20, {"BC"}, 2000, 5));
    const EstimatorRisk& bc = r.at("BC");
    CHECK(bc.failures == 0);
    CHECK(std::abs(bc.mean_loss - exact_risk_bc(20, 10).value) <= 4.0 * bc.std_err);
}

TEST_CASE("simulated JS risk matches the exact risk in a singular model") {
    ExperimentConfig c = config(ScenarioSpec::singular(4, 9), 7, 3, {"JS"}, 2000, 6);
    c.loss = LossEvaluator::Mode::Singular;
    const EstimatorRisk& js = simulate_risk(c).at("JS");
    CHECK(std::abs(js.mean_loss - exact_risk_js(3, 4).value) <= 4.0 * js.std_err);
}

TEST_CASE("JS risk does not depend on the scenario") {
    const EstimatorRisk a = simulate_risk(config(ScenarioSpec::benchmark(1), 6, 10, {"JS"}, 2000, 7)).at("JS");
    const EstimatorRisk b = simulate_risk(config(ScenarioSpec::benchmark(3), 6, 10, {"JS"}, 2000, 8)).at("JS");
    CHECK(std::abs(a.mean_loss - b.mean_loss) < 4.0 * std::hypot(a.std_err, b.std_err));
}

TEST_CASE("results do not depend on the worker count") {
    ExperimentConfig c = config(ScenarioSpec::benchmark(2), 20, 6, {"EB(b0)", "mST(b1)", "SH(b0)"}, 300, 9);
    const RiskReport one = simulate_risk(c);
    c.workers = 4;
    const RiskReport four = simulate_risk(c);
    for (std::size_t k = 0; k < one.estimators.size(); ++k) {
        CHECK(one.estimators[k].mean_loss == four.estimators[k].mean_loss);
        CHECK(one.estimators[k].std_err == four.estimators[k].std_err);
        CHECK(one.estimators[k].losses == four.estimators[k].losses);
    }
}

TEST_CASE("dominance report") {
    const RiskReport r =
        simulate_risk(config(ScenarioSpec::benchmark(1), 50, 15, {"EB(b0)", "SH(b0)"}, 300, 10));
    const auto v = dominance_report(r, {{"SH(b0)", "EB(b0)"}, {"EB(b0)", "EB(b0)"}});
    CHECK(v[0].consistent);
    CHECK(v[0].mean_difference < 0.0);
    CHECK(v[1].mean_difference == 0.0);
    CHECK(v[1].std_err == 0.0);
    CHECK(v[1].consistent);
    CHECK_THROWS_AS(dominance_report(r, {{"SH(b0)", "JS"}}), ValidationError);
}

TEST_CASE("config validation") {
    CHECK_THROWS_AS(simulate_risk(config(ScenarioSpec::benchmark(1), 5, 3, {"UB"}, 1)), ConfigError);
    CHECK_THROWS_AS(validate_config(config(ScenarioSpec::benchmark(1), 8, 3, {"EB(b0)", "EB(b0)"})), ConfigError);
    // UB has rank n < p, which the full-rank loss cannot score.
    CHECK_THROWS_AS(validate_config(config(ScenarioSpec::benchmark(1), 8, 3, {"UB"})), ConfigError);
    CHECK_THROWS_AS(validate_config(config(ScenarioSpec::benchmark(1), 5, 8, {"mJS(b0)"})), ConfigError);
    CHECK_THROWS_AS(validate_config(config(ScenarioSpec::benchmark(4), 5, 8, {"UB"})), ConfigError);
    CHECK_THROWS_AS(validate_config(config(ScenarioSpec::singular(6, 1), 5, 8, {"UB"})), ConfigError);
    ExperimentConfig sing = config(ScenarioSpec::singular(3, 1), 5, 8, {"UB"});
    CHECK_THROWS_AS(validate_config(sing), ConfigError);
    sing.loss = LossEvaluator::Mode::Singular;
    CHECK_NOTHROW(validate_config(sing));
}

TEST_CASE("CSV output") {
    const RiskReport r = simulate_risk(config(ScenarioSpec::benchmark(1), 6, 10, {"UB", "JS"}, 50, 11));
    std::ostringstream out;
    write_csv(r, out);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "scenario,p,n,r,estimator,mean_loss,std_err,replications,seed");
    std::getline(in, line);
    CHECK(line.rfind("case1,6,10,6,UB,", 0) == 0);
    CHECK(line.substr(line.size() - 6) == ",50,11");
    CHECK(format_sig6(37.0959917) == "37.096");
    CHECK(format_sig6(0.000123456789) == "0.000123457");
}

TEST_CASE("Stein-Haff identity at (8,5,3)") {
    const SteinHaffResult r = stein_haff_check(8, 5, 3, 1.0, 5000, 21);
    CHECK_FALSE(r.flagged);
    CHECK(std::abs(r.rhs - 15.0) < 1e-9);
    CHECK(std::abs(r.lhs - 15.0) <= 4.0 * r.lhs_se);
}

TEST_CASE("reference table") {
    CHECK(reference_cells().size() == 27);
    CHECK(select_reference_cells("desk").size() == 9);
    CHECK(select_reference_cells("all").size() == 27);
    const auto one = select_reference_cells("1:100:25");
    REQUIRE(one.size() == 1);
    CHECK(one[0].mean[3] == 7.3);
    CHECK(one[0].se[3] == 0.03);
    const auto two = select_reference_cells("2:150:75,3:50:5");
    REQUIRE(two.size() == 2);
    CHECK(two[0].mean[1] == 69.6);
    CHECK(two[0].se[1] == 0.06);
    CHECK(two[1].mean[0] == 35.7);
    CHECK(two[1].se[0] == 0.02);
    CHECK_THROWS_AS(select_reference_cells("1:60:25"), ValidationError);
    CHECK_THROWS_AS(select_reference_cells("x"), ValidationError);
    CHECK(within_reference_tolerance(5.0, 0.01, 5.1, 0.01));
    CHECK_FALSE(within_reference_tolerance(5.0, 0.01, 5.2, 0.01));
    CHECK_FALSE(within_reference_tolerance(5.0, 0.01, NAN, 0.01));
}
