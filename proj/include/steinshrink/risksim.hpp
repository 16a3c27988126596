#pragma once

// Monte Carlo risk engine. Every replication draws one sample and scores
// all estimators on it (paired comparison); per-replication losses are kept
// so that dominance checks can use paired differences.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "steinshrink/estimators.hpp"
#include "steinshrink/loss.hpp"
#include "steinshrink/randmat.hpp"

namespace steinshrink {

struct ScenarioSpec {
    enum class Kind { Case, Singular };
    Kind kind = Kind::Case;
    int case_id = 1;                // Kind::Case
    Index r = 0;                    // Kind::Singular
    std::uint64_t factor_seed = 0;  // Kind::Singular

    static ScenarioSpec benchmark(int case_id);
    static ScenarioSpec singular(Index r, std::uint64_t factor_seed);

    /// "case1", "case2", "case3" or "singular".
    std::string name() const;
};

struct ExperimentConfig {
    ScenarioSpec scenario;
    Index p = 0;
    Index n = 0;
    Index replications = 2000;
    std::uint64_t master_seed = 0;
    std::vector<std::string> estimators;
    double solver_tol = 1e-12;
    int solver_max_iter = 200;
    LossEvaluator::Mode loss = LossEvaluator::Mode::Full;
    unsigned workers = 1;
};

/// Builds the ground truth for a config.
CovarianceModel build_model(const ExperimentConfig& config);

/// Pre-flight checks; throws ConfigError.
void validate_config(const ExperimentConfig& config);

struct EstimatorRisk {
    std::string label;
    double mean_loss = 0.0;
    double std_err = 0.0;
    Index replications = 0;  // successful replications
    Index failures = 0;
    std::vector<double> losses;  // per replication; NaN marks a failure
};

struct RiskReport {
    ExperimentConfig config;
    std::string scenario;
    Index r = 0;
    std::vector<EstimatorRisk> estimators;
    Index draw_failures = 0;
    double wall_time_s = 0.0;
    /// False when some estimator failed on 1% or more of the replications.
    bool valid = true;

    const EstimatorRisk& at(const std::string& label) const;
};

RiskReport simulate_risk(const ExperimentConfig& config);

struct DominanceVerdict {
    std::string better;
    std::string worse;
    double mean_difference = 0.0;  // mean of loss(better) - loss(worse)
    double std_err = 0.0;
    Index pairs = 0;
    bool consistent = true;
};

/// Paired-difference dominance check: consistent when the mean difference
/// does not exceed 4 standard errors. Throws ValidationError on unknown labels.
std::vector<DominanceVerdict> dominance_report(
    const RiskReport& report, const std::vector<std::pair<std::string, std::string>>& pairs);

/// Orthogonally invariant shrinkage phi(L) with its diagonal derivatives.
struct ShrinkFunction {
    std::function<Vector(const Vector&)> phi;
    std::function<Vector(const Vector&)> dphi;  // d phi_i / d ell_i
};

/// phi_i = c * ell_i.
ShrinkFunction linear_shrink(double c);

struct SteinHaffResult {
    double lhs = 0.0;      // mean of tr(Sigma^+ H Phi H^t)
    double rhs = 0.0;      // mean of the eigenvalue-derivative expression
    double gap = 0.0;      // lhs - rhs
    double std_err = 0.0;  // SE of the paired per-replication difference
    double lhs_se = 0.0;
    double rhs_se = 0.0;
    Index replications = 0;
    bool flagged = false;  // |gap| > 4 SE
};

/// Monte Carlo check of the Stein-Haff identity on the model singular_model(p, r, n).
SteinHaffResult stein_haff_check(Index p, Index r, Index n, const ShrinkFunction& phi,
                                 Index replications, std::uint64_t seed);
SteinHaffResult stein_haff_check(Index p, Index r, Index n, double c, Index replications,
                                 std::uint64_t seed);

/// CSV: scenario,p,n,r,estimator,mean_loss,std_err,replications,seed
void write_csv(const RiskReport& report, std::ostream& out);
void write_json(const RiskReport& report, std::ostream& out, bool include_timing = true);

/// Six significant digits, the CSV number format.
std::string format_sig6(double v);

}  // namespace steinshrink
