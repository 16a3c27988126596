#include "steinshrink/risksim.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "steinshrink/errors.hpp"

namespace steinshrink {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kFailureLimit = 0.01;
constexpr double kSigmaMultiple = 4.0;

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
    Index count = 0;
};

// Ordered reduction; NaN entries are skipped.
MeanSe mean_se(const std::vector<double>& values) {
    MeanSe out;
    double sum = 0.0;
    for (double v : values) {
        if (std::isnan(v)) continue;
        sum += v;
        ++out.count;
    }
    if (out.count == 0) {
        out.mean = kNaN;
        out.se = kNaN;
        return out;
    }
    out.mean = sum / static_cast<double>(out.count);
    if (out.count < 2) {
        out.se = kNaN;
        return out;
    }
    double ss = 0.0;
    for (double v : values) {
        if (std::isnan(v)) continue;
        ss += (v - out.mean) * (v - out.mean);
    }
    const double var = ss / static_cast<double>(out.count - 1);
    out.se = std::sqrt(var / static_cast<double>(out.count));
    return out;
}

// Runs body(i) for i in [0, count) on `workers` threads.
template <class Body>
void parallel_for(Index count, unsigned workers, Body&& body) {
    if (workers <= 1 || count < 2) {
        for (Index i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<Index> next{0};
    const auto run = [&] {
        for (Index i = next++; i < count; i = next++) body(i);
    };
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
}

Index scenario_rank(const ExperimentConfig& config) {
    return config.scenario.kind == ScenarioSpec::Kind::Case ? config.p : config.scenario.r;
}

}  // namespace

ScenarioSpec ScenarioSpec::benchmark(int case_id) {
    ScenarioSpec s;
    s.kind = Kind::Case;
    s.case_id = case_id;
    return s;
}

ScenarioSpec ScenarioSpec::singular(Index r, std::uint64_t factor_seed) {
    ScenarioSpec s;
    s.kind = Kind::Singular;
    s.r = r;
    s.factor_seed = factor_seed;
    return s;
}

std::string ScenarioSpec::name() const {
    return kind == Kind::Case ? "case" + std::to_string(case_id) : "singular";
}

CovarianceModel build_model(const ExperimentConfig& config) {
    if (config.scenario.kind == ScenarioSpec::Kind::Case) {
        return scenario_sigma(config.scenario.case_id, config.p, config.n);
    }
    return singular_model(config.p, config.scenario.r, config.n, config.scenario.factor_seed);
}

void validate_config(const ExperimentConfig& config) {
    if (config.p < 1 || config.n < 1) throw ConfigError("p and n must be positive");
    if (config.replications < 2) {
        throw ConfigError(fmt::format("replications must be >= 2 (got {})", config.replications));
    }
    if (config.workers < 1) throw ConfigError("workers must be >= 1");
    if (config.scenario.kind == ScenarioSpec::Kind::Case) {
        if (config.scenario.case_id < 1 || config.scenario.case_id > 3) {
            throw ConfigError(fmt::format("unknown scenario case {}", config.scenario.case_id));
        }
    } else if (config.scenario.r < 1 || config.scenario.r > config.p) {
        throw ConfigError(fmt::format("singular scenario needs 1 <= r <= p (r={}, p={})",
                                      config.scenario.r, config.p));
    }
    if (config.estimators.empty()) throw ConfigError("no estimators requested");
    if (!(config.solver_tol > 0.0) || config.solver_max_iter < 1) {
        throw ConfigError("solver tolerance and max_iter must be positive");
    }

    const Index r = scenario_rank(config);
    if (config.loss == LossEvaluator::Mode::Full && r != config.p) {
        throw ConfigError("loss mode 'full' needs a full-rank Sigma (r = p)");
    }
    std::set<std::string> seen;
    for (const auto& label : config.estimators) {
        EstimatorId id;
        try {
            id = parse_estimator(label);
        } catch (const ValidationError& e) {
            throw ConfigError(e.what());
        }
        if (!seen.insert(id.label).second) {
            throw ConfigError("duplicate estimator label '" + id.label + "'");
        }
        check_estimator_preconditions(id, config.p, config.n, r);
        if (config.loss == LossEvaluator::Mode::Full &&
            output_rank(id, config.p, config.n, r) != config.p) {
            throw ConfigError(fmt::format(
                "{} has rank {} < p = {}; use loss mode 'singular'", id.label,
                output_rank(id, config.p, config.n, r), config.p));
        }
    }
}

const EstimatorRisk& RiskReport::at(const std::string& label) const {
    for (const auto& e : estimators) {
        if (e.label == label) return e;
    }
    throw ValidationError("estimator '" + label + "' not in report");
}

RiskReport simulate_risk(const ExperimentConfig& config) {
    validate_config(config);
    const auto start = std::chrono::steady_clock::now();

    const CovarianceModel model = build_model(config);
    const LossEvaluator loss(model, config.loss);

    std::vector<EstimatorId> ids;
    for (const auto& label : config.estimators) {
        EstimatorId id = parse_estimator(label);
        id.spec.solver_tol = config.solver_tol;
        id.spec.max_iter = config.solver_max_iter;
        ids.push_back(std::move(id));
    }

    const Index reps = config.replications;
    const std::size_t k = ids.size();
    std::vector<std::vector<double>> losses(k, std::vector<double>(static_cast<std::size_t>(reps), kNaN));
    std::vector<char> draw_failed(static_cast<std::size_t>(reps), 0);

    parallel_for(reps, config.workers, [&](Index i) {
        SampleData sample;
        try {
            sample = draw_sample(model, SeedSpec{config.master_seed, static_cast<std::uint64_t>(i)});
        } catch (const SimulationError&) {
            draw_failed[static_cast<std::size_t>(i)] = 1;
            return;
        }
        const SampleContext ctx = make_context(sample, model.r);
        for (std::size_t e = 0; e < k; ++e) {
            try {
                const Estimate est = evaluate(ids[e], ctx);
                const Index rank = std::min(est.declared_rank, model.r);
                losses[e][static_cast<std::size_t>(i)] = loss(est.matrix.matrix(), rank);
            } catch (const Error&) {
                // Counted as a failure for this estimator only.
            }
        }
    });

    RiskReport report;
    report.config = config;
    report.scenario = config.scenario.name();
    report.r = model.r;
    for (char f : draw_failed) report.draw_failures += f;
    if (reps - report.draw_failures < 2) {
        throw SimulationError("simulate_risk: fewer than two successful draws");
    }
    for (std::size_t e = 0; e < k; ++e) {
        EstimatorRisk risk;
        risk.label = ids[e].label;
        const MeanSe stats = mean_se(losses[e]);
        risk.mean_loss = stats.mean;
        risk.std_err = stats.se;
        risk.replications = stats.count;
        risk.failures = reps - stats.count;
        if (static_cast<double>(risk.failures) >= kFailureLimit * static_cast<double>(reps)) {
            report.valid = false;
        }
        risk.losses = std::move(losses[e]);
        report.estimators.push_back(std::move(risk));
    }
    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

std::vector<DominanceVerdict> dominance_report(
    const RiskReport& report, const std::vector<std::pair<std::string, std::string>>& pairs) {
    std::vector<DominanceVerdict> out;
    for (const auto& [better_label, worse_label] : pairs) {
        const EstimatorRisk& better = report.at(parse_estimator(better_label).label);
        const EstimatorRisk& worse = report.at(parse_estimator(worse_label).label);
        std::vector<double> diff(better.losses.size(), kNaN);
        for (std::size_t i = 0; i < diff.size(); ++i) {
            const double a = better.losses[i];
            const double b = worse.losses[i];
            if (!std::isnan(a) && !std::isnan(b)) diff[i] = a - b;
        }
        const MeanSe stats = mean_se(diff);
        DominanceVerdict v;
        v.better = better.label;
        v.worse = worse.label;
        v.mean_difference = stats.mean;
        v.std_err = stats.count >= 2 ? stats.se : 0.0;
        v.pairs = stats.count;
        v.consistent = stats.count > 0 && v.mean_difference <= kSigmaMultiple * v.std_err;
        out.push_back(v);
    }
    return out;
}

ShrinkFunction linear_shrink(double c) {
    return {[c](const Vector& ell) -> Vector { return c * ell; },
            [c](const Vector& ell) -> Vector { return Vector::Constant(ell.size(), c); }};
}

SteinHaffResult stein_haff_check(Index p, Index r, Index n, const ShrinkFunction& phi,
                                 Index replications, std::uint64_t seed) {
    if (replications < 2) throw ConfigError("stein_haff_check: replications must be >= 2");
    const CovarianceModel model = singular_model(p, r, n, seed);
    const Index q = model.q();
    const double gap_weight = static_cast<double>(std::abs(n - r)) - 1.0;
    const std::uint64_t stream_seed = derive_seed(SeedSpec{seed, 0x5e1fULL});

    std::vector<double> lhs(static_cast<std::size_t>(replications), kNaN);
    std::vector<double> rhs(static_cast<std::size_t>(replications), kNaN);
    std::vector<double> diff(static_cast<std::size_t>(replications), kNaN);
    for (Index i = 0; i < replications; ++i) {
        SampleData sample;
        try {
            sample = draw_sample(model, SeedSpec{stream_seed, static_cast<std::uint64_t>(i)});
        } catch (const SimulationError&) {
            continue;
        }
        const Vector& ell = sample.eig.values;
        const Matrix& h = sample.eig.vectors;
        const Vector f = phi.phi(ell);
        const Vector df = phi.dphi(ell);

        // tr(Sigma^+ H Phi H^t) = sum_k phi_k |F^t h_k|^2 with F F^t = Sigma^+.
        const Matrix projected = model.sigma_pinv_root.transpose() * h;
        const double left = projected.colwise().squaredNorm().dot(f);

        double right = 0.0;
        for (Index a = 0; a < q; ++a) {
            right += gap_weight * f(a) / ell(a) + 2.0 * df(a);
            for (Index b = a + 1; b < q; ++b) right += 2.0 * (f(a) - f(b)) / (ell(a) - ell(b));
        }
        const auto idx = static_cast<std::size_t>(i);
        lhs[idx] = left;
        rhs[idx] = right;
        diff[idx] = left - right;
    }
    const MeanSe l = mean_se(lhs);
    const MeanSe rr = mean_se(rhs);
    const MeanSe d = mean_se(diff);
    SteinHaffResult out;
    out.lhs = l.mean;
    out.rhs = rr.mean;
    out.gap = d.mean;
    out.std_err = d.se;
    out.lhs_se = l.se;
    out.rhs_se = rr.se;
    out.replications = d.count;
    out.flagged = std::abs(out.gap) > kSigmaMultiple * out.std_err;
    return out;
}

SteinHaffResult stein_haff_check(Index p, Index r, Index n, double c, Index replications,
                                 std::uint64_t seed) {
    return stein_haff_check(p, r, n, linear_shrink(c), replications, seed);
}

std::string format_sig6(double v) { return fmt::format("{:.6g}", v); }

void write_csv(const RiskReport& report, std::ostream& out) {
    out << "scenario,p,n,r,estimator,mean_loss,std_err,replications,seed\n";
    for (const auto& e : report.estimators) {
        out << report.scenario << ',' << report.config.p << ',' << report.config.n << ','
            << report.r << ',' << e.label << ',' << format_sig6(e.mean_loss) << ','
            << format_sig6(e.std_err) << ',' << e.replications << ','
            << report.config.master_seed << '\n';
    }
}

void write_json(const RiskReport& report, std::ostream& out, bool include_timing) {
    nlohmann::ordered_json j;
    j["scenario"] = report.scenario;
    j["p"] = report.config.p;
    j["n"] = report.config.n;
    j["r"] = report.r;
    j["seed"] = report.config.master_seed;
    j["replications"] = report.config.replications;
    j["loss"] = report.config.loss == LossEvaluator::Mode::Full ? "full" : "singular";
    j["valid"] = report.valid;
    j["draw_failures"] = report.draw_failures;
    auto& rows = j["estimators"] = nlohmann::ordered_json::array();
    for (const auto& e : report.estimators) {
        rows.push_back({{"estimator", e.label},
                        {"mean_loss", e.mean_loss},
                        {"std_err", e.std_err},
                        {"replications", e.replications},
                        {"failures", e.failures}});
    }
    if (include_timing) j["wall_time_s"] = report.wall_time_s;
    out << j.dump(2) << '\n';
}

}  // namespace steinshrink
