#include "steinshrink/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <fmt/format.h>

#include "steinshrink/errors.hpp"
#include "steinshrink/estimators.hpp"
#include "steinshrink/loss.hpp"
#include "steinshrink/randmat.hpp"
#include "steinshrink/risksim.hpp"

namespace steinshrink {

namespace {

constexpr double kSigmas = 4.0;

struct Moments {
    double sum = 0.0;
    double sum_sq = 0.0;
    long count = 0;

    void add(double v) {
        sum += v;
        sum_sq += v * v;
        ++count;
    }
    double mean() const { return sum / static_cast<double>(count); }
    double se() const {
        const double m = mean();
        const double var = (sum_sq - static_cast<double>(count) * m * m) / static_cast<double>(count - 1);
        return std::sqrt(std::max(var, 0.0) / static_cast<double>(count));
    }
    double z(double target) const {
        const double s = se();
        return s > 0.0 ? (mean() - target) / s : (mean() == target ? 0.0 : INFINITY);
    }
};

double rel_err(const Matrix& a, const Matrix& b) {
    const double scale = std::max(b.norm(), 1e-300);
    return (a - b).norm() / scale;
}

Matrix random_orthogonal(Index p, Rng& rng) {
    const Matrix g = standard_normal_matrix(p, p, rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(p, p);
    // Haar measure: flip columns by the sign of R's diagonal.
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Index j = 0; j < p; ++j) {
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    }
    return q;
}

CheckResult check(std::string name, bool pass, std::string detail) {
    return {std::move(name), pass, std::move(detail)};
}

// ---------------------------------------------------------------------------

double penrose_worst(const Matrix& a, const Matrix& g) {
    const Matrix ag = a * g;
    const Matrix ga = g * a;
    return std::max({rel_err(ag * a, a), rel_err(ga * g, g), rel_err(ag.transpose(), ag),
                     rel_err(ga.transpose(), ga)});
}

SuiteResult suite_pinv(std::uint64_t seed) {
    SuiteResult out{"pinv", {}};
    double worst_psd = 0.0;
    double worst_rect = 0.0;
    double worst_reverse = 0.0;
    double worst_inverse = 0.0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
        Rng rng({seed, static_cast<std::uint64_t>(t)});
        const Index p = 2 + t % 11;
        const Index k = 1 + (t / 11) % p;
        const double scale = std::exp(4.0 * rng.uniform() - 2.0);
        const Matrix b = scale * standard_normal_matrix(p, k, rng);
        const SymPsdMatrix s = SymPsdMatrix::validated(b * b.transpose());
        worst_psd = std::max(worst_psd, penrose_worst(s.matrix(), pinv_psd(s).matrix()));

        const Index cols = 1 + t % 9;
        const Index inner = std::min(k, cols);
        const Matrix a = standard_normal_matrix(p, inner, rng) * standard_normal_matrix(inner, cols, rng);
        worst_rect = std::max(worst_rect, penrose_worst(a, pinv(a)));

        // (B C^t)^+ = (C^t)^+ B^+ for full-column-rank B, C.
        const Matrix c = standard_normal_matrix(k + t % 3, k, rng);
        worst_reverse = std::max(worst_reverse,
                                 rel_err(pinv(b * c.transpose()), pinv(c.transpose()) * pinv(b)));

        const Matrix g = standard_normal_matrix(p, p + 2, rng);
        const SymPsdMatrix spd = SymPsdMatrix::validated(g * g.transpose());
        worst_inverse = std::max(worst_inverse, rel_err(pinv_psd(spd).matrix(), spd.matrix().inverse()));
    }
    const double tol = 1e-8;
    out.checks.push_back(check("penrose conditions, PSD", worst_psd <= tol,
                               fmt::format("{} instances, worst rel. residual {:.3g}", trials, worst_psd)));
    out.checks.push_back(check("penrose conditions, rectangular", worst_rect <= tol,
                               fmt::format("{} instances, worst rel. residual {:.3g}", trials, worst_rect)));
    out.checks.push_back(check("reverse-order law", worst_reverse <= tol,
                               fmt::format("worst rel. error {:.3g}", worst_reverse)));
    out.checks.push_back(check("full rank pinv equals inverse", worst_inverse <= tol,
                               fmt::format("worst rel. error {:.3g}", worst_inverse)));
    return out;
}

// ---------------------------------------------------------------------------

double g_sum(const Vector& ell, double lambda) {
    double acc = 0.0;
    for (Index j = 0; j < ell.size(); ++j) acc += lambda / (ell(j) + lambda);
    return acc;
}

double bisect_lambda(const Vector& ell, double b) {
    if (b == 0.0) return 0.0;
    double lo = 0.0;
    double hi = 1.0;
    while (g_sum(ell, hi) < b) hi *= 2.0;
    for (int i = 0; i < 2000 && hi - lo > 1e-15 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (g_sum(ell, mid) < b ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

SuiteResult suite_lambda(std::uint64_t seed) {
    SuiteResult out{"lambda", {}};
    const int trials = 10000;
    double worst_residual = 0.0;
    double worst_oracle = 0.0;
    int bound_violations = 0;
    for (int t = 0; t < trials; ++t) {
        Rng rng({seed, static_cast<std::uint64_t>(t)});
        const Index q = 1 + t % 30;
        Vector ell(q);
        for (Index j = 0; j < q; ++j) ell(j) = std::exp(8.0 * rng.uniform() - 4.0);
        std::sort(ell.data(), ell.data() + q, std::greater<>());
        const double b = rng.uniform() * static_cast<double>(q);
        const double lambda = solve_lambda(ell, b);

        worst_residual = std::max(worst_residual, std::abs(g_sum(ell, lambda) - b));
        const double oracle = bisect_lambda(ell, b);
        if (oracle > 0.0) worst_oracle = std::max(worst_oracle, std::abs(lambda - oracle) / oracle);

        const double qd = static_cast<double>(q);
        const double tr_s = ell.sum();
        const double tr_pinv = ell.cwiseInverse().sum();
        const double ratio = b / (qd - b);
        const double slack = 1e-10;
        bool ok = lambda >= ratio * qd / tr_pinv * (1.0 - slack) &&
                  lambda <= ratio * tr_s / qd * (1.0 + slack);
        if (b < 1.0) ok = ok && lambda <= b / ((1.0 - b) * tr_pinv) * (1.0 + slack);
        if (!ok) ++bound_violations;
    }
    out.checks.push_back(check("residual |g(lambda) - b| < 1e-10", worst_residual < 1e-10,
                               fmt::format("{} instances, worst residual {:.3g}", trials, worst_residual)));
    out.checks.push_back(check("closed-form bounds hold", bound_violations == 0,
                               fmt::format("{} violations in {} instances", bound_violations, trials)));
    out.checks.push_back(check("agrees with bisection oracle", worst_oracle < 1e-9,
                               fmt::format("worst rel. difference {:.3g}", worst_oracle)));
    return out;
}

// ---------------------------------------------------------------------------

SuiteResult suite_pade(std::uint64_t) {
    SuiteResult out{"pade", {}};
    const int points = 1000;
    int violations = 0;
    for (int k = 0; k < points; ++k) {
        const double x = k == 0 ? 0.0 : std::pow(10.0, -3.0 + 6.0 * (k - 1) / (points - 2));
        const auto [lower, upper] = pade_bounds(x);
        const double value = std::log1p(x);
        if (!(lower <= value && value <= upper)) ++violations;
    }
    out.checks.push_back(check("lower <= log(1+x) <= upper", violations == 0,
                               fmt::format("{} grid points on [0, 1e3], {} violations", points, violations)));
    const auto [l1, u1] = pade_bounds(1.0);
    out.checks.push_back(check("x = 1 gives (2/3, 7/10)",
                               std::abs(l1 - 2.0 / 3.0) < 1e-15 && std::abs(u1 - 0.7) < 1e-15,
                               fmt::format("({:.17g}, {:.17g})", l1, u1)));
    return out;
}

// ---------------------------------------------------------------------------

SuiteResult suite_lq_moments(std::uint64_t seed) {
    SuiteResult out{"lq-moments", {}};
    const int draws = 5000;
    const std::pair<Index, Index> shapes[] = {{4, 7}, {7, 4}, {5, 5}};
    for (const auto& [r, n] : shapes) {
        const Index q = std::min(r, n);
        std::vector<Moments> diag(static_cast<std::size_t>(q));
        std::map<std::pair<Index, Index>, Moments> below;
        for (int t = 0; t < draws; ++t) {
            const Matrix z = standard_normal_matrix(r, n, SeedSpec{seed ^ static_cast<std::uint64_t>(r * 100 + n),
                                                                   static_cast<std::uint64_t>(t)});
            const Matrix tee = sample_lq(z, q).tee;
            for (Index i = 0; i < q; ++i) {
                diag[static_cast<std::size_t>(i)].add(tee(i, i) * tee(i, i));
                for (Index j = i + 1; j < r; ++j) below[{j, i}].add(tee(j, i));
            }
        }
        double worst = 0.0;
        for (Index i = 0; i < q; ++i) {
            worst = std::max(worst, std::abs(diag[static_cast<std::size_t>(i)].z(static_cast<double>(n - i))));
        }
        for (const auto& [key, m] : below) worst = std::max(worst, std::abs(m.z(0.0)));
        out.checks.push_back(check(fmt::format("y_ii^2 ~ chi2(n-i+1), y_ji ~ N(0,1) at r={}, n={}", r, n),
                                   worst <= kSigmas,
                                   fmt::format("{} draws, worst |z| = {:.2f}", draws, worst)));
    }
    return out;
}

// ---------------------------------------------------------------------------

SuiteResult suite_steinhaff(std::uint64_t seed) {
    SuiteResult out{"steinhaff", {}};
    const Index reps = 100000;
    struct Case {
        Index p, r, n;
    };
    for (const Case& c : {Case{5, 5, 8}, Case{8, 5, 3}}) {
        for (double mult : {1.0, 0.25}) {
            const SteinHaffResult res = stein_haff_check(c.p, c.r, c.n, mult, reps, seed);
            out.checks.push_back(check(
                fmt::format("identity, phi = {} ell at (p,r,n) = ({},{},{})", mult, c.p, c.r, c.n), !res.flagged,
                fmt::format("lhs {:.5f}, rhs {:.5f}, gap {:.3g}, SE {:.3g}", res.lhs, res.rhs, res.gap,
                            res.std_err)));
            if (mult == 1.0) {
                const double target = static_cast<double>(c.n * c.r);
                out.checks.push_back(check(
                    fmt::format("E tr(Sigma^+ S) = nr at ({},{},{})", c.p, c.r, c.n),
                    std::abs(res.lhs - target) <= kSigmas * res.lhs_se,
                    fmt::format("lhs {:.5f} vs {}, SE {:.3g}", res.lhs, target, res.lhs_se)));
            }
        }
        const ShrinkFunction root{[](const Vector& ell) -> Vector { return ell.cwiseSqrt(); },
                                  [](const Vector& ell) -> Vector { return 0.5 * ell.cwiseSqrt().cwiseInverse(); }};
        const SteinHaffResult res = stein_haff_check(c.p, c.r, c.n, root, reps, seed);
        out.checks.push_back(check(fmt::format("identity, phi = sqrt(ell) at ({},{},{})", c.p, c.r, c.n),
                                   !res.flagged,
                                   fmt::format("lhs {:.5f}, rhs {:.5f}, gap {:.3g}, SE {:.3g}", res.lhs, res.rhs,
                                               res.gap, res.std_err)));
    }
    return out;
}

// ---------------------------------------------------------------------------

SuiteResult suite_digamma(std::uint64_t seed) {
    SuiteResult out{"digamma", {}};
    constexpr double euler = 0.57721566490153286061;
    const double d1 = digamma(1.0);
    const double dh = digamma(0.5);
    out.checks.push_back(check("psi(1) = -gamma, psi(1/2) = -gamma - 2 log 2",
                               std::abs(d1 + euler) < 1e-12 &&
                                   std::abs(dh + euler + 2.0 * std::numbers::ln2) < 1e-12,
                               fmt::format("psi(1) {:.15f}, psi(1/2) {:.15f}", d1, dh)));

    const long draws = 200000;
    for (int k : {1, 2, 3, 4, 7, 12, 30}) {
        Rng rng({seed, static_cast<std::uint64_t>(k)});
        Moments m;
        for (long t = 0; t < draws; ++t) {
            double chi2 = 0.0;
            for (int j = 0; j < k; ++j) {
                const double z = rng.standard_normal();
                chi2 += z * z;
            }
            m.add(std::log(chi2));
        }
        const double expected = e_log_chisq(k);
        out.checks.push_back(check(fmt::format("E log chi2({}) by Monte Carlo", k), std::abs(m.z(expected)) <= kSigmas,
                                   fmt::format("closed form {:.6f}, MC {:.6f} (SE {:.2g})", expected, m.mean(), m.se())));
    }

    // E log pi(Z Z^t) for Z q x m equals the sum of E log chi2(m-i+1).
    const std::pair<Index, Index> shapes[] = {{3, 8}, {5, 5}};
    for (const auto& [q, mm] : shapes) {
        Moments m;
        for (long t = 0; t < 100000; ++t) {
            const Matrix z = standard_normal_matrix(q, mm, SeedSpec{seed + 17, static_cast<std::uint64_t>(t)});
            const Eigen::LLT<Matrix> llt(z * z.transpose());
            m.add(2.0 * llt.matrixLLT().diagonal().array().log().sum());
        }
        double expected = 0.0;
        for (Index i = 1; i <= q; ++i) expected += e_log_chisq(static_cast<int>(mm - i + 1));
        out.checks.push_back(check(fmt::format("E log pi(ZZ^t), Z {}x{}", q, mm), std::abs(m.z(expected)) <= kSigmas,
                                   fmt::format("closed form {:.6f}, MC {:.6f} (SE {:.2g})", expected, m.mean(), m.se())));
    }
    return out;
}

// ---------------------------------------------------------------------------

struct EquivCase {
    Index p, n, r;
    std::vector<std::string> orthogonal;  // also orthogonally equivariant
    std::vector<std::string> scale_only;
};

SuiteResult suite_equivariance(std::uint64_t seed) {
    SuiteResult out{"equivariance", {}};
    const std::vector<EquivCase> cases = {
        {12, 5, 12,
         {"UB", "BC", "ST", "EB(b0)", "EB(b1)", "EB(bstar)", "SH(b0)", "SH(b1)", "mST(b0)", "mST(b1)", "HF(1)"},
         {"JS", "mJS(b0)"}},
        {6, 10, 6, {"UB", "BC", "ST", "EB(b0)", "EB(b1)", "SH(b0)"}, {"JS"}},
        {12, 3, 8, {"BC", "ST", "EB(b0)", "SH(b0)", "EB(bstar)", "mST(b0)"}, {"JS", "mJS(b0)"}},
    };
    const double tol = 1e-9;
    const double c = 3.7;
    for (const auto& ec : cases) {
        double worst_scale = 0.0;
        double worst_orth = 0.0;
        std::string worst_scale_label;
        std::string worst_orth_label;
        for (int t = 0; t < 5; ++t) {
            Rng rng({seed, static_cast<std::uint64_t>(1000 * ec.p + 10 * ec.n + t)});
            const Matrix b = standard_normal_matrix(ec.p, ec.r, rng);
            const Matrix x = b * standard_normal_matrix(ec.r, ec.n, rng);
            const Matrix pm = random_orthogonal(ec.p, rng);
            const SampleContext base = make_context(x, ec.r);
            const SampleContext scaled = make_context(c * x, ec.r);
            const SampleContext rotated = make_context(pm * x, ec.r);
            const auto run = [&](const std::string& label, bool orth) {
                const EstimatorId id = parse_estimator(label);
                const Matrix d = evaluate(id, base).matrix.matrix();
                const double es = rel_err(evaluate(id, scaled).matrix.matrix(), c * c * d);
                if (es > worst_scale) {
                    worst_scale = es;
                    worst_scale_label = label;
                }
                if (orth) {
                    const double eo = rel_err(evaluate(id, rotated).matrix.matrix(), pm * d * pm.transpose());
                    if (eo > worst_orth) {
                        worst_orth = eo;
                        worst_orth_label = label;
                    }
                }
            };
            for (const auto& label : ec.orthogonal) run(label, true);
            for (const auto& label : ec.scale_only) run(label, false);
        }
        out.checks.push_back(check(fmt::format("scale equivariance at (p,n,r) = ({},{},{})", ec.p, ec.n, ec.r),
                                   worst_scale <= tol,
                                   fmt::format("worst rel. error {:.3g} ({})", worst_scale, worst_scale_label)));
        out.checks.push_back(check(fmt::format("orthogonal equivariance at (p,n,r) = ({},{},{})", ec.p, ec.n, ec.r),
                                   worst_orth <= tol,
                                   fmt::format("worst rel. error {:.3g} ({})", worst_orth, worst_orth_label)));
    }

    double worst_loss = 0.0;
    for (int t = 0; t < 20; ++t) {
        Rng rng({seed + 99, static_cast<std::uint64_t>(t)});
        const Index p = 2 + t % 9;
        const Matrix a = standard_normal_matrix(p, p + 3, rng);
        const Matrix g = standard_normal_matrix(p, p + 1, rng);
        const Matrix sigma = a * a.transpose();
        const Matrix delta = g * g.transpose();
        const Matrix pm = random_orthogonal(p, rng);
        const double l0 = stein_loss(SymPsdMatrix::validated(delta), SymPsdMatrix::validated(sigma));
        const double l1 = stein_loss(SymPsdMatrix::validated(pm * delta * pm.transpose()),
                                     SymPsdMatrix::validated(pm * sigma * pm.transpose()));
        worst_loss = std::max(worst_loss, std::abs(l1 - l0) / std::max(1.0, std::abs(l0)));
    }
    out.checks.push_back(check("Stein loss orthogonal invariance", worst_loss <= tol,
                               fmt::format("worst rel. error {:.3g}", worst_loss)));
    return out;
}

// ---------------------------------------------------------------------------

void add_dominance(SuiteResult& out, const ExperimentConfig& config,
                   const std::vector<std::pair<std::string, std::string>>& pairs) {
    const RiskReport report = simulate_risk(config);
    const std::string where = config.scenario.kind == ScenarioSpec::Kind::Case
                                  ? fmt::format("{}, p={}, n={}", report.scenario, config.p, config.n)
                                  : fmt::format("(p,r,n) = ({},{},{})", config.p, report.r, config.n);
    for (const auto& v : dominance_report(report, pairs)) {
        out.checks.push_back(check(fmt::format("{} <= {} at {}", v.better, v.worse, where),
                                   v.consistent && report.valid,
                                   fmt::format("mean diff {:.4g}, SE {:.3g}, pairs {}{}", v.mean_difference,
                                               v.std_err, v.pairs, report.valid ? "" : ", report invalid")));
    }
}

SuiteResult suite_dominance(std::uint64_t seed) {
    SuiteResult out{"dominance", {}};
    const Index reps = 2000;
    const auto base = [&](ScenarioSpec scenario, Index p, Index n, std::vector<std::string> labels,
                          LossEvaluator::Mode mode) {
        ExperimentConfig c;
        c.scenario = scenario;
        c.p = p;
        c.n = n;
        c.replications = reps;
        c.master_seed = seed;
        c.estimators = std::move(labels);
        c.loss = mode;
        return c;
    };

    struct Prc {
        Index p, r, n;
    };
    for (const Prc& k : {Prc{6, 6, 10}, Prc{10, 6, 3}, Prc{50, 50, 25}}) {
        add_dominance(out,
                      base(ScenarioSpec::singular(k.r, seed + 1), k.p, k.n, {"UB", "BC", "JS", "ST"},
                           LossEvaluator::Mode::Singular),
                      {{"BC", "UB"}, {"JS", "BC"}, {"ST", "JS"}});
    }
    for (int c = 1; c <= 3; ++c) {
        add_dominance(out,
                      base(ScenarioSpec::benchmark(c), 50, 15, {"EB(b0)", "SH(b0)", "mJS(b0)", "mST(b0)"},
                           LossEvaluator::Mode::Full),
                      {{"SH(b0)", "EB(b0)"}, {"mJS(b0)", "SH(b0)"}, {"mST(b0)", "mJS(b0)"}});
        add_dominance(out,
                      base(ScenarioSpec::benchmark(c), 50, 5, {"EB(bstar)", "SH(bstar)"}, LossEvaluator::Mode::Full),
                      {{"EB(bstar)", "SH(bstar)"}});
    }
    add_dominance(out,
                  base(ScenarioSpec::singular(8, seed + 2), 12, 3, {"EB(b0)", "SH(b0)"},
                       LossEvaluator::Mode::Singular),
                  {{"SH(b0)", "EB(b0)"}});
    return out;
}

// ---------------------------------------------------------------------------

SuiteResult suite_exact_risk(std::uint64_t) {
    SuiteResult out{"exact-risk", {}};
    const std::pair<int, double> reference[] = {{50, 37.096}, {100, 72.0995}, {150, 106.959}};
    for (const auto& [n, value] : reference) {
        const double js = exact_risk_js(n, n).value;
        out.checks.push_back(check(fmt::format("JS exact risk at n = r = {}", n), std::abs(js - value) <= 5e-3,
                                   fmt::format("{:.6f} vs {}", js, value)));
    }
    bool ordered = true;
    bool symmetric = true;
    for (int n = 1; n <= 30; ++n) {
        for (int r = 1; r <= 30; ++r) {
            ordered = ordered && exact_risk_bc(n, r).value >= exact_risk_js(n, r).value - 1e-12;
            symmetric = symmetric && exact_risk_bc(n, r).value == exact_risk_bc(r, n).value;
        }
    }
    out.checks.push_back(check("BC >= JS for 1 <= n, r <= 30", ordered, ""));
    out.checks.push_back(check("BC symmetric in (n, r)", symmetric, ""));
    return out;
}

using SuiteFn = SuiteResult (*)(std::uint64_t);

const std::vector<std::pair<std::string, SuiteFn>>& registry() {
    static const std::vector<std::pair<std::string, SuiteFn>> suites = {
        {"pinv", suite_pinv},
        {"lambda", suite_lambda},
        {"pade", suite_pade},
        {"lq-moments", suite_lq_moments},
        {"steinhaff", suite_steinhaff},
        {"digamma", suite_digamma},
        {"equivariance", suite_equivariance},
        {"dominance", suite_dominance},
        {"exact-risk", suite_exact_risk},
    };
    return suites;
}

}  // namespace

bool SuiteResult::pass() const {
    return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& [name, fn] : registry()) v.push_back(name);
        return v;
    }();
    return names;
}

SuiteResult run_suite(const std::string& name, std::uint64_t seed) {
    for (const auto& [key, fn] : registry()) {
        if (key == name) return fn(seed);
    }
    throw ValidationError("unknown suite '" + name + "'");
}

}  // namespace steinshrink
