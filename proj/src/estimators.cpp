#include "steinshrink/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

#include <fmt/format.h>

#include "steinshrink/errors.hpp"
#include "steinshrink/randmat.hpp"

namespace steinshrink {

namespace {

// Keeps the lambda bracket finite: b must stay this far below q.
constexpr double kBGuard = 1e-6;

Estimate make_estimate(Matrix m, Index rank, std::string label) {
    Estimate e;
    e.matrix = SymPsdMatrix::with_rank(std::move(m), rank);
    e.declared_rank = rank;
    e.label = std::move(label);
    return e;
}

// (I - H H^t) scaled, added in place without materializing H_0.
void add_complement_projector(Matrix& target, const Matrix& h, double scale) {
    if (scale == 0.0) return;
    target.noalias() -= scale * (h * h.transpose());
    target.diagonal().array() += scale;
}

Matrix weighted_gram(const Matrix& cols, const Vector& weights) {
    return cols * weights.asDiagonal() * cols.transpose();
}

struct Shrunk {
    double b = 0.0;
    double lambda = 0.0;
};

Shrunk shrink_parameters(const SampleContext& ctx, const ShrinkageSpec& spec) {
    BContext bctx{ctx.ell(), ctx.n, ctx.p, ctx.q, ctx.m};
    Shrunk out;
    out.b = b_value(spec, bctx);
    out.lambda = solve_lambda(ctx.ell(), out.b, spec.solver_tol, spec.max_iter);
    return out;
}

void require_r_above_n(const SampleContext& ctx, const char* what) {
    if (ctx.r <= ctx.n) {
        throw ConfigError(std::string(what) + ": needs r > n (got n=" + std::to_string(ctx.n) +
                          ", r=" + std::to_string(ctx.r) + ")");
    }
}

std::string format_number(double v) { return fmt::format("{:g}", v); }

}  // namespace

SampleContext make_context(Matrix x, Index r) {
    const Index p = x.rows();
    const Index n = x.cols();
    if (p < 1 || n < 1) throw ValidationError("make_context: empty observation matrix");
    if (r < 1 || r > p) {
        throw ValidationError("make_context: rank r = " + std::to_string(r) + " outside [1, p]");
    }
    SampleContext ctx;
    ctx.p = p;
    ctx.n = n;
    ctx.r = r;
    ctx.q = std::min(n, r);
    ctx.m = std::max(n, r);
    ctx.eig = gram_eigen_top(x, ctx.q);
    ctx.s = SymPsdMatrix::with_rank(x * x.transpose(), ctx.q);
    ctx.x = std::move(x);
    return ctx;
}

SampleContext make_context(const SampleData& sample, Index r) {
    SampleContext ctx;
    ctx.p = sample.x.rows();
    ctx.n = sample.x.cols();
    ctx.r = r;
    ctx.q = sample.q;
    ctx.m = std::max(ctx.n, r);
    ctx.x = sample.x;
    ctx.s = sample.s;
    ctx.eig = sample.eig;
    return ctx;
}

std::string b_label(const ShrinkageSpec& spec) {
    switch (spec.kind) {
        case BKind::B0: return "b0";
        case BKind::B1: return "b1";
        case BKind::BStar: return "bstar";
        case BKind::Constant: return format_number(spec.constant);
    }
    return "?";
}

Vector js_weights(Index n, Index r) {
    const Index q = std::min(n, r);
    Vector d(q);
    for (Index i = 1; i <= q; ++i) d(i - 1) = 1.0 / static_cast<double>(n + r - 2 * i + 1);
    return d;
}

Estimate unbiased(const SampleContext& ctx) {
    return make_estimate(ctx.s.matrix() / static_cast<double>(ctx.n), ctx.q, "UB");
}

Estimate best_constant(const SampleContext& ctx) {
    return make_estimate(ctx.s.matrix() / static_cast<double>(ctx.m), ctx.q, "BC");
}

Estimate james_stein(const SampleContext& ctx) {
    const LqFactorization lq = sample_lq(ctx.x, ctx.q);
    return make_estimate(weighted_gram(lq.tee, js_weights(ctx.n, ctx.r)), ctx.q, "JS");
}

Estimate stein_orth(const SampleContext& ctx) {
    const Vector phi = ctx.ell().cwiseProduct(js_weights(ctx.n, ctx.r));
    return make_estimate(weighted_gram(ctx.h(), phi), ctx.q, "ST");
}

LambdaBounds lambda_bounds(const Vector& ell, double b) {
    const double q = static_cast<double>(ell.size());
    const double trace_s = ell.sum();
    const double trace_pinv = ell.cwiseInverse().sum();
    const double ratio = b / (q - b);
    LambdaBounds out{ratio * q / trace_pinv, ratio * trace_s / q};
    if (b < 1.0) out.upper = std::min(out.upper, b / ((1.0 - b) * trace_pinv));
    return out;
}

double solve_lambda(const Vector& ell, double b, double tol, int max_iter) {
    const double q = static_cast<double>(ell.size());
    if (ell.size() == 0 || (ell.array() <= 0.0).any()) {
        throw ValidationError("solve_lambda: eigenvalues must be positive");
    }
    if (!(b >= 0.0) || !(b < q)) {
        throw ValidationError(fmt::format("solve_lambda: b = {} outside [0, {})", b, q));
    }
    if (!(tol > 0.0)) throw ValidationError("solve_lambda: tolerance must be positive");
    if (b == 0.0) return 0.0;

    // g(lambda) - b, strictly increasing and concave in lambda.
    const auto excess = [&](double lambda) {
        return (lambda / (ell.array() + lambda)).sum() - b;
    };
    const auto slope = [&](double lambda) {
        return (ell.array() / (ell.array() + lambda).square()).sum();
    };

    const LambdaBounds bounds = lambda_bounds(ell, b);
    double lo = bounds.lower;
    double hi = bounds.upper;
    // The bounds are exact inequalities; widen by rounding slack only.
    lo *= 1.0 - 1e-12;
    hi *= 1.0 + 1e-12;
    if (excess(lo) > 0.0) lo = 0.0;
    while (excess(hi) < 0.0) hi *= 2.0;

    double lambda = lo > 0.0 ? lo : 0.5 * hi;
    for (int iter = 0; iter < max_iter; ++iter) {
        const double f = excess(lambda);
        if (f == 0.0) return lambda;
        if (f < 0.0) lo = lambda; else hi = lambda;

        double next = lambda - f / slope(lambda);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        const double step = std::abs(next - lambda);
        lambda = next;
        if (step <= tol * lambda || hi - lo <= tol * hi) return lambda;
    }
    return lambda;
}

void check_b_preconditions(const ShrinkageSpec& spec, Index q, Index m) {
    if (!(spec.solver_tol > 0.0)) throw ConfigError("solver tolerance must be positive");
    if (spec.max_iter < 1) throw ConfigError("solver max_iter must be >= 1");
    switch (spec.kind) {
        case BKind::B0:
        case BKind::B1:
            if (3 * m - 4 * q - 4 <= 0) {
                throw ConfigError(fmt::format(
                    "b0 requires 3m - 4q - 4 > 0 (m={}, q={}: 3m - 4q - 4 = {})", m, q,
                    3 * m - 4 * q - 4));
            }
            break;
        case BKind::BStar:
            if (q < 2) throw ConfigError(fmt::format("bstar requires q >= 2 (q={})", q));
            if (m - q - 1 <= 0) {
                throw ConfigError(fmt::format("bstar requires m - q - 1 > 0 (m={}, q={})", m, q));
            }
            break;
        case BKind::Constant:
            if (!(spec.constant >= 0.0) ||
                !(spec.constant <= static_cast<double>(q) - kBGuard)) {
                throw ConfigError(fmt::format("constant b = {} outside [0, q) with q = {}",
                                              spec.constant, q));
            }
            break;
    }
}

double b_value(const ShrinkageSpec& spec, const BContext& ctx) {
    const double q = static_cast<double>(ctx.q);
    const double m = static_cast<double>(ctx.m);
    if (spec.kind == BKind::Constant) {
        if (!(spec.constant >= 0.0) || !(spec.constant < q - kBGuard)) {
            throw ValidationError(
                fmt::format("constant b = {} outside [0, q) with q = {}", spec.constant, ctx.q));
        }
        return spec.constant;
    }
    check_b_preconditions(spec, ctx.q, ctx.m);

    double b = 0.0;
    if (spec.kind == BKind::BStar) {
        const double c = 2.0 * (q - 1.0) / (m - q + 1.0);
        b = c / (1.0 + c);
    } else {
        const double c0 = 6.0 * (q + 1.0) / (3.0 * m - 4.0 * q - 4.0);
        b = c0 * q / (1.0 + c0);
        if (spec.kind == BKind::B1) {
            if (ctx.ell.size() != ctx.q) {
                throw ValidationError("b1 needs the q sample eigenvalues");
            }
            b *= 1.0 + ctx.ell(ctx.q - 1) / ctx.ell(0);
        }
    }
    if (!(b >= 0.0) || !(b < q - kBGuard)) {
        throw ConfigError(fmt::format("{} = {} is not in [0, q) with q = {}", b_label(spec), b,
                                      ctx.q));
    }
    return b;
}

Estimate empirical_bayes(const SampleContext& ctx, const ShrinkageSpec& spec) {
    const Shrunk sh = shrink_parameters(ctx, spec);
    const double a = 1.0 / static_cast<double>(ctx.m);
    Matrix m = ctx.s.matrix();
    Index rank = ctx.q;
    if (ctx.r <= ctx.n) {
        m.noalias() += sh.lambda * (ctx.h() * ctx.h().transpose());
    } else {
        m.diagonal().array() += sh.lambda;
        if (sh.lambda > 0.0) rank = ctx.p;
    }
    Estimate e = make_estimate(a * m, rank, "EB(" + b_label(spec) + ")");
    e.lambda = sh.lambda;
    e.b = sh.b;
    if (ctx.r > ctx.n && ctx.r == ctx.p && sh.lambda == 0.0) {
        e.warnings.push_back("RankWarning: lambda = 0 leaves the estimate with rank n < p");
    }
    return e;
}

Estimate shrinkage(const SampleContext& ctx, const ShrinkageSpec& spec) {
    const Shrunk sh = shrink_parameters(ctx, spec);
    const std::string label = "SH(" + b_label(spec) + ")";
    if (ctx.r <= ctx.n) {
        Estimate e = make_estimate(ctx.s.matrix() / static_cast<double>(ctx.n), ctx.q, label);
        e.lambda = sh.lambda;
        e.b = sh.b;
        return e;
    }
    const double a = 1.0 / static_cast<double>(ctx.m);
    Matrix m = a * ctx.s.matrix();
    add_complement_projector(m, ctx.h(), a * sh.lambda);
    Estimate e = make_estimate(std::move(m), sh.lambda > 0.0 ? ctx.p : ctx.q, label);
    e.lambda = sh.lambda;
    e.b = sh.b;
    return e;
}

namespace {

Estimate modified(const SampleContext& ctx, const ShrinkageSpec& spec, Matrix core,
                  const char* family) {
    const Shrunk sh = shrink_parameters(ctx, spec);
    add_complement_projector(core, ctx.h(), sh.lambda / static_cast<double>(ctx.m));
    Estimate e = make_estimate(std::move(core), sh.lambda > 0.0 ? ctx.p : ctx.q,
                               std::string(family) + "(" + b_label(spec) + ")");
    e.lambda = sh.lambda;
    e.b = sh.b;
    return e;
}

}  // namespace

Estimate modified_js(const SampleContext& ctx, const ShrinkageSpec& spec) {
    require_r_above_n(ctx, "modified_js");
    return modified(ctx, spec, james_stein(ctx).matrix.matrix(), "mJS");
}

Estimate modified_st(const SampleContext& ctx, const ShrinkageSpec& spec) {
    require_r_above_n(ctx, "modified_st");
    return modified(ctx, spec, stein_orth(ctx).matrix.matrix(), "mST");
}

Estimate haff(const SampleContext& ctx, double c) {
    if (ctx.p <= ctx.n) {
        throw ConfigError(fmt::format("haff: needs p > n (p={}, n={})", ctx.p, ctx.n));
    }
    if (!(c >= 0.0)) throw ValidationError("haff: c must be nonnegative");
    const double u = 1.0 / ctx.ell().cwiseInverse().sum();
    Matrix m = ctx.s.matrix();
    m.diagonal().array() += c * u;
    Estimate e = make_estimate(m / static_cast<double>(ctx.p), c > 0.0 ? ctx.p : ctx.q,
                               "HF(" + format_number(c) + ")");
    e.lambda = c * u;
    return e;
}

namespace {

ShrinkageSpec parse_b(const std::string& arg, const std::string& label) {
    ShrinkageSpec spec;
    if (arg == "b0") {
        spec.kind = BKind::B0;
    } else if (arg == "b1") {
        spec.kind = BKind::B1;
    } else if (arg == "bstar") {
        spec.kind = BKind::BStar;
    } else {
        char* end = nullptr;
        const double v = std::strtod(arg.c_str(), &end);
        if (arg.empty() || end != arg.c_str() + arg.size() || !std::isfinite(v)) {
            throw ValidationError("estimator '" + label + "': b must be b0, b1, bstar or a number");
        }
        spec.kind = BKind::Constant;
        spec.constant = v;
    }
    return spec;
}

}  // namespace

EstimatorId parse_estimator(const std::string& label) {
    EstimatorId id;
    const auto open = label.find('(');
    const std::string name = label.substr(0, open);
    std::string arg;
    if (open != std::string::npos) {
        if (label.back() != ')' || label.size() < open + 3) {
            throw ValidationError("malformed estimator label '" + label + "'");
        }
        arg = label.substr(open + 1, label.size() - open - 2);
    }

    static const std::pair<const char*, Family> kPlain[] = {
        {"UB", Family::UB}, {"BC", Family::BC}, {"JS", Family::JS}, {"ST", Family::ST}};
    static const std::pair<const char*, Family> kShrunk[] = {
        {"EB", Family::EB}, {"SH", Family::SH}, {"mJS", Family::mJS}, {"mST", Family::mST}};

    for (const auto& [n, f] : kPlain) {
        if (name == n) {
            if (!arg.empty() || open != std::string::npos) {
                throw ValidationError("estimator '" + name + "' takes no argument");
            }
            id.family = f;
            id.label = name;
            return id;
        }
    }
    for (const auto& [n, f] : kShrunk) {
        if (name == n) {
            if (arg.empty()) throw ValidationError("estimator '" + name + "' needs a b argument");
            id.family = f;
            id.spec = parse_b(arg, label);
            id.label = name + "(" + b_label(id.spec) + ")";
            return id;
        }
    }
    if (name == "HF") {
        if (arg.empty()) throw ValidationError("estimator 'HF' needs a constant c");
        char* end = nullptr;
        const double c = std::strtod(arg.c_str(), &end);
        if (end != arg.c_str() + arg.size() || !(c >= 0.0) || !std::isfinite(c)) {
            throw ValidationError("estimator '" + label + "': c must be a nonnegative number");
        }
        id.family = Family::HF;
        id.haff_c = c;
        id.label = "HF(" + format_number(c) + ")";
        return id;
    }
    throw ValidationError("unknown estimator '" + label + "'");
}

Index output_rank(const EstimatorId& id, Index p, Index n, Index r) {
    const Index q = std::min(n, r);
    const bool zero_b = id.spec.kind == BKind::Constant && id.spec.constant == 0.0;
    switch (id.family) {
        case Family::UB:
        case Family::BC:
        case Family::JS:
        case Family::ST:
            return q;
        case Family::EB:
        case Family::SH:
            if (r <= n) return r;
            return zero_b ? q : p;
        case Family::mJS:
        case Family::mST:
            return zero_b ? q : p;
        case Family::HF:
            return id.haff_c > 0.0 ? p : q;
    }
    return q;
}

void check_estimator_preconditions(const EstimatorId& id, Index p, Index n, Index r) {
    const Index q = std::min(n, r);
    const Index m = std::max(n, r);
    switch (id.family) {
        case Family::UB:
        case Family::BC:
        case Family::JS:
        case Family::ST:
            return;
        case Family::mJS:
        case Family::mST:
            if (r <= n) {
                throw ConfigError(fmt::format("{} needs r > n (n={}, r={})", id.label, n, r));
            }
            [[fallthrough]];
        case Family::EB:
        case Family::SH:
            check_b_preconditions(id.spec, q, m);
            return;
        case Family::HF:
            if (p <= n) throw ConfigError(fmt::format("{} needs p > n (p={}, n={})", id.label, p, n));
            return;
    }
}

Estimate evaluate(const EstimatorId& id, const SampleContext& ctx) {
    Estimate e;
    switch (id.family) {
        case Family::UB: e = unbiased(ctx); break;
        case Family::BC: e = best_constant(ctx); break;
        case Family::JS: e = james_stein(ctx); break;
        case Family::ST: e = stein_orth(ctx); break;
        case Family::EB: e = empirical_bayes(ctx, id.spec); break;
        case Family::SH: e = shrinkage(ctx, id.spec); break;
        case Family::mJS: e = modified_js(ctx, id.spec); break;
        case Family::mST: e = modified_st(ctx, id.spec); break;
        case Family::HF: e = haff(ctx, id.haff_c); break;
    }
    e.label = id.label;
    return e;
}

}  // namespace steinshrink
