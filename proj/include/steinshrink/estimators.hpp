#pragma once

// Estimators of Sigma under the (singular) Stein loss. All take a
// SampleContext describing one observed X and the known rank r, and return
// an Estimate. Branches follow the ordering of (n, p, r):
//   q = min(n, r), m = max(n, r).

#include <optional>
#include <string>
#include <vector>

#include "steinshrink/matdecomp.hpp"

namespace steinshrink {

struct SampleData;

/// Everything an estimator may read from one draw.
struct SampleContext {
    Matrix x;        // p x n observation matrix
    SymPsdMatrix s;  // X X^t
    EigenPair eig;   // top q eigenpairs of S
    Index p = 0;
    Index n = 0;
    Index r = 0;
    Index q = 0;
    Index m = 0;

    const Vector& ell() const noexcept { return eig.values; }
    const Matrix& h() const noexcept { return eig.vectors; }
};

/// Builds the context from raw observations; computes S and its top q eigenpairs.
SampleContext make_context(Matrix x, Index r);

/// Reuses the decomposition already held by a simulated draw.
SampleContext make_context(const SampleData& sample, Index r);

struct Estimate {
    SymPsdMatrix matrix;
    Index declared_rank = 0;
    std::string label;
    std::optional<double> lambda;  // lambda-hat, when the estimator solves for one
    std::optional<double> b;       // b used for lambda-hat
    std::vector<std::string> warnings;
};

enum class BKind { B0, B1, BStar, Constant };

struct ShrinkageSpec {
    BKind kind = BKind::B0;
    double constant = 0.0;  // used when kind == Constant
    double solver_tol = 1e-12;
    int max_iter = 200;
};

/// Label fragment for b: "b0", "b1", "bstar" or the constant.
std::string b_label(const ShrinkageSpec& spec);

/// d_i = 1 / (n + r - 2i + 1), i = 1..q.
Vector js_weights(Index n, Index r);

Estimate unbiased(const SampleContext& ctx);
Estimate best_constant(const SampleContext& ctx);
/// T D^JS T^t through sample_lq; propagates LeadingBlockError.
Estimate james_stein(const SampleContext& ctx);
Estimate stein_orth(const SampleContext& ctx);

/// Solves sum_j lambda / (ell_j + lambda) = b for lambda >= 0, 0 <= b < q.
/// Bracketed by the closed-form bounds, then safeguarded Newton.
double solve_lambda(const Vector& ell, double b, double tol = 1e-12, int max_iter = 200);

/// Closed-form bracket for lambda-hat: lower = (b/(q-b)) q / tr S^+,
/// upper = min((b/(q-b)) tr S / q, b / ((1-b) tr S^+) when b < 1).
struct LambdaBounds {
    double lower = 0.0;
    double upper = 0.0;
};
LambdaBounds lambda_bounds(const Vector& ell, double b);

/// Context needed by the b-functions.
struct BContext {
    Vector ell;  // descending, length q
    Index n = 0;
    Index p = 0;
    Index q = 0;
    Index m = 0;
};

/// b0 = c0 q / (1 + c0), c0 = 6(q+1)/(3m-4q-4);
/// b1 = (1 + ell_q / ell_1) b0;
/// bstar = c/(1+c), c = 2(q-1)/(m-q+1).
/// Throws ConfigError naming the violated inequality, or when b is not in [0, q).
double b_value(const ShrinkageSpec& spec, const BContext& ctx);

/// Dimension-only preconditions of b_value (no data needed).
void check_b_preconditions(const ShrinkageSpec& spec, Index q, Index m);

/// (S + lambda P) / m with P = H H^t when r <= n and I_p when r > n.
Estimate empirical_bayes(const SampleContext& ctx, const ShrinkageSpec& spec);

/// EB minus (lambda / m) H H^t: S / n when r <= n, else (S + lambda (I - H H^t)) / r.
Estimate shrinkage(const SampleContext& ctx, const ShrinkageSpec& spec);

/// James-Stein part on span(H) plus (lambda / m)(I - H H^t); needs r > n.
Estimate modified_js(const SampleContext& ctx, const ShrinkageSpec& spec);

/// Stein's orthogonally invariant part on span(H) plus (lambda / m)(I - H H^t); needs r > n.
Estimate modified_st(const SampleContext& ctx, const ShrinkageSpec& spec);

/// (S + c u I_p) / p with u = 1 / tr S^+; needs p > n.
Estimate haff(const SampleContext& ctx, double c);

// ---------------------------------------------------------------------------
// Labels. Stable strings such as "UB", "JS", "EB(b0)", "mST(b1)",
// "EB(bstar)", "SH(0.5)", "HF(2)" name estimators in configs and CSV output.

enum class Family { UB, BC, JS, ST, EB, SH, mJS, mST, HF };

struct EstimatorId {
    Family family = Family::UB;
    ShrinkageSpec spec;        // EB, SH, mJS, mST
    double haff_c = 0.0;       // HF
    std::string label;
};

/// Parses a label; throws ValidationError for unknown names or arguments.
EstimatorId parse_estimator(const std::string& label);

/// Rank of the estimate for dimensions (p, n, r).
Index output_rank(const EstimatorId& id, Index p, Index n, Index r);

/// Dimension preconditions (r > n for mJS/mST, p > n for HF, b inequalities).
void check_estimator_preconditions(const EstimatorId& id, Index p, Index n, Index r);

Estimate evaluate(const EstimatorId& id, const SampleContext& ctx);

}  // namespace steinshrink
