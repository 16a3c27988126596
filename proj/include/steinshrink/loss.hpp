#pragma once

#include <utility>

#include "steinshrink/matdecomp.hpp"

namespace steinshrink {

struct CovarianceModel;

/// Digamma for x > 0: upward recurrence to x >= 8, then the asymptotic
/// series through the x^-14 term. Absolute error below 1e-12.
double digamma(double x);

/// E[log chi^2_k] = log 2 + digamma(k / 2).
double e_log_chisq(int k);

/// Closed-form risk with the parameters it was computed for.
struct ExactRisk {
    double value = 0.0;
    int n = 0;
    int r = 0;
    int q = 0;
    int m = 0;
};

/// Risk of S / max(n, r): q log m - sum_i E[log chi^2_{m-i+1}].
ExactRisk exact_risk_bc(int n, int r);

/// Risk of T D^JS T^t: sum_i log(n+r-2i+1) - sum_i E[log chi^2_{m-i+1}].
ExactRisk exact_risk_js(int n, int r);

/// Pade-type bounds 2x/(2+x) <= log(1+x) <= x(6+x)/(2(3+2x)) for x >= 0.
std::pair<double, double> pade_bounds(double x);

/// tr(Sigma^-1 delta) - log det(Sigma^-1 delta) - p, both full rank.
double stein_loss(const SymPsdMatrix& delta, const SymPsdMatrix& sigma);

/// tr(Sigma^+ delta) - log pi(Sigma^+ delta) - q, where pi is the product of
/// the q positive eigenvalues. Goes through pos_eig_product on the
/// nonsymmetric product.
double stein_loss_singular(const SymPsdMatrix& delta, const SymPsdMatrix& sigma_pinv, Index q);

/// Same loss from a root F with F F^t = Sigma^+: the nonzero spectrum of
/// Sigma^+ delta equals that of the symmetric F^t delta F.
double stein_loss_singular_factored(const Matrix& delta, const Matrix& sigma_pinv_root, Index q);

/// Loss evaluator bound to one ground truth; caches the Cholesky factor
/// (full mode) or the pseudo-inverse root (singular mode).
class LossEvaluator {
public:
    enum class Mode { Full, Singular };

    LossEvaluator(const CovarianceModel& model, Mode mode);

    /// For Singular mode, `rank` is the rank k of Sigma^+ delta scored by L_k.
    double operator()(const Matrix& delta, Index rank) const;

    Mode mode() const noexcept { return mode_; }

private:
    Mode mode_;
    Index p_;
    bool diagonal_;
    Vector inv_sqrt_diag_;
    Eigen::LLT<Matrix> sigma_llt_;
    Matrix pinv_root_;
};

}  // namespace steinshrink
