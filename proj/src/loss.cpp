#include "steinshrink/loss.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "steinshrink/errors.hpp"
#include "steinshrink/randmat.hpp"

namespace steinshrink {

namespace {

// Asymptotic series of digamma: B_2k / (2k), k = 1..7.
constexpr double kDigammaSeries[] = {
    1.0 / 12.0,  -1.0 / 120.0,         1.0 / 252.0, -1.0 / 240.0,
    1.0 / 132.0, -691.0 / 32760.0,     1.0 / 12.0,
};

// log det of an SPD matrix through its Cholesky diagonal; throws when not PD.
double checked_log_det(const Eigen::LLT<Matrix>& llt, const char* what) {
    if (llt.info() != Eigen::Success) {
        throw ValidationError(std::string(what) + ": matrix is not positive definite");
    }
    const auto diag = llt.matrixLLT().diagonal();
    double acc = 0.0;
    for (Index i = 0; i < diag.size(); ++i) {
        if (!(diag(i) > 0.0)) {
            throw ValidationError(std::string(what) + ": matrix is not positive definite");
        }
        acc += std::log(diag(i));
    }
    return 2.0 * acc;
}

// tr(W) - log det(W) - dim for symmetric W, via Cholesky.
double entropy_form(const Matrix& w, const char* what) {
    Eigen::LLT<Matrix> llt(w);
    return w.trace() - checked_log_det(llt, what) - static_cast<double>(w.rows());
}

}  // namespace

double digamma(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw ValidationError("digamma: argument must be positive and finite");
    }
    double shift = 0.0;
    while (x < 8.0) {
        shift -= 1.0 / x;
        x += 1.0;
    }
    const double inv2 = 1.0 / (x * x);
    double series = 0.0;
    double power = inv2;
    for (double coefficient : kDigammaSeries) {
        series += coefficient * power;
        power *= inv2;
    }
    return shift + std::log(x) - 0.5 / x - series;
}

double e_log_chisq(int k) {
    if (k < 1) throw ValidationError("e_log_chisq: degrees of freedom must be >= 1");
    return std::numbers::ln2 + digamma(0.5 * k);
}

namespace {

void check_dims(int n, int r, const char* what) {
    if (n < 1 || r < 1) {
        throw ValidationError(std::string(what) + ": n and r must be >= 1");
    }
}

double expected_log_pi(int q, int m) {
    double acc = 0.0;
    for (int i = 1; i <= q; ++i) acc += e_log_chisq(m - i + 1);
    return acc;
}

}  // namespace

ExactRisk exact_risk_bc(int n, int r) {
    check_dims(n, r, "exact_risk_bc");
    const int q = std::min(n, r);
    const int m = std::max(n, r);
    return {q * std::log(static_cast<double>(m)) - expected_log_pi(q, m), n, r, q, m};
}

ExactRisk exact_risk_js(int n, int r) {
    check_dims(n, r, "exact_risk_js");
    const int q = std::min(n, r);
    const int m = std::max(n, r);
    double acc = 0.0;
    for (int i = 1; i <= q; ++i) acc += std::log(static_cast<double>(n + r - 2 * i + 1));
    return {acc - expected_log_pi(q, m), n, r, q, m};
}

std::pair<double, double> pade_bounds(double x) {
    if (!(x >= 0.0)) throw ValidationError("pade_bounds: x must be nonnegative");
    return {2.0 * x / (2.0 + x), x * (6.0 + x) / (2.0 * (3.0 + 2.0 * x))};
}

double stein_loss(const SymPsdMatrix& delta, const SymPsdMatrix& sigma) {
    if (delta.dim() != sigma.dim()) throw ValidationError("stein_loss: dimension mismatch");
    Eigen::LLT<Matrix> llt(sigma.matrix());
    if (llt.info() != Eigen::Success) {
        throw ValidationError("stein_loss: Sigma is not positive definite");
    }
    // W = L^-1 delta L^-t shares its spectrum with Sigma^-1 delta.
    const auto lower = llt.matrixL();
    const Matrix half = lower.solve(delta.matrix());
    const Matrix w = lower.solve(half.transpose());
    return entropy_form(0.5 * (w + w.transpose()), "stein_loss");
}

double stein_loss_singular(const SymPsdMatrix& delta, const SymPsdMatrix& sigma_pinv, Index q) {
    if (delta.dim() != sigma_pinv.dim()) {
        throw ValidationError("stein_loss_singular: dimension mismatch");
    }
    const Matrix product = sigma_pinv.matrix() * delta.matrix();
    return product.trace() - log_pos_eig_product(product, q) - static_cast<double>(q);
}

double stein_loss_singular_factored(const Matrix& delta, const Matrix& sigma_pinv_root, Index q) {
    const Index r = sigma_pinv_root.cols();
    if (q < 1 || q > r) {
        throw ValidationError("stein_loss_singular: q = " + std::to_string(q) +
                              " outside [1, rank(Sigma)]");
    }
    Matrix g = sigma_pinv_root.transpose() * delta * sigma_pinv_root;
    g = 0.5 * (g + g.transpose());
    if (q == r) return entropy_form(g, "stein_loss_singular");

    Eigen::SelfAdjointEigenSolver<Matrix> solver(g, Eigen::EigenvaluesOnly);
    const Vector& ev = solver.eigenvalues();  // ascending
    const double tol = rank_tolerance(r, std::max(ev(r - 1), 0.0));
    double log_product = 0.0;
    for (Index i = r - q; i < r; ++i) {
        if (ev(i) <= tol) {
            throw SpectrumError("stein_loss_singular: Sigma^+ delta has fewer than " +
                                std::to_string(q) + " positive eigenvalues");
        }
        log_product += std::log(ev(i));
    }
    return g.trace() - log_product - static_cast<double>(q);
}

LossEvaluator::LossEvaluator(const CovarianceModel& model, Mode mode)
    : mode_(mode), p_(model.p), diagonal_(model.diagonal) {
    if (mode_ == Mode::Full) {
        if (model.r != model.p) {
            throw ConfigError("full-rank loss needs rank(Sigma) = p");
        }
        if (diagonal_) {
            inv_sqrt_diag_ = model.sigma.matrix().diagonal().cwiseSqrt().cwiseInverse();
        } else {
            sigma_llt_.compute(model.sigma.matrix());
            checked_log_det(sigma_llt_, "LossEvaluator");
        }
    } else {
        pinv_root_ = model.sigma_pinv_root;
    }
}

double LossEvaluator::operator()(const Matrix& delta, Index rank) const {
    if (delta.rows() != p_ || delta.cols() != p_) {
        throw ValidationError("LossEvaluator: estimate has wrong dimension");
    }
    if (mode_ == Mode::Singular) return stein_loss_singular_factored(delta, pinv_root_, rank);
    if (diagonal_) {
        const Matrix w = inv_sqrt_diag_.asDiagonal() * delta * inv_sqrt_diag_.asDiagonal();
        return entropy_form(w, "stein_loss");
    }
    const auto lower = sigma_llt_.matrixL();
    const Matrix half = lower.solve(delta);
    const Matrix w = lower.solve(half.transpose());
    return entropy_form(0.5 * (w + w.transpose()), "stein_loss");
}

}  // namespace steinshrink
