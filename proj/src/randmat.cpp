#include "steinshrink/randmat.hpp"

#include <cmath>
#include <string>

#include <Eigen/SVD>

#include "steinshrink/errors.hpp"

namespace steinshrink {

namespace {

constexpr int kMaxRedraws = 8;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(const SeedSpec& seed) {
    return splitmix64(splitmix64(seed.master_seed) ^ splitmix64(~seed.replication_index));
}

Rng::Rng(const SeedSpec& seed) : engine_(derive_seed(seed)) {}

Matrix standard_normal_matrix(Index rows, Index cols, Rng& rng) {
    if (rows < 0 || cols < 0) throw ValidationError("standard_normal_matrix: negative dimension");
    Matrix z(rows, cols);
    // Column-major fill order is part of the reproducibility contract.
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) z(i, j) = rng.standard_normal();
    return z;
}

Matrix standard_normal_matrix(Index rows, Index cols, const SeedSpec& seed) {
    Rng rng(seed);
    return standard_normal_matrix(rows, cols, rng);
}

CovarianceModel model_from_factor(Matrix factor, Index n, std::string label) {
    const Index p = factor.rows();
    const Index r = factor.cols();
    if (p < 1 || r < 1 || r > p) {
        throw ValidationError("model_from_factor: need p >= r >= 1, got p=" + std::to_string(p) +
                              ", r=" + std::to_string(r));
    }
    if (n < 1) throw ValidationError("model_from_factor: sample size must be positive");

    Eigen::JacobiSVD<Matrix> svd(factor, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    if (sv(r - 1) <= rank_tolerance(p, sv(0))) {
        throw RankError("model_from_factor: factor is not of full column rank");
    }

    CovarianceModel model;
    model.p = p;
    model.n = n;
    model.r = r;
    model.diagonal = r == p && factor.isDiagonal(0.0);
    model.sigma = SymPsdMatrix::with_rank(factor * factor.transpose(), r);
    // Sigma^+ = (B^t)^+ B^+ = U S^-2 U^t with B = U S V^t.
    const Matrix root = svd.matrixU() * sv.cwiseInverse().asDiagonal();
    model.sigma_pinv = SymPsdMatrix::with_rank(root * root.transpose(), r);
    model.sigma_pinv_root = root;
    model.factor = std::move(factor);
    model.label = std::move(label);
    return model;
}

SampleData draw_sample(const CovarianceModel& model, const SeedSpec& seed) {
    const Index q = model.q();
    for (int attempt = 0; attempt <= kMaxRedraws; ++attempt) {
        SeedSpec sub = seed;
        if (attempt > 0) {
            sub.master_seed = derive_seed(seed);
            sub.replication_index = static_cast<std::uint64_t>(attempt);
        }
        Rng rng(sub);
        const Matrix z = standard_normal_matrix(model.r, model.n, rng);
        Matrix x = model.factor * z;
        EigenPair eig;
        try {
            eig = gram_eigen_top(x, q);
        } catch (const RankError&) {
            continue;
        }
        if (eig.tie_flagged) continue;
        SampleData out;
        out.s = SymPsdMatrix::with_rank(x * x.transpose(), q);
        out.x = std::move(x);
        out.eig = std::move(eig);
        out.q = q;
        out.redraws = attempt;
        return out;
    }
    throw SimulationError("draw_sample: rank or tie failure persisted after " +
                          std::to_string(kMaxRedraws) + " re-draws");
}

CovarianceModel scenario_sigma(int case_id, Index p, Index n) {
    if (p < 1) throw ValidationError("scenario_sigma: p must be positive");
    double base = 0.0;
    switch (case_id) {
        case 1: base = 1.0; break;
        case 2: base = 10.0; break;
        case 3: base = 100.0; break;
        default:
            throw ValidationError("scenario_sigma: unknown case " + std::to_string(case_id) +
                                  " (expected 1, 2 or 3)");
    }
    Vector root(p);
    for (Index i = 0; i < p; ++i) {
        const double exponent = 1.0 - static_cast<double>(i) / static_cast<double>(p);
        root(i) = std::sqrt(std::pow(base, exponent));
    }
    Matrix factor = root.asDiagonal();
    CovarianceModel model = model_from_factor(std::move(factor), n, "case" + std::to_string(case_id));
    // Exact diagonal inverse rather than the SVD route.
    model.sigma = SymPsdMatrix::with_rank(root.array().square().matrix().asDiagonal(), p);
    const Vector inv_root = root.cwiseInverse();
    model.sigma_pinv = SymPsdMatrix::with_rank(inv_root.array().square().matrix().asDiagonal(), p);
    model.sigma_pinv_root = inv_root.asDiagonal();
    model.diagonal = true;
    return model;
}

CovarianceModel singular_model(Index p, Index r, Index n, std::uint64_t seed) {
    if (r < 1 || r > p) {
        throw ValidationError("singular_model: need p >= r >= 1, got p=" + std::to_string(p) +
                              ", r=" + std::to_string(r));
    }
    for (std::uint64_t stream = 0; stream <= kMaxRedraws; ++stream) {
        Matrix factor = standard_normal_matrix(p, r, SeedSpec{seed, stream});
        try {
            return model_from_factor(std::move(factor), n, "singular");
        } catch (const RankError&) {
        }
    }
    throw SimulationError("singular_model: could not draw a full-column-rank factor");
}

}  // namespace steinshrink
