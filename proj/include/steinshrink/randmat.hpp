#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "steinshrink/matdecomp.hpp"

namespace steinshrink {

/// Identifies one independent random stream.
struct SeedSpec {
    std::uint64_t master_seed = 0;
    std::uint64_t replication_index = 0;
};

/// 64-bit seed for a stream; a pure function of (master_seed, replication_index).
std::uint64_t derive_seed(const SeedSpec& seed);

/// Per-stream generator. Never shared between replications.
class Rng {
public:
    explicit Rng(const SeedSpec& seed);

    double standard_normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }
    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

Matrix standard_normal_matrix(Index rows, Index cols, const SeedSpec& seed);
Matrix standard_normal_matrix(Index rows, Index cols, Rng& rng);

/// Ground truth Sigma = B B^t of rank r, with sample size n attached.
struct CovarianceModel {
    Index p = 0;
    Index n = 0;
    Index r = 0;
    Matrix factor;           // B, p x r
    SymPsdMatrix sigma;      // declared rank r
    SymPsdMatrix sigma_pinv; // Sigma^+
    Matrix sigma_pinv_root;  // F, p x r with F F^t = Sigma^+
    bool diagonal = false;   // Sigma is diagonal (enables cheaper losses)
    std::string label;

    Index q() const noexcept { return std::min(n, r); }
    Index m() const noexcept { return std::max(n, r); }
};

/// Builds a model from a full-column-rank factor. Throws RankError otherwise.
CovarianceModel model_from_factor(Matrix factor, Index n, std::string label = "custom");

/// One draw X = B Z.
struct SampleData {
    Matrix x;        // p x n
    SymPsdMatrix s;  // X X^t, declared rank q
    EigenPair eig;   // top q
    Index q = 0;
    int redraws = 0;
};

/// Draws X = B Z with Z r x n standard normal. Draws whose Gram matrix is
/// rank deficient or has tied eigenvalues are re-drawn from derived
/// sub-seeds; after 8 re-draws a SimulationError is thrown.
SampleData draw_sample(const CovarianceModel& model, const SeedSpec& seed);

/// The three diagonal benchmark covariances, r = p, B = Sigma^{1/2}:
/// 1) I_p, 2) diag(10^{1-i/p}), 3) diag(100^{1-i/p}), i = 0..p-1.
CovarianceModel scenario_sigma(int case_id, Index p, Index n);

/// Sigma = B B^t with B a fixed p x r standard normal draw.
CovarianceModel singular_model(Index p, Index r, Index n, std::uint64_t seed);

}  // namespace steinshrink
