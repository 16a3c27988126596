#pragma once

// Decompositions the estimators are built from: descending symmetric
// eigen-decomposition (optionally through the smaller Gram matrix),
// positive-diagonal LQ, Moore-Penrose pseudo-inverses and products of
// positive eigenvalues of rank-deficient products.

#include <Eigen/Dense>

namespace steinshrink {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Cutoff below which a singular value counts as zero: dim * eps * largest.
double rank_tolerance(Index dim, double largest_singular_value);

/// Symmetric positive semi-definite matrix with a declared numerical rank.
class SymPsdMatrix {
public:
    SymPsdMatrix() = default;

    /// Checks symmetry (1e-12 relative) and PSD-ness, then counts the rank.
    static SymPsdMatrix validated(const Matrix& m);

    /// Trusts the caller on PSD-ness and rank; only symmetrizes.
    static SymPsdMatrix with_rank(Matrix m, Index declared_rank);

    const Matrix& matrix() const noexcept { return m_; }
    Index dim() const noexcept { return m_.rows(); }
    Index declared_rank() const noexcept { return rank_; }

private:
    SymPsdMatrix(Matrix m, Index rank) : m_(std::move(m)), rank_(rank) {}

    Matrix m_;
    Index rank_ = 0;
};

/// Top-q eigenpairs, values descending, vectors column-orthonormal.
struct EigenPair {
    Matrix vectors;  // p x q
    Vector values;   // length q, descending
    /// Set when two retained eigenvalues are numerically tied.
    bool tie_flagged = false;
};

/// A = T V^t with T's top q x q block lower triangular, positive diagonal.
struct LqFactorization {
    Matrix tee;  // p x q
    Matrix vee;  // n x q
};

/// The q largest eigenpairs of a PSD matrix.
/// Throws RankError when fewer than q eigenvalues clear the rank tolerance.
EigenPair sym_eigen_top(const SymPsdMatrix& s, Index q);

/// Same, for a raw matrix; throws ValidationError when it is not symmetric.
EigenPair sym_eigen_top(const Matrix& s, Index q);

/// Top-q eigenpairs of S = X X^t. When X has fewer columns than rows the
/// n x n matrix X^t X is decomposed instead and H = X W L^{-1/2}.
EigenPair gram_eigen_top(const Matrix& x, Index q);

/// LQ of a full-row-rank q x n matrix (q <= n) via Householder QR of A^t,
/// then diagonal sign fixing. Throws RankError on row-rank deficiency.
LqFactorization lq_positive(const Matrix& a);

/// X = T V^t: LQ of the top q rows, T2 = X_(q+1:p) V.
/// Throws LeadingBlockError when the top q rows are rank deficient.
LqFactorization sample_lq(const Matrix& x, Index q);

/// Moore-Penrose pseudo-inverse of a PSD matrix (eigenvalue inversion
/// above the rank tolerance).
SymPsdMatrix pinv_psd(const SymPsdMatrix& s);

/// Moore-Penrose pseudo-inverse of a rectangular matrix via thin SVD.
Matrix pinv(const Matrix& a);

/// F with F F^t = S and as many columns as S has rank.
Matrix psd_root_factor(const SymPsdMatrix& s);

/// Sum of logs of the q largest-magnitude eigenvalues of a square matrix.
/// Throws SpectrumError if any of them is complex or non-positive beyond
/// tolerance.
double log_pos_eig_product(const Matrix& m, Index q);

/// exp(log_pos_eig_product(m, q)).
double pos_eig_product(const Matrix& m, Index q);

/// Sign convention: the largest-magnitude entry of each column is positive.
void normalize_column_signs(Matrix& vectors);

}  // namespace steinshrink
