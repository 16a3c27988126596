#include <doctest.h>

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "steinshrink/errors.hpp"
#include "steinshrink/matdecomp.hpp"
#include "steinshrink/randmat.hpp"

using namespace steinshrink;

namespace {

double rel(const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

// Classical Gram-Schmidt on the rows of A: A = L Q^t with positive diag(L).
std::pair<Matrix, Matrix> gram_schmidt_lq(const Matrix& a) {
    const Index q = a.rows();
    Matrix qt(q, a.cols());
    Matrix l = Matrix::Zero(q, q);
    for (Index i = 0; i < q; ++i) {
        Eigen::RowVectorXd v = a.row(i);
        for (Index j = 0; j < i; ++j) {
            l(i, j) = a.row(i).dot(qt.row(j));
            v -= l(i, j) * qt.row(j);
        }
        l(i, i) = v.norm();
        qt.row(i) = v / l(i, i);
    }
    return {l, qt.transpose()};
}

bool is_lower_positive(const Matrix& t) {
    for (Index i = 0; i < t.cols(); ++i) {
        if (!(t(i, i) > 0.0)) return false;
        for (Index j = i + 1; j < t.cols(); ++j) {
            if (t(i, j) != 0.0) return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("sym_eigen_top on identity returns unit values and an orthonormal basis") {
    const EigenPair e = sym_eigen_top(SymPsdMatrix::validated(Matrix::Identity(3, 3)), 3);
    CHECK(e.values.isApprox(Vector::Ones(3)));
    CHECK((e.vectors.transpose() * e.vectors - Matrix::Identity(3, 3)).norm() < 1e-12);
    CHECK(e.tie_flagged);
}

TEST_CASE("sym_eigen_top on diag(4,1) gives descending values and a signed permutation") {
    Matrix s = Matrix::Zero(2, 2);
    s(0, 0) = 1.0;
    s(1, 1) = 4.0;
    const EigenPair e = sym_eigen_top(s, 2);
    CHECK(e.values(0) == doctest::Approx(4.0));
    CHECK(e.values(1) == doctest::Approx(1.0));
    CHECK(std::abs(e.vectors(1, 0)) == doctest::Approx(1.0));
    CHECK(std::abs(e.vectors(0, 1)) == doctest::Approx(1.0));
    CHECK_FALSE(e.tie_flagged);
}

TEST_CASE("eigen reconstruction and Gram route agree with the p x p route") {
    const Matrix x = standard_normal_matrix(5, 2, SeedSpec{3, 0});
    const Matrix s = x * x.transpose();
    const EigenPair direct = sym_eigen_top(s, 2);
    CHECK(rel(direct.vectors * direct.values.asDiagonal() * direct.vectors.transpose(), s) < 1e-9);
    const EigenPair gram = gram_eigen_top(x, 2);
    CHECK(rel(gram.values, direct.values) < 1e-9);
    CHECK(rel(gram.vectors * gram.values.asDiagonal() * gram.vectors.transpose(), s) < 1e-9);
    CHECK((gram.vectors.transpose() * gram.vectors - Matrix::Identity(2, 2)).norm() < 1e-10);

    const Matrix wide = standard_normal_matrix(40, 7, SeedSpec{3, 1});
    const EigenPair g2 = gram_eigen_top(wide, 7);
    const EigenPair d2 = sym_eigen_top(Matrix(wide * wide.transpose()), 7);
    CHECK(rel(g2.values, d2.values) < 1e-9);
    CHECK(rel(g2.vectors, d2.vectors) < 1e-8);
}

TEST_CASE("sym_eigen_top errors") {
    const Matrix x = standard_normal_matrix(4, 2, SeedSpec{5, 0});
    CHECK_THROWS_AS(sym_eigen_top(Matrix(x * x.transpose()), 3), RankError);
    Matrix ns = Matrix::Identity(3, 3);
    ns(0, 1) = 0.5;
    CHECK_THROWS_AS(sym_eigen_top(ns, 2), ValidationError);
    CHECK_THROWS_AS(SymPsdMatrix::validated(ns), ValidationError);
    Matrix neg = Matrix::Identity(2, 2);
    neg(1, 1) = -1.0;
    CHECK_THROWS_AS(SymPsdMatrix::validated(neg), ValidationError);
}

TEST_CASE("SymPsdMatrix counts the numerical rank") {
    const Matrix b = standard_normal_matrix(6, 2, SeedSpec{8, 0});
    CHECK(SymPsdMatrix::validated(b * b.transpose()).declared_rank() == 2);
    CHECK(SymPsdMatrix::validated(Matrix::Identity(4, 4)).declared_rank() == 4);
}

TEST_CASE("lq_positive small examples") {
    const LqFactorization id = lq_positive(Matrix::Identity(2, 2));
    CHECK(rel(id.tee, Matrix::Identity(2, 2)) < 1e-15);
    CHECK(rel(id.vee, Matrix::Identity(2, 2)) < 1e-15);

    Matrix a(1, 2);
    a << 3.0, 4.0;
    const LqFactorization f = lq_positive(a);
    CHECK(f.tee(0, 0) == doctest::Approx(5.0));
    CHECK(f.vee(0, 0) == doctest::Approx(0.6));
    CHECK(f.vee(1, 0) == doctest::Approx(0.8));
}

TEST_CASE("lq_positive matches the Gram-Schmidt oracle") {
    for (std::uint64_t t = 0; t < 10; ++t) {
        const Matrix a = standard_normal_matrix(3, 7, SeedSpec{11, t});
        const LqFactorization f = lq_positive(a);
        const auto [l, v] = gram_schmidt_lq(a);
        CHECK(is_lower_positive(f.tee));
        CHECK((f.tee * f.vee.transpose() - a).norm() < 1e-12);
        CHECK((f.vee.transpose() * f.vee - Matrix::Identity(3, 3)).norm() < 1e-12);
        CHECK((f.tee - l).norm() < 1e-12);
        CHECK((f.vee - v).norm() < 1e-12);
    }
}

TEST_CASE("lq_positive rejects row-rank deficiency") {
    Matrix a = standard_normal_matrix(3, 5, SeedSpec{2, 0});
    a.row(2) = a.row(0) + a.row(1);
    CHECK_THROWS_AS(lq_positive(a), RankError);
    CHECK_THROWS_AS(lq_positive(Matrix::Ones(3, 2)), RankError);
}

TEST_CASE("sample_lq of a lower triangular matrix is itself") {
    Matrix x = standard_normal_matrix(4, 4, SeedSpec{6, 0}).triangularView<Eigen::Lower>();
    for (Index i = 0; i < 4; ++i) x(i, i) = std::abs(x(i, i)) + 0.5;
    const LqFactorization f = sample_lq(x, 4);
    CHECK((f.tee - x).norm() < 1e-12);
    CHECK((f.vee - Matrix::Identity(4, 4)).norm() < 1e-12);
}

TEST_CASE("sample_lq with p = n = r equals the Cholesky factor of S") {
    const Matrix x = standard_normal_matrix(6, 6, SeedSpec{7, 0});
    const Matrix s = x * x.transpose();
    const Matrix chol = Eigen::LLT<Matrix>(s).matrixL();
    const LqFactorization f = sample_lq(x, 6);
    CHECK(rel(f.tee, chol) < 1e-9);
}

TEST_CASE("sample_lq reconstructs X and its Gram matrix") {
    const Matrix x = standard_normal_matrix(5, 3, SeedSpec{9, 0});
    const LqFactorization f = sample_lq(x, 3);
    CHECK((f.tee * f.vee.transpose() - x).norm() < 1e-10);
    CHECK(rel(f.tee * f.tee.transpose(), x * x.transpose()) < 1e-9);
    CHECK(is_lower_positive(f.tee.topRows(3)));

    const LqFactorization again = sample_lq(x, 3);
    CHECK(f.tee == again.tee);
}

TEST_CASE("sample_lq raises LeadingBlockError on a singular leading block") {
    Matrix x = standard_normal_matrix(5, 4, SeedSpec{10, 0});
    x.row(1) = 2.0 * x.row(0);
    CHECK_THROWS_AS(sample_lq(x, 2), LeadingBlockError);
}

TEST_CASE("pinv_psd examples and Penrose conditions") {
    CHECK(rel(pinv_psd(SymPsdMatrix::validated(Matrix::Identity(4, 4))).matrix(), Matrix::Identity(4, 4)) <
          1e-15);

    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 2.0;
    const SymPsdMatrix pd = pinv_psd(SymPsdMatrix::validated(d));
    CHECK(pd.matrix()(0, 0) == doctest::Approx(0.5));
    CHECK(std::abs(pd.matrix()(1, 1)) < 1e-15);
    CHECK(pd.declared_rank() == 1);

    const Matrix b = standard_normal_matrix(6, 3, SeedSpec{12, 0});
    const Matrix s = b * b.transpose();
    const Matrix p = pinv_psd(SymPsdMatrix::validated(s)).matrix();
    CHECK(rel(s * p * s, s) < 1e-8);
    CHECK(rel(p * s * p, p) < 1e-8);
    CHECK(rel((s * p).transpose(), s * p) < 1e-8);
    CHECK(rel((p * s).transpose(), p * s) < 1e-8);
}

TEST_CASE("pos_eig_product examples") {
    CHECK(pos_eig_product(Matrix::Identity(3, 3), 3) == doctest::Approx(1.0));
    Matrix d = Matrix::Zero(3, 3);
    d(0, 0) = 2.0;
    d(1, 1) = 3.0;
    CHECK(pos_eig_product(d, 2) == doctest::Approx(6.0));

    d(1, 1) = -3.0;
    CHECK_THROWS_AS(pos_eig_product(d, 2), SpectrumError);
    Matrix rot(2, 2);
    rot << 0.0, -1.0, 1.0, 0.0;
    CHECK_THROWS_AS(pos_eig_product(rot, 2), SpectrumError);
}

TEST_CASE("pi(Sigma^+ T D T^t) = det(D) pi(Z Z^t)") {
    struct Dims {
        Index p, r, n;
    };
    for (const Dims& dm : {Dims{7, 3, 5}, Dims{7, 5, 3}}) {
        const Index q = std::min(dm.r, dm.n);
        const Matrix b = standard_normal_matrix(dm.p, dm.r, SeedSpec{21, 0});
        const Matrix z = standard_normal_matrix(dm.r, dm.n, SeedSpec{21, 1});
        const Matrix x = b * z;
        const Matrix sigma_pinv = pinv_psd(SymPsdMatrix::validated(b * b.transpose())).matrix();
        const LqFactorization f = sample_lq(x, q);
        Vector dvec(q);
        for (Index i = 0; i < q; ++i) dvec(i) = 1.0 / (dm.n + dm.r - 2 * (i + 1) + 1);
        const Matrix delta = f.tee * dvec.asDiagonal() * f.tee.transpose();
        const double lhs = log_pos_eig_product(sigma_pinv * delta, q);

        // pi(Z Z^t): product of nonzero eigenvalues = det of the smaller Gram matrix.
        const Matrix small = dm.r <= dm.n ? Matrix(z * z.transpose()) : Matrix(z.transpose() * z);
        const double rhs = dvec.array().log().sum() + std::log(small.determinant());
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8));
    }
}

TEST_CASE("reverse-order law for full-column-rank factors") {
    const Matrix b = standard_normal_matrix(6, 3, SeedSpec{31, 0});
    const Matrix c = standard_normal_matrix(4, 3, SeedSpec{31, 1});
    CHECK(rel(pinv(b * c.transpose()), pinv(c.transpose()) * pinv(b)) < 1e-8);
}
