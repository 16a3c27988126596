#include "steinshrink/matdecomp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "steinshrink/errors.hpp"

namespace steinshrink {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kSymmetryTol = 1e-12;
// Imaginary parts of a spectrum that should be real, relative to its scale.
constexpr double kImagTol = 1e-8;

void require_square(const Matrix& m, const char* what) {
    if (m.rows() != m.cols()) {
        throw ValidationError(std::string(what) + ": matrix must be square, got " +
                              std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
}

void require_symmetric(const Matrix& m, const char* what) {
    require_square(m, what);
    const double scale = m.norm();
    const double asym = (m - m.transpose()).norm();
    if (asym > kSymmetryTol * std::max(scale, 1e-300)) {
        throw ValidationError(std::string(what) + ": matrix is not symmetric (asymmetry " +
                              std::to_string(asym) + ")");
    }
}

struct SortedSpectrum {
    Vector values;  // descending
    Matrix vectors;
};

// Full symmetric eigen-decomposition, descending, ties kept in index order.
SortedSpectrum descending_eigen(const Matrix& s) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(s);
    if (solver.info() != Eigen::Success) {
        throw ValidationError("symmetric eigen-decomposition failed to converge");
    }
    const Vector& ev = solver.eigenvalues();
    const Index dim = ev.size();
    std::vector<Index> order(static_cast<std::size_t>(dim));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return ev(a) > ev(b); });
    SortedSpectrum out{Vector(dim), Matrix(dim, dim)};
    for (Index k = 0; k < dim; ++k) {
        out.values(k) = ev(order[static_cast<std::size_t>(k)]);
        out.vectors.col(k) = solver.eigenvectors().col(order[static_cast<std::size_t>(k)]);
    }
    return out;
}

Index count_above(const Vector& values, double tol) {
    return static_cast<Index>((values.array() > tol).count());
}

bool has_tie(const Vector& values, double tol) {
    for (Index i = 0; i + 1 < values.size(); ++i) {
        if (values(i) - values(i + 1) <= tol) return true;
    }
    return false;
}

EigenPair top_from_spectrum(SortedSpectrum spec, Index q, Index dim, const char* what) {
    const double largest = spec.values.size() > 0 ? std::max(spec.values(0), 0.0) : 0.0;
    const double tol = rank_tolerance(dim, largest);
    const Index rank = count_above(spec.values, tol);
    if (q > rank) {
        throw RankError(std::string(what) + ": requested " + std::to_string(q) +
                        " eigenpairs but numerical rank is " + std::to_string(rank));
    }
    EigenPair out;
    out.values = spec.values.head(q);
    out.vectors = spec.vectors.leftCols(q);
    normalize_column_signs(out.vectors);
    out.tie_flagged = has_tie(out.values, tol);
    return out;
}

}  // namespace

double rank_tolerance(Index dim, double largest_singular_value) {
    return static_cast<double>(std::max<Index>(dim, 1)) * kEps * largest_singular_value;
}

SymPsdMatrix SymPsdMatrix::validated(const Matrix& m) {
    require_symmetric(m, "SymPsdMatrix");
    Matrix sym = 0.5 * (m + m.transpose());
    if (sym.rows() == 0) return SymPsdMatrix(std::move(sym), 0);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
    const Vector& ev = solver.eigenvalues();
    const double largest = std::max(ev.cwiseAbs().maxCoeff(), 0.0);
    const double tol = rank_tolerance(sym.rows(), largest);
    if (ev.minCoeff() < -tol) {
        throw ValidationError("SymPsdMatrix: matrix has a negative eigenvalue " +
                              std::to_string(ev.minCoeff()));
    }
    const Index rank = count_above(ev, tol);
    return SymPsdMatrix(std::move(sym), rank);
}

SymPsdMatrix SymPsdMatrix::with_rank(Matrix m, Index declared_rank) {
    require_square(m, "SymPsdMatrix");
    if (declared_rank < 0 || declared_rank > m.rows()) {
        throw ValidationError("SymPsdMatrix: declared rank " + std::to_string(declared_rank) +
                              " outside [0, " + std::to_string(m.rows()) + "]");
    }
    Matrix sym = 0.5 * (m + m.transpose());
    return SymPsdMatrix(std::move(sym), declared_rank);
}

void normalize_column_signs(Matrix& vectors) {
    for (Index j = 0; j < vectors.cols(); ++j) {
        Index arg = 0;
        vectors.col(j).cwiseAbs().maxCoeff(&arg);
        if (vectors(arg, j) < 0.0) vectors.col(j) *= -1.0;
    }
}

EigenPair sym_eigen_top(const SymPsdMatrix& s, Index q) {
    if (q < 0 || q > s.dim()) {
        throw ValidationError("sym_eigen_top: q = " + std::to_string(q) + " outside [0, " +
                              std::to_string(s.dim()) + "]");
    }
    return top_from_spectrum(descending_eigen(s.matrix()), q, s.dim(), "sym_eigen_top");
}

EigenPair sym_eigen_top(const Matrix& s, Index q) {
    require_symmetric(s, "sym_eigen_top");
    if (q < 0 || q > s.rows()) {
        throw ValidationError("sym_eigen_top: q = " + std::to_string(q) + " outside [0, " +
                              std::to_string(s.rows()) + "]");
    }
    Matrix sym = 0.5 * (s + s.transpose());
    return top_from_spectrum(descending_eigen(sym), q, sym.rows(), "sym_eigen_top");
}

EigenPair gram_eigen_top(const Matrix& x, Index q) {
    const Index p = x.rows();
    const Index n = x.cols();
    if (q < 0 || q > std::min(p, n)) {
        throw ValidationError("gram_eigen_top: q = " + std::to_string(q) +
                              " exceeds min(rows, cols)");
    }
    if (n >= p) {
        Matrix s = x * x.transpose();
        return top_from_spectrum(descending_eigen(0.5 * (s + s.transpose())), q,
                                 std::max(p, n), "gram_eigen_top");
    }
    Matrix g = x.transpose() * x;
    EigenPair small =
        top_from_spectrum(descending_eigen(0.5 * (g + g.transpose())), q, p, "gram_eigen_top");
    EigenPair out;
    out.values = small.values;
    out.vectors = x * small.vectors;
    for (Index j = 0; j < q; ++j) out.vectors.col(j) /= std::sqrt(small.values(j));
    normalize_column_signs(out.vectors);
    out.tie_flagged = small.tie_flagged;
    return out;
}

LqFactorization lq_positive(const Matrix& a) {
    const Index q = a.rows();
    const Index n = a.cols();
    if (q > n) {
        throw RankError("lq_positive: " + std::to_string(q) + "x" + std::to_string(n) +
                        " matrix cannot have full row rank");
    }
    Eigen::HouseholderQR<Matrix> qr(a.transpose());
    Matrix r = qr.matrixQR().topRows(q).triangularView<Eigen::Upper>();
    Matrix vee = qr.householderQ() * Matrix::Identity(n, q);

    const double tol = rank_tolerance(std::max(q, n), a.norm());
    for (Index i = 0; i < q; ++i) {
        if (std::abs(r(i, i)) <= tol) {
            throw RankError("lq_positive: row rank deficient at pivot " + std::to_string(i));
        }
        if (r(i, i) < 0.0) {
            r.row(i) *= -1.0;
            vee.col(i) *= -1.0;
        }
    }
    return {r.transpose(), std::move(vee)};
}

LqFactorization sample_lq(const Matrix& x, Index q) {
    const Index p = x.rows();
    if (q < 1 || q > std::min(p, x.cols())) {
        throw ValidationError("sample_lq: q = " + std::to_string(q) +
                              " outside [1, min(rows, cols)]");
    }
    LqFactorization top;
    try {
        top = lq_positive(x.topRows(q));
    } catch (const RankError& e) {
        throw LeadingBlockError(std::string("sample_lq: leading block singular (") + e.what() +
                                ")");
    }
    LqFactorization out;
    out.tee.resize(p, q);
    out.tee.topRows(q) = top.tee;
    if (p > q) out.tee.bottomRows(p - q) = x.bottomRows(p - q) * top.vee;
    out.vee = std::move(top.vee);
    return out;
}

SymPsdMatrix pinv_psd(const SymPsdMatrix& s) {
    if (s.dim() == 0) return s;
    const SortedSpectrum spec = descending_eigen(s.matrix());
    const double tol = rank_tolerance(s.dim(), std::max(spec.values(0), 0.0));
    const Index rank = count_above(spec.values, tol);
    const Matrix u = spec.vectors.leftCols(rank);
    const Vector inv = spec.values.head(rank).cwiseInverse();
    return SymPsdMatrix::with_rank(u * inv.asDiagonal() * u.transpose(), rank);
}

Matrix pinv(const Matrix& a) {
    if (a.size() == 0) return Matrix(a.cols(), a.rows());
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    const double tol = rank_tolerance(std::max(a.rows(), a.cols()), sv(0));
    const Index rank = count_above(sv, tol);
    const Vector inv = sv.head(rank).cwiseInverse();
    return svd.matrixV().leftCols(rank) * inv.asDiagonal() *
           svd.matrixU().leftCols(rank).transpose();
}

Matrix psd_root_factor(const SymPsdMatrix& s) {
    if (s.dim() == 0) return Matrix(0, 0);
    const SortedSpectrum spec = descending_eigen(s.matrix());
    const double tol = rank_tolerance(s.dim(), std::max(spec.values(0), 0.0));
    const Index rank = count_above(spec.values, tol);
    Matrix f = spec.vectors.leftCols(rank);
    for (Index j = 0; j < rank; ++j) f.col(j) *= std::sqrt(spec.values(j));
    return f;
}

double log_pos_eig_product(const Matrix& m, Index q) {
    require_square(m, "pos_eig_product");
    if (q < 0 || q > m.rows()) {
        throw ValidationError("pos_eig_product: q = " + std::to_string(q) + " outside [0, " +
                              std::to_string(m.rows()) + "]");
    }
    if (q == 0) return 0.0;
    Eigen::EigenSolver<Matrix> solver(m, false);
    if (solver.info() != Eigen::Success) {
        throw SpectrumError("pos_eig_product: eigenvalue iteration failed to converge");
    }
    std::vector<std::complex<double>> ev(solver.eigenvalues().data(),
                                         solver.eigenvalues().data() + m.rows());
    std::stable_sort(ev.begin(), ev.end(), [](const auto& a, const auto& b) {
        return std::abs(a) > std::abs(b);
    });
    const double scale = std::abs(ev.front());
    const double tol = rank_tolerance(m.rows(), scale);
    double log_product = 0.0;
    for (Index i = 0; i < q; ++i) {
        const auto& z = ev[static_cast<std::size_t>(i)];
        if (std::abs(z.imag()) > kImagTol * scale) {
            throw SpectrumError("pos_eig_product: complex eigenvalue (" + std::to_string(z.real()) +
                                ", " + std::to_string(z.imag()) + ")");
        }
        if (z.real() <= tol) {
            throw SpectrumError("pos_eig_product: eigenvalue " + std::to_string(i + 1) +
                                " is not positive (" + std::to_string(z.real()) + ")");
        }
        log_product += std::log(z.real());
    }
    return log_product;
}

double pos_eig_product(const Matrix& m, Index q) {
    return std::exp(log_pos_eig_product(m, q));
}

}  // namespace steinshrink
