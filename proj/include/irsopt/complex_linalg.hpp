#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace irsopt {

using cplx = std::complex<double>;
using cvec = std::vector<cplx>;
using rvec = std::vector<double>;

// Dense row-major complex matrix.
class ComplexMatrix {
public:
    ComplexMatrix() = default;
    ComplexMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, cplx{0.0, 0.0}) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    cplx& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const cplx& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    const std::vector<cplx>& data() const { return data_; }
    std::vector<cplx>& data() { return data_; }

    cvec col(std::size_t c) const;
    void set_col(std::size_t c, const cvec& v);

    static ComplexMatrix identity(std::size_t n);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<cplx> data_;
};

// Dense row-major real matrix (used for lifted forms and solver internals).
class RealMatrix {
public:
    RealMatrix() = default;
    RealMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const double& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    static RealMatrix identity(std::size_t n);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

bool all_finite(const cvec& v);
bool all_finite(const rvec& v);
bool all_finite(const ComplexMatrix& m);
void require_finite(const cvec& v, const char* what);
void require_finite(const ComplexMatrix& m, const char* what);

// a^H b
cplx dot(const cvec& a, const cvec& b);
double norm2(const cvec& v);
double norm2(const rvec& v);
double norm_inf(const cvec& v);
cvec add(const cvec& a, const cvec& b);
cvec sub(const cvec& a, const cvec& b);
cvec scale(const cvec& a, cplx s);

ComplexMatrix adjoint(const ComplexMatrix& a);
ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b);
cvec mat_vec(const ComplexMatrix& a, const cvec& x);
// A^H x
cvec adjoint_vec(const ComplexMatrix& a, const cvec& x);
// A^H A
ComplexMatrix gram(const ComplexMatrix& a);
// W += s * h h^H
void add_scaled_outer(ComplexMatrix& w, double s, const cvec& h);
double frobenius_norm(const ComplexMatrix& a);
// Re(v^H Q v); exact for Hermitian Q.
double quad_form(const ComplexMatrix& q, const cvec& v);

// Solve W x = b for Hermitian positive definite W via LL^H factorization.
// Throws numeric_error with the failing pivot index when W is not positive definite.
cvec hermitian_solve(const ComplexMatrix& w, const cvec& b);

// Eigenvalues of a Hermitian matrix via cyclic Jacobi rotations, ascending order.
rvec eig_hermitian_values(const ComplexMatrix& b);

struct SvdExtremes {
    double sigma_max = 0.0;
    double sigma_min_nonzero = 0.0;  // smallest singular value above threshold; 0 if none
    int nonzero_count = 0;           // singular values above 1e-10 * sigma_max
};

// Extreme singular values of a general complex matrix.
SvdExtremes svd_extremes(const ComplexMatrix& a);

// z = a + ib maps to the stacked real vector [a; b].
rvec lift_to_real(const cvec& v);
cvec unlift_to_complex(const rvec& x);
// M maps to [[Re M, -Im M], [Im M, Re M]]; Hermitian M lifts to a symmetric matrix.
RealMatrix lift_matrix(const ComplexMatrix& m);

// Solve A x = b for real symmetric positive definite A. Throws numeric_error on breakdown.
rvec spd_solve(const RealMatrix& a, const rvec& b);

// True when A + shift*I admits a Cholesky factorization (cheap PSD test).
bool spd_factorizable(const RealMatrix& a, double shift);

}  // namespace irsopt
