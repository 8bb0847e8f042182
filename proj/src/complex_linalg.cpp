#include "irsopt/complex_linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "irsopt/errors.hpp"

namespace irsopt {

cvec ComplexMatrix::col(std::size_t c) const {
    cvec v(rows_);
    for (std::size_t r = 0; r < rows_; ++r) v[r] = (*this)(r, c);
    return v;
}

void ComplexMatrix::set_col(std::size_t c, const cvec& v) {
    for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = v[r];
}

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
    ComplexMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

RealMatrix RealMatrix::identity(std::size_t n) {
    RealMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

bool all_finite(const cvec& v) {
    for (const auto& z : v)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
}

bool all_finite(const rvec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

bool all_finite(const ComplexMatrix& m) { return all_finite(m.data()); }

void require_finite(const cvec& v, const char* what) {
    if (!all_finite(v)) throw invalid_input(std::string(what) + ": non-finite entries");
}

void require_finite(const ComplexMatrix& m, const char* what) {
    if (!all_finite(m.data())) throw invalid_input(std::string(what) + ": non-finite entries");
}

cplx dot(const cvec& a, const cvec& b) {
    if (a.size() != b.size()) throw invalid_input("dot: size mismatch");
    cplx s{0.0, 0.0};
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

double norm2(const cvec& v) {
    double s = 0.0;
    for (const auto& z : v) s += std::norm(z);
    return std::sqrt(s);
}

double norm2(const rvec& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double norm_inf(const cvec& v) {
    double m = 0.0;
    for (const auto& z : v) m = std::max(m, std::abs(z));
    return m;
}

cvec add(const cvec& a, const cvec& b) {
    if (a.size() != b.size()) throw invalid_input("add: size mismatch");
    cvec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

cvec sub(const cvec& a, const cvec& b) {
    if (a.size() != b.size()) throw invalid_input("sub: size mismatch");
    cvec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

cvec scale(const cvec& a, cplx s) {
    cvec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] * s;
    return r;
}

ComplexMatrix adjoint(const ComplexMatrix& a) {
    ComplexMatrix r(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) r(j, i) = std::conj(a(i, j));
    return r;
}

ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.cols() != b.rows()) throw invalid_input("matmul: inner dimension mismatch");
    ComplexMatrix r(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const cplx aik = a(i, k);
            if (aik == cplx{0.0, 0.0}) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) r(i, j) += aik * b(k, j);
        }
    return r;
}

cvec mat_vec(const ComplexMatrix& a, const cvec& x) {
    if (a.cols() != x.size()) throw invalid_input("mat_vec: dimension mismatch");
    cvec r(a.rows(), cplx{0.0, 0.0});
    for (std::size_t i = 0; i < a.rows(); ++i) {
        cplx s{0.0, 0.0};
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        r[i] = s;
    }
    return r;
}

cvec adjoint_vec(const ComplexMatrix& a, const cvec& x) {
    if (a.rows() != x.size()) throw invalid_input("adjoint_vec: dimension mismatch");
    cvec r(a.cols(), cplx{0.0, 0.0});
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const cplx xi = x[i];
        for (std::size_t j = 0; j < a.cols(); ++j) r[j] += std::conj(a(i, j)) * xi;
    }
    return r;
}

ComplexMatrix gram(const ComplexMatrix& a) {
    ComplexMatrix r(a.cols(), a.cols());
    for (std::size_t i = 0; i < a.cols(); ++i)
        for (std::size_t j = i; j < a.cols(); ++j) {
            cplx s{0.0, 0.0};
            for (std::size_t k = 0; k < a.rows(); ++k) s += std::conj(a(k, i)) * a(k, j);
            r(i, j) = s;
            r(j, i) = std::conj(s);
        }
    return r;
}

void add_scaled_outer(ComplexMatrix& w, double s, const cvec& h) {
    if (w.rows() != h.size() || w.cols() != h.size())
        throw invalid_input("add_scaled_outer: dimension mismatch");
    for (std::size_t i = 0; i < h.size(); ++i)
        for (std::size_t j = 0; j < h.size(); ++j) w(i, j) += s * h[i] * std::conj(h[j]);
}

double frobenius_norm(const ComplexMatrix& a) {
    double s = 0.0;
    for (const auto& z : a.data()) s += std::norm(z);
    return std::sqrt(s);
}

double quad_form(const ComplexMatrix& q, const cvec& v) {
    if (q.rows() != v.size() || q.cols() != v.size())
        throw invalid_input("quad_form: dimension mismatch");
    cplx s{0.0, 0.0};
    for (std::size_t i = 0; i < v.size(); ++i) {
        cplx row{0.0, 0.0};
        for (std::size_t j = 0; j < v.size(); ++j) row += q(i, j) * v[j];
        s += std::conj(v[i]) * row;
    }
    return s.real();
}

namespace {

// Lower-triangular complex Cholesky; throws on pivot loss with the pivot index.
ComplexMatrix cholesky(const ComplexMatrix& w) {
    const std::size_t n = w.rows();
    if (w.cols() != n) throw invalid_input("hermitian_solve: matrix not square");
    require_finite(w, "hermitian_solve");

    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(w(i, i)));
    const double floor = scale > 0.0 ? scale * 1e-15 : 0.0;

    ComplexMatrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = w(j, j).real();
        for (std::size_t k = 0; k < j; ++k) d -= std::norm(l(j, k));
        if (!(d > floor))
            throw numeric_error("hermitian_solve: matrix not positive definite", j);
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            cplx s = w(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * std::conj(l(j, k));
            l(i, j) = s / ljj;
        }
    }
    return l;
}

}  // namespace

cvec hermitian_solve(const ComplexMatrix& w, const cvec& b) {
    if (b.size() != w.rows()) throw invalid_input("hermitian_solve: rhs size mismatch");
    require_finite(b, "hermitian_solve rhs");
    const ComplexMatrix l = cholesky(w);
    const std::size_t n = b.size();

    cvec y(n);
    for (std::size_t i = 0; i < n; ++i) {
        cplx s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
        y[i] = s / l(i, i);
    }
    cvec x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        cplx s = y[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= std::conj(l(k, ii)) * x[k];
        x[ii] = s / l(ii, ii);
    }
    return x;
}

rvec eig_hermitian_values(const ComplexMatrix& b) {
    const std::size_t n = b.rows();
    if (b.cols() != n) throw invalid_input("eig_hermitian_values: matrix not square");
    require_finite(b, "eig_hermitian_values");

    ComplexMatrix a = b;
    const double norm_f = frobenius_norm(a);
    if (norm_f == 0.0) return rvec(n, 0.0);

    const int max_sweeps = 80;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += 2.0 * std::norm(a(p, q));
        if (std::sqrt(off) <= 1e-12 * norm_f) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const cplx g = a(p, q);
                const double ag = std::abs(g);
                if (ag <= 1e-300) {
                    a(p, q) = a(q, p) = 0.0;
                    continue;
                }
                // Phase factor makes the (p,q) entry real, then a standard
                // symmetric rotation annihilates it.
                const cplx u = std::conj(g) / ag;
                const double app = a(p, p).real();
                const double aqq = a(q, q).real();
                const double tau = (aqq - app) / (2.0 * ag);
                const double t =
                    -(tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                for (std::size_t i = 0; i < n; ++i) {
                    if (i == p || i == q) continue;
                    const cplx aip = a(i, p);
                    const cplx aiq = a(i, q);
                    a(i, p) = c * aip + u * s * aiq;
                    a(i, q) = -s * aip + u * c * aiq;
                    a(p, i) = std::conj(a(i, p));
                    a(q, i) = std::conj(a(i, q));
                }
                a(p, p) = app + t * ag;
                a(q, q) = aqq - t * ag;
                a(p, q) = a(q, p) = 0.0;
            }
        }
    }

    rvec vals(n);
    for (std::size_t i = 0; i < n; ++i) vals[i] = a(i, i).real();
    std::sort(vals.begin(), vals.end());
    return vals;
}

SvdExtremes svd_extremes(const ComplexMatrix& a) {
    require_finite(a, "svd_extremes");
    if (a.rows() == 0 || a.cols() == 0) throw invalid_input("svd_extremes: empty matrix");

    // Work on the Gram matrix of the smaller side.
    const ComplexMatrix g = a.rows() >= a.cols() ? gram(a) : gram(adjoint(a));
    rvec lam = eig_hermitian_values(g);

    SvdExtremes out;
    for (double& v : lam) v = v > 0.0 ? std::sqrt(v) : 0.0;
    out.sigma_max = lam.empty() ? 0.0 : lam.back();
    // Working on the Gram matrix squares the spectrum, so eigensolver roundoff
    // (~1e-16 * lambda_max) shows up as sigma ~ 1e-8 * sigma_max. Exact zeros
    // are only detectable above that noise floor; combine it with the nominal
    // relative threshold.
    const double noise_floor = 5e-8 * std::sqrt(double(g.rows())) * out.sigma_max;
    const double thresh = std::max(1e-10 * out.sigma_max, noise_floor);
    for (double v : lam) {
        if (v > thresh && v > 0.0) {
            ++out.nonzero_count;
            if (out.sigma_min_nonzero == 0.0 || v < out.sigma_min_nonzero)
                out.sigma_min_nonzero = v;
        }
    }
    return out;
}

rvec lift_to_real(const cvec& v) {
    rvec x(2 * v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        x[i] = v[i].real();
        x[v.size() + i] = v[i].imag();
    }
    return x;
}

cvec unlift_to_complex(const rvec& x) {
    if (x.size() % 2 != 0) throw invalid_input("unlift_to_complex: odd length");
    const std::size_t n = x.size() / 2;
    cvec v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = cplx{x[i], x[n + i]};
    return v;
}

RealMatrix lift_matrix(const ComplexMatrix& m) {
    const std::size_t r = m.rows();
    const std::size_t c = m.cols();
    RealMatrix out(2 * r, 2 * c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) {
            const double re = m(i, j).real();
            const double im = m(i, j).imag();
            out(i, j) = re;
            out(i, c + j) = -im;
            out(r + i, j) = im;
            out(r + i, c + j) = re;
        }
    return out;
}

namespace {

bool real_cholesky(const RealMatrix& a, double shift, RealMatrix& l, std::size_t* bad_pivot) {
    const std::size_t n = a.rows();
    l = RealMatrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j) + shift;
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 0.0)) {
            if (bad_pivot) *bad_pivot = j;
            return false;
        }
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / ljj;
        }
    }
    return true;
}

}  // namespace

rvec spd_solve(const RealMatrix& a, const rvec& b) {
    const std::size_t n = a.rows();
    if (a.cols() != n || b.size() != n) throw invalid_input("spd_solve: dimension mismatch");
    RealMatrix l;
    std::size_t bad = 0;
    if (!real_cholesky(a, 0.0, l, &bad))
        throw numeric_error("spd_solve: matrix not positive definite", bad);

    rvec y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
        y[i] = s / l(i, i);
    }
    rvec x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = y[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
        x[ii] = s / l(ii, ii);
    }
    return x;
}

bool spd_factorizable(const RealMatrix& a, double shift) {
    RealMatrix l;
    return real_cholesky(a, shift, l, nullptr);
}

}  // namespace irsopt
