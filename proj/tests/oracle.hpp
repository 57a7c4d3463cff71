#pragma once

// Brute-force linear-algebra oracle for the estimation tests. Deliberately
// naive (plain loops, Gauss-Jordan inverse) and independent of the Eigen
// production path so the two can cross-check each other.

#include <cmath>
#include <stdexcept>
#include <vector>

namespace oracle {

using Mat = std::vector<std::vector<double>>;
using Vec = std::vector<double>;

inline Mat transpose(const Mat& a) {
    Mat t(a[0].size(), Vec(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[0].size(); ++j) t[j][i] = a[i][j];
    return t;
}

inline Mat mul(const Mat& a, const Mat& b) {
    Mat c(a.size(), Vec(b[0].size(), 0.0));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t k = 0; k < b.size(); ++k)
            for (std::size_t j = 0; j < b[0].size(); ++j) c[i][j] += a[i][k] * b[k][j];
    return c;
}

inline Vec mul_vec(const Mat& a, const Vec& x) {
    Vec y(a.size(), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < x.size(); ++j) y[i] += a[i][j] * x[j];
    return y;
}

inline Mat inverse(Mat a) {
    const std::size_t n = a.size();
    Mat inv(n, Vec(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
        if (std::fabs(a[pivot][col]) < 1e-12)
            throw std::runtime_error("oracle: singular matrix");
        std::swap(a[col], a[pivot]);
        std::swap(inv[col], inv[pivot]);
        const double d = a[col][col];
        for (std::size_t j = 0; j < n; ++j) {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r][col];
            for (std::size_t j = 0; j < n; ++j) {
                a[r][j] -= f * a[col][j];
                inv[r][j] -= f * inv[col][j];
            }
        }
    }
    return inv;
}

struct Fit {
    Vec beta;
    Vec residuals;
    Vec hat_diag;
    Vec se_hc3;
};

// Literal evaluation of the normal equations and the HC3 sandwich.
inline Fit ols_hc3(const Mat& x, const Vec& y) {
    const Mat xt = transpose(x);
    const Mat xtx_inv = inverse(mul(xt, x));

    Fit f;
    f.beta = mul_vec(xtx_inv, mul_vec(xt, y));

    const std::size_t n = x.size(), k = x[0].size();
    f.residuals.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double fitted = 0;
        for (std::size_t j = 0; j < k; ++j) fitted += x[i][j] * f.beta[j];
        f.residuals[i] = y[i] - fitted;
    }

    // hat diagonal: x_i' (X'X)^-1 x_i
    f.hat_diag.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double h = 0;
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < k; ++b) h += x[i][a] * xtx_inv[a][b] * x[i][b];
        f.hat_diag[i] = h;
    }

    // meat: X' diag(e^2/(1-h)^2) X
    Mat meat(k, Vec(k, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        const double w = f.residuals[i] * f.residuals[i] /
                         ((1.0 - f.hat_diag[i]) * (1.0 - f.hat_diag[i]));
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < k; ++b) meat[a][b] += w * x[i][a] * x[i][b];
    }
    const Mat cov = mul(mul(xtx_inv, meat), xtx_inv);
    f.se_hc3.resize(k);
    for (std::size_t j = 0; j < k; ++j) f.se_hc3[j] = std::sqrt(cov[j][j]);
    return f;
}

// Classical homoskedastic standard errors for the HC3 comparison test.
inline Vec classical_se(const Mat& x, const Vec& residuals) {
    const std::size_t n = x.size(), k = x[0].size();
    double ssr = 0;
    for (double e : residuals) ssr += e * e;
    const double s2 = ssr / static_cast<double>(n - k);
    const Mat xtx_inv = inverse(mul(transpose(x), x));
    Vec se(k);
    for (std::size_t j = 0; j < k; ++j) se[j] = std::sqrt(s2 * xtx_inv[j][j]);
    return se;
}

}  // namespace oracle
