#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "twics/error.hpp"
#include "twics/stats.hpp"

namespace twics {

// Row-major dense matrix; just enough linear algebra for the regressions here.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

struct RegressionFit {
    std::vector<double> coefficients;
    Matrix coefficient_covariance;
    std::size_t n_obs = 0;
    bool converged = false;
    std::size_t iterations = 0;
};

namespace detail {

// Cholesky factorization of a symmetric positive definite matrix. A pivot
// collapsing relative to the diagonal scale means a (numerically) collinear
// column; we report which one.
inline Matrix cholesky(const Matrix& a) {
    const std::size_t n = a.rows();
    double max_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::fabs(a(i, i)));
    if (max_diag == 0.0) max_diag = 1.0;

    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (d <= 1e-12 * max_diag)
            throw SingularityError("design matrix is rank deficient: column " + std::to_string(j) +
                                   " is collinear with earlier columns");
        l(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return l;
}

inline std::vector<double> cholesky_solve(const Matrix& l, const std::vector<double>& b) {
    const std::size_t n = l.rows();
    std::vector<double> y(n), x(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
        y[i] = s / l(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double s = y[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
        x[ii] = s / l(ii, ii);
    }
    return x;
}

inline Matrix cholesky_inverse(const Matrix& l) {
    const std::size_t n = l.rows();
    Matrix inv(n, n);
    std::vector<double> e(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        auto col = cholesky_solve(l, e);
        for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
        e[j] = 0.0;
    }
    return inv;
}

}  // namespace detail

// Ordinary least squares via the normal equations with a rank guard.
inline RegressionFit fit_ols(const Matrix& x, const std::vector<double>& y) {
    const std::size_t n = x.rows(), p = x.cols();
    if (n != y.size()) throw EstimationError("fit_ols: X and y sizes differ");
    if (n < p) throw EstimationError("fit_ols: fewer rows than columns");

    Matrix xtx(p, p);
    std::vector<double> xty(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t a = 0; a < p; ++a) {
            const double xa = x(i, a);
            xty[a] += xa * y[i];
            for (std::size_t b = a; b < p; ++b) xtx(a, b) += xa * x(i, b);
        }
    }
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = 0; b < a; ++b) xtx(a, b) = xtx(b, a);

    const Matrix l = detail::cholesky(xtx);
    RegressionFit fit;
    fit.coefficients = detail::cholesky_solve(l, xty);
    fit.n_obs = n;
    fit.converged = true;

    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double pred = 0.0;
        for (std::size_t a = 0; a < p; ++a) pred += x(i, a) * fit.coefficients[a];
        rss += (y[i] - pred) * (y[i] - pred);
    }
    const double dof = n > p ? static_cast<double>(n - p) : 1.0;
    const double sigma2 = rss / dof;
    fit.coefficient_covariance = detail::cholesky_inverse(l);
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = 0; b < p; ++b) fit.coefficient_covariance(a, b) *= sigma2;
    return fit;
}

// Logistic regression by iteratively reweighted least squares. Stops when the
// largest score component or coefficient step falls below tol. Coefficients
// wandering past the guard on the log-odds scale mean (quasi-)complete
// separation: deterministic failure instead of silent divergence.
inline RegressionFit fit_logistic_irls(const Matrix& x, const std::vector<double>& y,
                                       double tol = 1e-10, std::size_t max_iter = 100,
                                       double separation_guard = 30.0) {
    const std::size_t n = x.rows(), p = x.cols();
    if (n != y.size()) throw EstimationError("fit_logistic_irls: X and y sizes differ");
    for (double v : y)
        if (v != 0.0 && v != 1.0)
            throw EstimationError("fit_logistic_irls: y must be 0/1");
    if (!(tol > 0.0)) throw EstimationError("fit_logistic_irls: tol must be > 0");

    RegressionFit fit;
    fit.coefficients.assign(p, 0.0);
    fit.n_obs = n;

    Matrix xtwx(p, p);
    std::vector<double> score(p), mu(n);

    for (std::size_t iter = 1; iter <= max_iter; ++iter) {
        fit.iterations = iter;
        for (std::size_t i = 0; i < n; ++i) {
            double eta = 0.0;
            for (std::size_t a = 0; a < p; ++a) eta += x(i, a) * fit.coefficients[a];
            mu[i] = logistic(eta);
        }
        std::fill(score.begin(), score.end(), 0.0);
        xtwx = Matrix(p, p);
        for (std::size_t i = 0; i < n; ++i) {
            const double w = mu[i] * (1.0 - mu[i]);
            const double r = y[i] - mu[i];
            for (std::size_t a = 0; a < p; ++a) {
                score[a] += x(i, a) * r;
                for (std::size_t b = a; b < p; ++b) xtwx(a, b) += w * x(i, a) * x(i, b);
            }
        }
        for (std::size_t a = 0; a < p; ++a)
            for (std::size_t b = 0; b < a; ++b) xtwx(a, b) = xtwx(b, a);

        double max_score = 0.0;
        for (double s : score) max_score = std::max(max_score, std::fabs(s));
        if (max_score < tol) {
            fit.converged = true;
            break;
        }

        Matrix l;
        try {
            l = detail::cholesky(xtwx);
        } catch (const SingularityError&) {
            throw SeparationError(
                "logistic fit: information matrix collapsed (separation or degenerate design)");
        }
        const auto step = detail::cholesky_solve(l, score);
        double max_step = 0.0;
        for (std::size_t a = 0; a < p; ++a) {
            fit.coefficients[a] += step[a];
            max_step = std::max(max_step, std::fabs(step[a]));
        }
        for (double c : fit.coefficients)
            if (std::fabs(c) > separation_guard)
                throw SeparationError("logistic fit diverged: |coefficient| exceeded " +
                                      std::to_string(separation_guard) +
                                      " on the log-odds scale (separation)");
        if (max_step < tol) {
            fit.converged = true;
            break;
        }
    }

    // Final information matrix at the solution for the covariance.
    for (std::size_t i = 0; i < n; ++i) {
        double eta = 0.0;
        for (std::size_t a = 0; a < p; ++a) eta += x(i, a) * fit.coefficients[a];
        mu[i] = logistic(eta);
    }
    xtwx = Matrix(p, p);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = mu[i] * (1.0 - mu[i]);
        for (std::size_t a = 0; a < p; ++a)
            for (std::size_t b = a; b < p; ++b) xtwx(a, b) += w * x(i, a) * x(i, b);
    }
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = 0; b < a; ++b) xtwx(a, b) = xtwx(b, a);
    try {
        fit.coefficient_covariance = detail::cholesky_inverse(detail::cholesky(xtwx));
    } catch (const SingularityError&) {
        throw SeparationError("logistic fit: covariance not computable (separation)");
    }
    return fit;
}

inline std::vector<double> logistic_predict(const Matrix& x, const std::vector<double>& coef) {
    std::vector<double> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double eta = 0.0;
        for (std::size_t a = 0; a < x.cols(); ++a) eta += x(i, a) * coef[a];
        out[i] = logistic(eta);
    }
    return out;
}

}  // namespace twics
