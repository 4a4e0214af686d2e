#include "ile/linalg.hpp"

#include <cmath>
#include <vector>

#include "ile/errors.hpp"

namespace ile {

Tensor cholesky(const Tensor& spd) {
    if (spd.rank() != 2 || spd.shape()[0] != spd.shape()[1])
        throw DimensionError("cholesky: square matrix required");
    const int n = spd.shape()[0];
    Tensor l({n, n});
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = spd.at(i, j);
            for (int k = 0; k < j; ++k) s -= l.at(i, k) * l.at(j, k);
            if (i == j) {
                if (s <= 0.0 || !std::isfinite(s))
                    throw SingularityError("cholesky: non-positive pivot at row " + std::to_string(i));
                l.at(i, i) = std::sqrt(s);
            } else {
                l.at(i, j) = s / l.at(j, j);
            }
        }
    }
    return l;
}

Tensor cholesky_solve(const Tensor& chol_lower, const Tensor& b) {
    const int n = chol_lower.shape()[0];
    const bool vec = b.rank() == 1;
    const int rcols = vec ? 1 : b.shape()[1];
    if ((vec ? b.shape()[0] : b.shape()[0]) != n) throw DimensionError("cholesky_solve: size mismatch");
    Tensor x = b;
    auto at = [&](Tensor& t, int r, int c) -> double& { return t.data()[static_cast<std::size_t>(r) * rcols + c]; };
    // forward substitution  L y = b
    for (int c = 0; c < rcols; ++c) {
        for (int i = 0; i < n; ++i) {
            double s = at(x, i, c);
            for (int k = 0; k < i; ++k) s -= chol_lower.at(i, k) * at(x, k, c);
            at(x, i, c) = s / chol_lower.at(i, i);
        }
        // back substitution  L^T x = y
        for (int i = n - 1; i >= 0; --i) {
            double s = at(x, i, c);
            for (int k = i + 1; k < n; ++k) s -= chol_lower.at(k, i) * at(x, k, c);
            at(x, i, c) = s / chol_lower.at(i, i);
        }
    }
    check_finite(x, "cholesky_solve");
    return x;
}

namespace {

// In-place LU with partial pivoting. Returns pivot rows, parity in sign.
void lu_factor(Tensor& a, std::vector<int>& piv) {
    const int n = a.shape()[0];
    piv.resize(n);
    for (int i = 0; i < n; ++i) piv[i] = i;
    for (int col = 0; col < n; ++col) {
        int best = col;
        double amax = std::fabs(a.at(col, col));
        for (int r = col + 1; r < n; ++r) {
            const double v = std::fabs(a.at(r, col));
            if (v > amax) {
                amax = v;
                best = r;
            }
        }
        if (amax == 0.0 || !std::isfinite(amax))
            throw SingularityError("lu: zero pivot at column " + std::to_string(col));
        if (best != col) {
            for (int c = 0; c < n; ++c) std::swap(a.at(col, c), a.at(best, c));
            std::swap(piv[col], piv[best]);
        }
        const double d = a.at(col, col);
        for (int r = col + 1; r < n; ++r) {
            const double f = a.at(r, col) / d;
            a.at(r, col) = f;
            for (int c = col + 1; c < n; ++c) a.at(r, c) -= f * a.at(col, c);
        }
    }
}

}  // namespace

double lu_log_abs_det(const Tensor& a) {
    if (a.rank() != 2 || a.shape()[0] != a.shape()[1]) throw DimensionError("lu_log_abs_det: square required");
    Tensor lu = a;
    std::vector<int> piv;
    lu_factor(lu, piv);
    double logdet = 0.0;
    for (int i = 0; i < lu.shape()[0]; ++i) logdet += std::log(std::fabs(lu.at(i, i)));
    if (!std::isfinite(logdet)) throw SingularityError("lu_log_abs_det: vanishing determinant");
    return logdet;
}

Tensor lu_solve(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || a.shape()[0] != a.shape()[1]) throw DimensionError("lu_solve: square required");
    const int n = a.shape()[0];
    const bool vec = b.rank() == 1;
    const int rcols = vec ? 1 : b.shape()[1];
    if (b.shape()[0] != n) throw DimensionError("lu_solve: size mismatch");
    Tensor lu = a;
    std::vector<int> piv;
    lu_factor(lu, piv);
    Tensor x = b;
    auto at = [&](Tensor& t, int r, int c) -> double& { return t.data()[static_cast<std::size_t>(r) * rcols + c]; };
    auto bat = [&](const Tensor& t, int r, int c) { return t.data()[static_cast<std::size_t>(r) * rcols + c]; };
    for (int c = 0; c < rcols; ++c) {
        for (int i = 0; i < n; ++i) at(x, i, c) = bat(b, piv[i], c);
        for (int i = 0; i < n; ++i) {
            double s = at(x, i, c);
            for (int k = 0; k < i; ++k) s -= lu.at(i, k) * at(x, k, c);
            at(x, i, c) = s;
        }
        for (int i = n - 1; i >= 0; --i) {
            double s = at(x, i, c);
            for (int k = i + 1; k < n; ++k) s -= lu.at(i, k) * at(x, k, c);
            at(x, i, c) = s / lu.at(i, i);
        }
    }
    check_finite(x, "lu_solve");
    return x;
}

Tensor ridge_solve(const Tensor& m, const Tensor& rhs, double lambda) {
    if (m.rank() != 2) throw DimensionError("ridge_solve: rank-2 system matrix required");
    if (lambda < 0.0) throw ConfigError("ridge_solve: negative lambda");
    check_finite(m, "ridge_solve input");
    check_finite(rhs, "ridge_solve rhs");
    if (rhs.shape()[0] != m.shape()[0]) throw DimensionError("ridge_solve: rhs rows mismatch");
    Tensor g = gram(m);
    for (int i = 0; i < g.shape()[0]; ++i) g.at(i, i) += lambda;
    const Tensor l = cholesky(g);
    const Tensor mtr = matmul(transpose(m), rhs);
    return cholesky_solve(l, mtr);
}

}  // namespace ile
