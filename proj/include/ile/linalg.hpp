#pragma once

#include "ile/tensor.hpp"

namespace ile {

// Cholesky factor (lower triangular) of a symmetric positive-definite matrix.
// Throws SingularityError on a non-positive pivot.
Tensor cholesky(const Tensor& spd);

// Solves L L^T x = b given the lower factor; b rank-1 n or rank-2 nxR.
Tensor cholesky_solve(const Tensor& chol_lower, const Tensor& b);

// LU with partial pivoting; returns log|det| and sign. Throws
// SingularityError when a pivot vanishes.
double lu_log_abs_det(const Tensor& a);

// General square solve via LU with partial pivoting (used by the information
// form smoother oracle; deliberately a different factorization than the
// Cholesky path behind ridge_solve).
Tensor lu_solve(const Tensor& a, const Tensor& b);

// Minimizer of ||M x - rhs||^2 + lambda ||x||^2 through the normal equations
// (M^T M + lambda I) x = M^T rhs, factored by Cholesky.
// rhs rank-1 P or rank-2 PxR; result matches.
Tensor ridge_solve(const Tensor& m, const Tensor& rhs, double lambda);

}  // namespace ile
