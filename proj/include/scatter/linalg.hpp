#pragma once

#include "scatter/matrix.hpp"

namespace scatter {

struct EigenDecomposition {
  Vec values;       // descending
  Matrix vectors;   // columns matching values
};

// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
EigenDecomposition sym_eig(const SymMatrix& m);

// Largest singular value via power iteration on m^T m (or m m^T, whichever is smaller).
double operator_norm(const Matrix& m);
double operator_norm(const SymMatrix& m);

// Symmetric PSD square root; eigenvalues in [-tol, 0) are clamped to zero,
// anything below -tol is an error. tol = 1e-9 * max |eigenvalue|.
SymMatrix sym_sqrt(const SymMatrix& m);

// Lower-triangular Cholesky factor of a positive definite matrix.
Matrix cholesky(const SymMatrix& m);

}  // namespace scatter
