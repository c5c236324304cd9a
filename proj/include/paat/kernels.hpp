#pragma once

#include <cstddef>
#include <vector>

#include "paat/matrix.hpp"

// Dense kernels shared by the forward operations and the autodiff tape.
// Large loops run under OpenMP; every kernel keeps a fixed per-cell
// summation order (ascending k), so results are bitwise identical for
// any thread count. tests/ checks them against the serial references in
// paat/reference.hpp.

namespace paat {

// Work threshold below which parallel loops stay serial. Training-step
// products are well under this; document-level evaluation fan-out and
// paper-width products sit above it.
inline constexpr std::size_t kParallelCutoff = 4u << 20;

// out (+)= op(a) * op(b), with optional transposes. Shapes are validated
// against the effective (post-transpose) dimensions.
void matmulAcc(Matrix& out, const Matrix& a, const Matrix& b, bool transA, bool transB,
               bool accumulate);

Matrix matmul(const Matrix& a, const Matrix& b, bool transA = false, bool transB = false);

// Row-wise softmax with per-row max subtraction.
Matrix rowSoftmax(const Matrix& x);

Matrix tanhMap(const Matrix& x);
Matrix sigmoidMap(const Matrix& x);
Matrix scaleMap(const Matrix& x, double c);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix mul(const Matrix& a, const Matrix& b);  // Hadamard

// Diagonal of a square matrix as a column vector.
Matrix diagOf(const Matrix& x);

// out[:,j] += v for every column j (v is m x 1).
Matrix addColVec(const Matrix& a, const Matrix& v);

// out[:,l] = a[:,l] * s[l]  (s is cols x 1).
Matrix colScale(const Matrix& a, const Matrix& s);

Matrix sliceCols(const Matrix& a, std::size_t c0, std::size_t c1);
Matrix concatCols(const std::vector<const Matrix*>& parts);
Matrix concatRows(const Matrix& a, const Matrix& b);

double sumAll(const Matrix& a);

}  // namespace paat
