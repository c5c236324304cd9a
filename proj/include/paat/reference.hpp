#pragma once

#include <vector>

#include "paat/lstm.hpp"
#include "paat/matrix.hpp"
#include "paat/segments.hpp"

// Plain scalar-loop implementations kept alongside the parallel kernels.
// They are intentionally written without any shared kernel code so tests
// and the benchmark can compare the two paths independently.

namespace paat::ref {

Matrix matmulRef(const Matrix& a, const Matrix& b);
Matrix rowSoftmaxRef(const Matrix& x);

struct AttentionRef {
    Matrix A;  // L x N
    Matrix V;  // 2u x L
};

// Z = tanh(W H); A = softmax(U Z) row-wise; V = H A^T.
AttentionRef labelAttentionRef(const Matrix& W, const Matrix& U, const Matrix& H);

struct PartitionAttentionRef {
    std::vector<AttentionRef> perSegment;
    Matrix T;   // L x n, alpha applied
    Matrix M;   // L x n
    Matrix Vp;  // 2u x L
};

PartitionAttentionRef partitionAttentionRef(const Matrix& W, const Matrix& U, const Matrix& H,
                                            const SegmentBoundaries& boundaries, double alpha);

// Naive unrolled bi-LSTM, gate by gate, value by value.
Matrix biLstmRef(const BiLstmView& w, const Matrix& x);

// Embedding lookup with segment-local mean mixing.
Matrix embedSegmentsRef(const Matrix& table, const std::vector<TokenId>& tokens,
                        const SegmentBoundaries& boundaries, double gamma);

}  // namespace paat::ref
