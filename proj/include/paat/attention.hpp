#pragma once

#include <string>
#include <vector>

#include "paat/matrix.hpp"
#include "paat/segments.hpp"

namespace paat {

// One W and one U serve both the conventional and the partition-based
// attention mechanisms.
struct AttentionParams {
    Matrix W;  // d_a x 2u
    Matrix U;  // L x d_a
};

struct AttentionOutput {
    Matrix A;  // L x N, rows are probability distributions over tokens
    Matrix V;  // 2u x L, label-specific features
};

struct PartitionAttentionOutput {
    std::vector<AttentionOutput> perSegment;  // (A_k, V_k)
    Matrix T;   // L x n, smoothed segment scores (alpha applied)
    Matrix M;   // L x n, rows are mixtures over segments
    Matrix Vp;  // 2u x L
};

// Z = tanh(W H); A = rowSoftmax(U Z); V = H A^T.
AttentionOutput labelAttention(const AttentionParams& params, const Matrix& h);

// Label attention per column slice, then the learned segment mixture:
// Zhat_k = tanh(W V_k); Ahat_k = U Zhat_k (no softmax);
// T_k = diag(Ahat_k) * alpha; M = rowSoftmax(T); (Vp)_l = sum_k M[l][k] (V_k)_l.
PartitionAttentionOutput partitionAttention(const AttentionParams& params, const Matrix& h,
                                            const SegmentBoundaries& boundaries, double alpha);

// Row-wise softmax over the segment axis of T.
Matrix segmentMix(const Matrix& t);

struct TokenWeight {
    std::string token;
    std::size_t position = 0;
    double weight = 0.0;
};

struct LabelAttentionMap {
    std::size_t label = 0;
    std::vector<TokenWeight> conventional;       // ranked by weight desc
    std::vector<TokenWeight> partition;          // A_k rows scaled by M[l][k]
    std::vector<double> segmentWeights;          // M row, empty without partition output
};

// Ranked token/weight lists per label. tokenNames[id] resolves a token
// id to its string; partition may be null (variant without partition
// attention). Ties rank by earlier position.
std::vector<LabelAttentionMap> attentionMap(const AttentionOutput& conventional,
                                            const PartitionAttentionOutput* partition,
                                            const SegmentBoundaries& attBounds,
                                            const std::vector<TokenId>& docTokens,
                                            const std::vector<std::string>& tokenNames);

}  // namespace paat
