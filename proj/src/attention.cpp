#include "paat/attention.hpp"

#include <algorithm>

#include "paat/kernels.hpp"

namespace paat {

AttentionOutput labelAttention(const AttentionParams& params, const Matrix& h) {
    if (params.W.cols() != h.rows()) {
        throw ShapeError("labelAttention: W is " + params.W.shapeStr() + ", H is " +
                         h.shapeStr());
    }
    AttentionOutput out;
    const Matrix z = tanhMap(matmul(params.W, h));
    out.A = rowSoftmax(matmul(params.U, z));
    out.V = matmul(h, out.A, false, true);
    return out;
}

Matrix segmentMix(const Matrix& t) { return rowSoftmax(t); }

PartitionAttentionOutput partitionAttention(const AttentionParams& params, const Matrix& h,
                                            const SegmentBoundaries& boundaries, double alpha) {
    boundaries.validate();
    if (boundaries.tokenCount() != h.cols()) {
        throw ContractError("partitionAttention: boundaries cover " +
                            std::to_string(boundaries.tokenCount()) + " columns, H has " +
                            std::to_string(h.cols()));
    }
    const std::size_t L = params.U.rows();
    const std::size_t n = boundaries.count();

    PartitionAttentionOutput out;
    Matrix rawT(L, n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto [s0, s1] = boundaries.spans[k];
        AttentionOutput seg = labelAttention(params, sliceCols(h, s0, s1));
        const Matrix zhat = tanhMap(matmul(params.W, seg.V));
        const Matrix ahat = matmul(params.U, zhat);  // L x L, no softmax here
        const Matrix d = diagOf(ahat);
        for (std::size_t l = 0; l < L; ++l) rawT.at(l, k) = d[l];
        out.perSegment.push_back(std::move(seg));
    }
    out.T = scaleMap(rawT, alpha);
    out.M = segmentMix(out.T);
    out.Vp = Matrix(h.rows(), L);
    for (std::size_t k = 0; k < n; ++k) {
        const Matrix& vk = out.perSegment[k].V;
        for (std::size_t i = 0; i < vk.rows(); ++i)
            for (std::size_t l = 0; l < L; ++l) out.Vp.at(i, l) += out.M.at(l, k) * vk.at(i, l);
    }
    return out;
}

namespace {

const std::string& nameOf(const std::vector<std::string>& tokenNames, TokenId id,
                          std::size_t position) {
    if (id < 0 || static_cast<std::size_t>(id) >= tokenNames.size()) {
        throw InputError("attentionMap: vocabulary has no token id " + std::to_string(id) +
                         " (position " + std::to_string(position) + ")");
    }
    return tokenNames[static_cast<std::size_t>(id)];
}

void sortByWeight(std::vector<TokenWeight>& v) {
    std::stable_sort(v.begin(), v.end(), [](const TokenWeight& a, const TokenWeight& b) {
        if (a.weight != b.weight) return a.weight > b.weight;
        return a.position < b.position;
    });
}

}  // namespace

std::vector<LabelAttentionMap> attentionMap(const AttentionOutput& conventional,
                                            const PartitionAttentionOutput* partition,
                                            const SegmentBoundaries& attBounds,
                                            const std::vector<TokenId>& docTokens,
                                            const std::vector<std::string>& tokenNames) {
    const std::size_t L = conventional.A.rows();
    const std::size_t N = docTokens.size();
    if (conventional.A.cols() != N) {
        throw ContractError("attentionMap: attention over " +
                            std::to_string(conventional.A.cols()) + " tokens, document has " +
                            std::to_string(N));
    }
    std::vector<LabelAttentionMap> maps(L);
    for (std::size_t l = 0; l < L; ++l) {
        LabelAttentionMap& m = maps[l];
        m.label = l;
        m.conventional.reserve(N);
        for (std::size_t j = 0; j < N; ++j) {
            m.conventional.push_back(
                {nameOf(tokenNames, docTokens[j], j), j, conventional.A.at(l, j)});
        }
        sortByWeight(m.conventional);

        if (partition != nullptr) {
            m.partition.reserve(N);
            m.segmentWeights.resize(partition->M.cols());
            for (std::size_t k = 0; k < partition->M.cols(); ++k)
                m.segmentWeights[k] = partition->M.at(l, k);
            for (std::size_t k = 0; k < attBounds.count(); ++k) {
                const auto [s0, s1] = attBounds.spans[k];
                const Matrix& ak = partition->perSegment[k].A;
                for (std::size_t j = s0; j < s1; ++j) {
                    m.partition.push_back({nameOf(tokenNames, docTokens[j], j), j,
                                           partition->M.at(l, k) * ak.at(l, j - s0)});
                }
            }
            sortByWeight(m.partition);
        }
    }
    return maps;
}

}  // namespace paat
