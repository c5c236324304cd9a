#include "paat/encoder.hpp"

#include <cmath>
#include <string>

#include "paat/kernels.hpp"

namespace paat {

Matrix makeFrozenProjection(std::size_t embedDim, std::size_t vocabSize, std::uint64_t seed) {
    // Salted so the projection stream never collides with init streams.
    Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
    Matrix table(embedDim, vocabSize);
    const double bound = 1.0 / std::sqrt(static_cast<double>(embedDim));
    for (std::size_t i = 0; i < table.size(); ++i) table[i] = rng.uniform(-bound, bound);
    return table;
}

Matrix encodeSegment(const SegmentEncoderSpec& spec, const Matrix& table,
                     std::span<const TokenId> tokens) {
    if (tokens.empty()) throw InputError("encodeSegment: empty segment");
    const std::size_t e = table.rows();
    Matrix out(e, tokens.size());
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        const TokenId id = tokens[t];
        if (id < 0 || static_cast<std::size_t>(id) >= spec.vocabSize ||
            static_cast<std::size_t>(id) >= table.cols()) {
            throw InputError("encodeSegment: token id " + std::to_string(id) + " at position " +
                             std::to_string(t) + " is outside vocabulary of " +
                             std::to_string(spec.vocabSize));
        }
        for (std::size_t r = 0; r < e; ++r) out.at(r, t) = table.at(r, static_cast<std::size_t>(id));
    }
    if (spec.trainable() && spec.gamma != 0.0) {
        std::vector<double> mean(e);
        const double inv = 1.0 / static_cast<double>(tokens.size());
        for (std::size_t r = 0; r < e; ++r) {
            double acc = 0.0;
            for (std::size_t t = 0; t < tokens.size(); ++t) acc += out.at(r, t);
            mean[r] = acc * inv;
        }
        for (std::size_t t = 0; t < tokens.size(); ++t)
            for (std::size_t r = 0; r < e; ++r) out.at(r, t) += spec.gamma * mean[r];
    }
    return out;
}

Matrix dropoutMask(std::size_t rows, std::size_t cols, double rate, Rng& rng) {
    Matrix mask(rows, cols);
    const double keep = 1.0 - rate;
    const double inv = 1.0 / keep;
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = rng.uniform() < keep ? inv : 0.0;
    return mask;
}

Matrix biLstmForward(const BiLstmParams& params, const Matrix& x, double dropoutRate, Rng* rng) {
    BiLstmCache cache;
    Matrix out = biLstmForwardKernel(params.view(), x, &cache);
    if (rng != nullptr && dropoutRate > 0.0) {
        out = mul(out, dropoutMask(out.rows(), out.cols(), dropoutRate, *rng));
    }
    return out;
}

Matrix encodeDocument(const SegmentEncoderSpec& spec, const Matrix& table,
                      const BiLstmParams& lstm, const std::vector<TokenId>& tokens,
                      std::size_t nEnc, double dropoutRate, Rng* rng) {
    if (tokens.empty()) throw InputError("encodeDocument: empty document");
    const SegmentBoundaries bounds = segmentTokens(tokens, nEnc);
    std::vector<Matrix> parts;
    parts.reserve(bounds.count());
    for (const auto& [s0, s1] : bounds.spans) {
        parts.push_back(
            encodeSegment(spec, table, std::span<const TokenId>(tokens.data() + s0, s1 - s0)));
    }
    std::vector<const Matrix*> ptrs;
    ptrs.reserve(parts.size());
    for (const Matrix& m : parts) ptrs.push_back(&m);
    return biLstmForward(lstm, concatCols(ptrs), dropoutRate, rng);
}

}  // namespace paat
