#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "paat/lstm.hpp"
#include "paat/matrix.hpp"
#include "paat/rng.hpp"
#include "paat/segments.hpp"

namespace paat {

// Stand-in for the pretrained segment encoder: either a trainable
// embedding table with segment-local context mixing, or a frozen seeded
// projection that stays constant across training.
struct SegmentEncoderSpec {
    enum class Kind { TrainableEmbedding, FrozenProjection };

    Kind kind = Kind::TrainableEmbedding;
    std::size_t vocabSize = 0;
    std::size_t embedDim = 0;  // e
    double gamma = 0.5;        // context-mix weight, trainable kind only

    bool trainable() const { return kind == Kind::TrainableEmbedding; }
};

// The fixed projection table for Kind::FrozenProjection; deterministic
// in (embedDim, vocabSize, seed).
Matrix makeFrozenProjection(std::size_t embedDim, std::size_t vocabSize, std::uint64_t seed);

// One column per token: emb(token) for the frozen kind, or
// emb(token) + gamma * segment-mean(emb) for the trainable kind.
// The span is one segment's tokens.
Matrix encodeSegment(const SegmentEncoderSpec& spec, const Matrix& table,
                     std::span<const TokenId> tokens);

// Owning bi-LSTM parameters; tensor order matches LstmDirView.
struct LstmDirParams {
    Matrix Wi, Wf, Wg, Wo;  // u x e
    Matrix Ri, Rf, Rg, Ro;  // u x u
    Matrix bi, bf, bg, bo;  // u x 1

    LstmDirView view() const {
        return LstmDirView{{&Wi, &Wf, &Wg, &Wo, &Ri, &Rf, &Rg, &Ro, &bi, &bf, &bg, &bo}};
    }
};

struct BiLstmParams {
    LstmDirParams fwd, bwd;

    std::size_t hiddenSize() const { return fwd.Wi.rows(); }
    std::size_t inputSize() const { return fwd.Wi.cols(); }
    BiLstmView view() const { return BiLstmView{fwd.view(), bwd.view()}; }
};

// Full-sequence bidirectional pass over x (e x N); output 2u x N. With a
// non-null rng, inverted dropout at dropoutRate is applied entrywise to
// the output; pass nullptr at evaluation time.
Matrix biLstmForward(const BiLstmParams& params, const Matrix& x, double dropoutRate,
                     Rng* rng);

// Entries in {0, 1/(1-rate)}, drawn row-major.
Matrix dropoutMask(std::size_t rows, std::size_t cols, double rate, Rng& rng);

// Segment-encodes tokens into nEnc chunks, concatenates, and integrates
// with the bi-LSTM: H = biLstm(concat_k encodeSegment(segment_k)).
Matrix encodeDocument(const SegmentEncoderSpec& spec, const Matrix& table,
                      const BiLstmParams& lstm, const std::vector<TokenId>& tokens,
                      std::size_t nEnc, double dropoutRate = 0.0, Rng* rng = nullptr);

}  // namespace paat
