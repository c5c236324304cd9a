#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "paat/attention.hpp"
#include "paat/data.hpp"
#include "paat/encoder.hpp"
#include "paat/metrics.hpp"
#include "paat/tape.hpp"

namespace paat {

// Ablations: PE drops partition encoding (one encoding segment), PA
// drops partition attention (head sees V only), PEA reduces both
// partition counts to one, BI swaps the bi-LSTM for a per-token affine
// map.
enum class Variant { Paat, PaatPE, PaatPA, PaatPEA, PaatBI };

std::string variantName(Variant v);
Variant parseVariant(const std::string& name);

struct PaatConfig {
    std::size_t vocabSize = 0;
    std::size_t labelCount = 0;
    std::size_t embedDim = 32;   // e
    std::size_t hiddenSize = 16; // u; the attention input width is 2u
    std::size_t attnDim = 32;    // d_a
    double alpha = 0.8;
    std::size_t nEnc = 6;
    std::size_t nAtt = 6;
    double dropoutRate = 0.3;
    SegmentEncoderSpec::Kind encoderKind = SegmentEncoderSpec::Kind::TrainableEmbedding;
    double gamma = 0.5;
    Variant variant = Variant::Paat;
    std::size_t maxTokens = 8192;
    std::uint64_t seed = 42;
    std::size_t headHidden = 0;  // optional hidden layer width, 0 = none
    bool splitOnHeaders = false;

    // training
    double lr = 0.0015;
    double beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8;
    double weightDecay = 0.01;
    std::size_t epochs = 30;
    std::size_t patience = 5;
    std::size_t gradAccum = 1;
    double threshold = 0.5;

    void validate() const;
    std::size_t effNEnc() const;
    std::size_t effNAtt() const;
    bool usesPartitionAttention() const { return variant != Variant::PaatPA; }
    bool usesBiLstm() const { return variant != Variant::PaatBI; }
    // Width of the per-label feature the classifier head consumes.
    std::size_t featureWidth() const {
        return (usesPartitionAttention() ? 4 : 2) * hiddenSize;
    }
    SegmentEncoderSpec encoderSpec() const;

    std::map<std::string, std::string> toKeyValues() const;
    static PaatConfig fromKeyValues(const std::map<std::string, std::string>& kv);
};

struct ModelParams {
    Matrix embed;  // e x vocab; frozen under Kind::FrozenProjection
    BiLstmParams lstm;
    Matrix affineW, affineB;  // PAAT-BI replacement, 2u x e and 2u x 1
    Matrix attnW, attnU;      // shared by both attention mechanisms
    Matrix headHiddenW, headHiddenB;
    Matrix headW, headB;      // L x featureWidth (or headHidden), L x 1
};

struct TensorRef {
    std::string name;
    Matrix* tensor;
    bool trainable;
    std::size_t fanIn;
};

struct ForwardResult {
    std::vector<double> probs;  // clamped into (0,1)
    AttentionOutput conventional;
    std::optional<PartitionAttentionOutput> partition;
    SegmentBoundaries attBounds;
    bool truncated = false;
};

class PaatModel {
public:
    PaatModel() = default;

    // Zero-valued tensors shaped for the config.
    static PaatModel allocate(const PaatConfig& config);
    // Seeded uniform(-1/sqrt(fanIn), +1/sqrt(fanIn)) init; the frozen
    // projection kind fills the table from its own salted stream.
    static PaatModel init(const PaatConfig& config);

    const PaatConfig& config() const { return config_; }
    ModelParams& params() { return params_; }
    const ModelParams& params() const { return params_; }

    // Fixed-order registry of every tensor the model owns.
    std::vector<TensorRef> tensors();
    std::vector<TensorRef> tensors() const;

    ForwardResult forward(const std::vector<TokenId>& tokens, bool wantAttention = false) const;

    // Deterministic training loss (dropout off); the finite-difference
    // checker perturbs tensors between calls.
    double lossForward(const Document& doc) const;

    struct StepResult {
        double loss;
        std::vector<Matrix> grads;  // aligned with tensors()
    };

    // One forward/backward pass; dropout drawn from rng when given.
    StepResult lossBackward(const Document& doc, Rng* dropoutRng);

private:
    struct GraphOut {
        NodeId probs = -1;
        NodeId loss = -1;
        NodeId convA = -1, convV = -1;
        std::vector<NodeId> segA, segV;
        NodeId partT = -1, partM = -1, partVp = -1;
        SegmentBoundaries attBounds;
        bool truncated = false;
    };
    GraphOut buildGraph(Tape& tape, const std::vector<TokenId>& tokens,
                        const std::vector<std::uint8_t>* gold, const Matrix* dropout,
                        bool forGrads) const;

    PaatConfig config_;
    ModelParams params_;
};

// Mean over labels of -[y ln p + (1-y) ln(1-p)] with probabilities
// clamped to [1e-12, 1 - 1e-12].
double bceLoss(const std::vector<double>& probs, const std::vector<std::uint8_t>& gold);

std::vector<std::uint8_t> goldMask(const Document& doc, std::size_t labelCount);

struct OptimizerState {
    double lr = 0.0015;
    double beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8;
    double weightDecay = 0.01;
    std::uint64_t step = 0;
    std::vector<Matrix> m, v;  // aligned with the tensor registry

    static OptimizerState forModel(PaatModel& model, const PaatConfig& config);
};

// Decoupled weight decay Adam; frozen tensors untouched; aborts with a
// diagnostic on non-finite gradients.
void adamwStep(const std::vector<TensorRef>& tensors, const std::vector<Matrix>& grads,
               OptimizerState& state);

// Scores documents in parallel against a read-only parameter snapshot;
// rows ordered by document index.
ScoreMatrix scoreDataset(const PaatModel& model, const std::vector<Document>& docs);

struct EpochLog {
    std::size_t epoch = 0;  // 1-based
    double trainBce = 0.0;
    double validMicroF1 = 0.0;
};

struct TrainResult {
    PaatModel model;  // best-epoch parameters
    std::vector<EpochLog> log;
    std::size_t bestEpoch = 0;
    double bestValidMicroF1 = 0.0;
};

// Shuffled per-document SGD with AdamW; keeps the checkpoint of the
// epoch with the best validation micro-F1; deterministic under the
// config seed. Throws on divergence naming the epoch and step.
TrainResult trainLoop(const PaatConfig& config, const std::vector<Document>& train,
                      const std::vector<Document>& valid);

// Checkpoint file: magic "PAATCKPT", version, tensor table, then the
// config echoed as a length-prefixed key=value block.
void saveCheckpoint(const PaatModel& model, const std::string& path,
                    const std::map<std::string, std::string>& extras = {});

struct LoadedCheckpoint {
    PaatModel model;
    std::map<std::string, std::string> extras;
};

// With expect set, tensors are validated against that config instead of
// the embedded one (shape disagreements become format errors).
LoadedCheckpoint loadCheckpoint(const std::string& path, const PaatConfig* expect = nullptr);

}  // namespace paat
