#include "paat/model.hpp"

#include <cmath>
#include <iostream>

#include "paat/kernels.hpp"
#include "paat/kvfile.hpp"

namespace paat {

std::string variantName(Variant v) {
    switch (v) {
        case Variant::Paat: return "paat";
        case Variant::PaatPE: return "paat-pe";
        case Variant::PaatPA: return "paat-pa";
        case Variant::PaatPEA: return "paat-pea";
        case Variant::PaatBI: return "paat-bi";
    }
    throw ContractError("variantName: bad enum value");
}

Variant parseVariant(const std::string& name) {
    if (name == "paat") return Variant::Paat;
    if (name == "paat-pe") return Variant::PaatPE;
    if (name == "paat-pa") return Variant::PaatPA;
    if (name == "paat-pea") return Variant::PaatPEA;
    if (name == "paat-bi") return Variant::PaatBI;
    throw InputError("unknown variant \"" + name +
                     "\" (expected paat, paat-pe, paat-pa, paat-pea or paat-bi)");
}

void PaatConfig::validate() const {
    if (vocabSize == 0 || labelCount == 0) {
        throw SpecError("config: vocabSize and labelCount must be positive");
    }
    if (embedDim == 0 || hiddenSize == 0 || attnDim == 0) {
        throw SpecError("config: embedDim, hiddenSize and attnDim must be positive");
    }
    if (!(alpha > 0.0 && alpha <= 1.0)) throw SpecError("config: alpha must lie in (0,1]");
    if (!(dropoutRate >= 0.0 && dropoutRate < 1.0)) {
        throw SpecError("config: dropoutRate must lie in [0,1)");
    }
    if (maxTokens < 1) throw SpecError("config: maxTokens must be at least 1");
    if (nEnc == 0 || nAtt == 0) throw SpecError("config: partition counts must be positive");
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw SpecError("config: threshold must lie strictly inside (0,1)");
    }
    if (epochs == 0 || gradAccum == 0) {
        throw SpecError("config: epochs and gradAccum must be positive");
    }
}

std::size_t PaatConfig::effNEnc() const {
    return (variant == Variant::PaatPE || variant == Variant::PaatPEA) ? 1 : nEnc;
}

std::size_t PaatConfig::effNAtt() const { return variant == Variant::PaatPEA ? 1 : nAtt; }

SegmentEncoderSpec PaatConfig::encoderSpec() const {
    return SegmentEncoderSpec{encoderKind, vocabSize, embedDim, gamma};
}

std::map<std::string, std::string> PaatConfig::toKeyValues() const {
    std::map<std::string, std::string> kv;
    kv["vocab_size"] = std::to_string(vocabSize);
    kv["labels"] = std::to_string(labelCount);
    kv["embed_dim"] = std::to_string(embedDim);
    kv["hidden_size"] = std::to_string(hiddenSize);
    kv["attn_dim"] = std::to_string(attnDim);
    kv["alpha"] = formatDouble(alpha);
    kv["n_enc"] = std::to_string(nEnc);
    kv["n_att"] = std::to_string(nAtt);
    kv["dropout"] = formatDouble(dropoutRate);
    kv["encoder"] = encoderKind == SegmentEncoderSpec::Kind::TrainableEmbedding
                        ? "trainable-embedding"
                        : "frozen-projection";
    kv["gamma"] = formatDouble(gamma);
    kv["variant"] = variantName(variant);
    kv["max_tokens"] = std::to_string(maxTokens);
    kv["seed"] = std::to_string(seed);
    kv["head_hidden"] = std::to_string(headHidden);
    kv["split_on_headers"] = splitOnHeaders ? "1" : "0";
    kv["lr"] = formatDouble(lr);
    kv["beta1"] = formatDouble(beta1);
    kv["beta2"] = formatDouble(beta2);
    kv["adam_epsilon"] = formatDouble(epsilon);
    kv["weight_decay"] = formatDouble(weightDecay);
    kv["epochs"] = std::to_string(epochs);
    kv["patience"] = std::to_string(patience);
    kv["grad_accum"] = std::to_string(gradAccum);
    kv["threshold"] = formatDouble(threshold);
    return kv;
}

PaatConfig PaatConfig::fromKeyValues(const std::map<std::string, std::string>& kv) {
    PaatConfig c;
    c.vocabSize = kvU64(kv, "vocab_size", c.vocabSize);
    c.labelCount = kvU64(kv, "labels", c.labelCount);
    c.embedDim = kvU64(kv, "embed_dim", c.embedDim);
    c.hiddenSize = kvU64(kv, "hidden_size", c.hiddenSize);
    c.attnDim = kvU64(kv, "attn_dim", c.attnDim);
    c.alpha = kvDouble(kv, "alpha", c.alpha);
    c.nEnc = kvU64(kv, "n_enc", c.nEnc);
    c.nAtt = kvU64(kv, "n_att", c.nAtt);
    c.dropoutRate = kvDouble(kv, "dropout", c.dropoutRate);
    const std::string enc = kvString(kv, "encoder", "trainable-embedding");
    if (enc == "trainable-embedding") {
        c.encoderKind = SegmentEncoderSpec::Kind::TrainableEmbedding;
    } else if (enc == "frozen-projection") {
        c.encoderKind = SegmentEncoderSpec::Kind::FrozenProjection;
    } else {
        throw SpecError("config: unknown encoder kind \"" + enc + "\"");
    }
    c.gamma = kvDouble(kv, "gamma", c.gamma);
    c.variant = parseVariant(kvString(kv, "variant", "paat"));
    c.maxTokens = kvU64(kv, "max_tokens", c.maxTokens);
    c.seed = kvU64(kv, "seed", c.seed);
    c.headHidden = kvU64(kv, "head_hidden", c.headHidden);
    c.splitOnHeaders = kvU64(kv, "split_on_headers", 0) != 0;
    c.lr = kvDouble(kv, "lr", c.lr);
    c.beta1 = kvDouble(kv, "beta1", c.beta1);
    c.beta2 = kvDouble(kv, "beta2", c.beta2);
    c.epsilon = kvDouble(kv, "adam_epsilon", c.epsilon);
    c.weightDecay = kvDouble(kv, "weight_decay", c.weightDecay);
    c.epochs = kvU64(kv, "epochs", c.epochs);
    c.patience = kvU64(kv, "patience", c.patience);
    c.gradAccum = kvU64(kv, "grad_accum", c.gradAccum);
    c.threshold = kvDouble(kv, "threshold", c.threshold);
    return c;
}

PaatModel PaatModel::allocate(const PaatConfig& config) {
    config.validate();
    PaatModel model;
    model.config_ = config;
    ModelParams& p = model.params_;
    const std::size_t e = config.embedDim;
    const std::size_t u = config.hiddenSize;
    const std::size_t L = config.labelCount;

    p.embed = Matrix(e, config.vocabSize);
    if (config.usesBiLstm()) {
        auto allocDir = [&](LstmDirParams& d) {
            d.Wi = d.Wf = d.Wg = d.Wo = Matrix(u, e);
            d.Ri = d.Rf = d.Rg = d.Ro = Matrix(u, u);
            d.bi = d.bf = d.bg = d.bo = Matrix(u, 1);
        };
        allocDir(p.lstm.fwd);
        allocDir(p.lstm.bwd);
    } else {
        p.affineW = Matrix(2 * u, e);
        p.affineB = Matrix(2 * u, 1);
    }
    p.attnW = Matrix(config.attnDim, 2 * u);
    p.attnU = Matrix(L, config.attnDim);
    const std::size_t width = config.featureWidth();
    if (config.headHidden > 0) {
        p.headHiddenW = Matrix(config.headHidden, width);
        p.headHiddenB = Matrix(config.headHidden, 1);
        p.headW = Matrix(L, config.headHidden);
    } else {
        p.headW = Matrix(L, width);
    }
    p.headB = Matrix(L, 1);
    return model;
}

std::vector<TensorRef> PaatModel::tensors() {
    const PaatConfig& c = config_;
    ModelParams& p = params_;
    std::vector<TensorRef> out;
    out.push_back({"embed.table", &p.embed,
                   c.encoderKind == SegmentEncoderSpec::Kind::TrainableEmbedding, c.embedDim});
    if (c.usesBiLstm()) {
        auto pushDir = [&](const char* dir, LstmDirParams& d) {
            const std::string base = std::string("lstm.") + dir + ".";
            Matrix* ws[4] = {&d.Wi, &d.Wf, &d.Wg, &d.Wo};
            Matrix* rs[4] = {&d.Ri, &d.Rf, &d.Rg, &d.Ro};
            Matrix* bs[4] = {&d.bi, &d.bf, &d.bg, &d.bo};
            const char* gates = "ifgo";
            for (int g = 0; g < 4; ++g)
                out.push_back({base + "W" + gates[g], ws[g], true, c.embedDim});
            for (int g = 0; g < 4; ++g)
                out.push_back({base + "R" + gates[g], rs[g], true, c.hiddenSize});
            for (int g = 0; g < 4; ++g)
                out.push_back({base + "b" + gates[g], bs[g], true, c.hiddenSize});
        };
        pushDir("fwd", p.lstm.fwd);
        pushDir("bwd", p.lstm.bwd);
    } else {
        out.push_back({"affine.W", &p.affineW, true, c.embedDim});
        out.push_back({"affine.b", &p.affineB, true, c.embedDim});
    }
    out.push_back({"attn.W", &p.attnW, true, 2 * c.hiddenSize});
    out.push_back({"attn.U", &p.attnU, true, c.attnDim});
    if (c.headHidden > 0) {
        out.push_back({"head.hidden.W", &p.headHiddenW, true, c.featureWidth()});
        out.push_back({"head.hidden.b", &p.headHiddenB, true, c.featureWidth()});
        out.push_back({"head.W", &p.headW, true, c.headHidden});
        out.push_back({"head.b", &p.headB, true, c.headHidden});
    } else {
        out.push_back({"head.W", &p.headW, true, c.featureWidth()});
        out.push_back({"head.b", &p.headB, true, c.featureWidth()});
    }
    return out;
}

std::vector<TensorRef> PaatModel::tensors() const {
    return const_cast<PaatModel*>(this)->tensors();
}

PaatModel PaatModel::init(const PaatConfig& config) {
    PaatModel model = allocate(config);
    Rng rng(config.seed);
    for (TensorRef& ref : model.tensors()) {
        if (ref.name == "embed.table" &&
            config.encoderKind == SegmentEncoderSpec::Kind::FrozenProjection) {
            *ref.tensor = makeFrozenProjection(config.embedDim, config.vocabSize, config.seed);
            continue;
        }
        const double bound = 1.0 / std::sqrt(static_cast<double>(ref.fanIn));
        Matrix& t = *ref.tensor;
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
    }
    return model;
}

std::vector<std::uint8_t> goldMask(const Document& doc, std::size_t labelCount) {
    std::vector<std::uint8_t> mask(labelCount, 0);
    for (std::size_t l : doc.gold) {
        if (l >= labelCount) {
            throw InputError("document " + doc.id + ": gold label " + std::to_string(l) +
                             " outside the " + std::to_string(labelCount) + "-label set");
        }
        mask[l] = 1;
    }
    return mask;
}

double bceLoss(const std::vector<double>& probs, const std::vector<std::uint8_t>& gold) {
    if (probs.size() != gold.size()) {
        throw ContractError("bceLoss: " + std::to_string(probs.size()) +
                            " probabilities against " + std::to_string(gold.size()) + " labels");
    }
    double loss = 0.0;
    for (std::size_t l = 0; l < probs.size(); ++l) {
        const double p = std::min(1.0 - 1e-12, std::max(1e-12, probs[l]));
        loss -= gold[l] ? std::log(p) : std::log(1.0 - p);
    }
    return loss / static_cast<double>(probs.size());
}

PaatModel::GraphOut PaatModel::buildGraph(Tape& tape, const std::vector<TokenId>& tokens,
                                          const std::vector<std::uint8_t>* gold,
                                          const Matrix* dropout, bool forGrads) const {
    if (tokens.empty()) throw InputError("forward: empty document");
    const PaatConfig& c = config_;
    GraphOut out;

    std::vector<TokenId> clipped;
    const std::vector<TokenId>* toks = &tokens;
    if (tokens.size() > c.maxTokens) {
        std::cerr << "warning: document truncated from " << tokens.size() << " to "
                  << c.maxTokens << " tokens\n";
        clipped.assign(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(c.maxTokens));
        toks = &clipped;
        out.truncated = true;
    }

    // Bind every tensor; leaves keep registry order so gradient readout
    // can align positionally.
    auto refs = tensors();
    std::vector<NodeId> leafIds;
    leafIds.reserve(refs.size());
    for (const TensorRef& ref : refs) {
        leafIds.push_back(tape.leaf(*ref.tensor, forGrads && ref.trainable, ref.name));
    }
    auto leafOf = [&](const std::string& name) -> NodeId {
        for (std::size_t i = 0; i < refs.size(); ++i)
            if (refs[i].name == name) return leafIds[i];
        throw ContractError("buildGraph: no tensor named " + name);
    };

    const SegmentBoundaries encB = c.splitOnHeaders
                                       ? segmentAtHeaders(*toks, Vocab::kSectionHeader)
                                       : segmentTokens(*toks, c.effNEnc());
    const bool mixing = c.encoderKind == SegmentEncoderSpec::Kind::TrainableEmbedding;
    NodeId x = tape.embedSegments(leafOf("embed.table"), *toks, encB, c.gamma, mixing);

    NodeId h;
    if (c.usesBiLstm()) {
        std::vector<NodeId> lstmIds;
        lstmIds.reserve(2 * kLstmTensorsPerDir);
        for (std::size_t i = 0; i < refs.size(); ++i) {
            if (refs[i].name.rfind("lstm.", 0) == 0) lstmIds.push_back(leafIds[i]);
        }
        h = tape.biLstm(x, lstmIds);
    } else {
        h = tape.addColVec(tape.matmul(leafOf("affine.W"), x), leafOf("affine.b"));
    }
    if (dropout != nullptr) h = tape.mul(h, tape.constant(*dropout));

    const NodeId attnW = leafOf("attn.W");
    const NodeId attnU = leafOf("attn.U");

    // Conventional label attention over the full representation.
    NodeId z = tape.tanh(tape.matmul(attnW, h));
    out.convA = tape.rowSoftmax(tape.matmul(attnU, z));
    out.convV = tape.matmul(h, out.convA, false, true);

    NodeId features = out.convV;
    if (c.usesPartitionAttention()) {
        out.attBounds = segmentTokens(*toks, c.effNAtt());
        const std::size_t n = out.attBounds.count();
        std::vector<NodeId> diags;
        diags.reserve(n);
        for (std::size_t k = 0; k < n; ++k) {
            const auto [s0, s1] = out.attBounds.spans[k];
            NodeId hk = tape.sliceCols(h, s0, s1);
            NodeId zk = tape.tanh(tape.matmul(attnW, hk));
            NodeId ak = tape.rowSoftmax(tape.matmul(attnU, zk));
            NodeId vk = tape.matmul(hk, ak, false, true);
            out.segA.push_back(ak);
            out.segV.push_back(vk);
            NodeId zhat = tape.tanh(tape.matmul(attnW, vk));
            diags.push_back(tape.diagOf(tape.matmul(attnU, zhat)));  // no softmax here
        }
        out.partT = tape.scale(tape.concatCols(diags), c.alpha);
        out.partM = tape.rowSoftmax(out.partT);
        NodeId vp = -1;
        for (std::size_t k = 0; k < n; ++k) {
            NodeId term = tape.colScale(out.segV[k], tape.sliceCols(out.partM, k, k + 1));
            vp = k == 0 ? term : tape.add(vp, term);
        }
        out.partVp = vp;
        features = tape.concatRows(out.convV, vp);
    } else {
        out.attBounds = segmentTokens(*toks, 1);
    }

    if (c.headHidden > 0) {
        features = tape.tanh(
            tape.addColVec(tape.matmul(leafOf("head.hidden.W"), features),
                           leafOf("head.hidden.b")));
    }
    NodeId logits =
        tape.add(tape.diagOf(tape.matmul(leafOf("head.W"), features)), leafOf("head.b"));
    out.probs = tape.sigmoid(logits);
    if (gold != nullptr) out.loss = tape.bce(out.probs, *gold);
    return out;
}

ForwardResult PaatModel::forward(const std::vector<TokenId>& tokens, bool wantAttention) const {
    Tape tape;
    GraphOut g = buildGraph(tape, tokens, nullptr, nullptr, false);
    ForwardResult res;
    res.truncated = g.truncated;
    const Matrix& probs = tape.value(g.probs);
    res.probs.resize(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
        res.probs[i] = std::min(1.0 - 1e-12, std::max(1e-12, probs[i]));
    }
    if (wantAttention) {
        res.conventional = {tape.value(g.convA), tape.value(g.convV)};
        res.attBounds = g.attBounds;
        if (config_.usesPartitionAttention()) {
            PartitionAttentionOutput part;
            for (std::size_t k = 0; k < g.segA.size(); ++k) {
                part.perSegment.push_back({tape.value(g.segA[k]), tape.value(g.segV[k])});
            }
            part.T = tape.value(g.partT);
            part.M = tape.value(g.partM);
            part.Vp = tape.value(g.partVp);
            res.partition = std::move(part);
        }
    }
    return res;
}

double PaatModel::lossForward(const Document& doc) const {
    Tape tape;
    const auto gold = goldMask(doc, config_.labelCount);
    GraphOut g = buildGraph(tape, doc.tokens, &gold, nullptr, false);
    return tape.value(g.loss)[0];
}

PaatModel::StepResult PaatModel::lossBackward(const Document& doc, Rng* dropoutRng) {
    Tape tape;
    const auto gold = goldMask(doc, config_.labelCount);
    Matrix mask;
    const Matrix* maskPtr = nullptr;
    if (dropoutRng != nullptr && config_.dropoutRate > 0.0) {
        const std::size_t n = std::min(doc.tokens.size(), config_.maxTokens);
        mask = dropoutMask(2 * config_.hiddenSize, n, config_.dropoutRate, *dropoutRng);
        maskPtr = &mask;
    }
    GraphOut g = buildGraph(tape, doc.tokens, &gold, maskPtr, true);
    tape.backward(g.loss);

    StepResult res;
    res.loss = tape.value(g.loss)[0];
    auto refs = tensors();
    res.grads.reserve(refs.size());
    // Leaves were pushed first, ids 0..refs.size()-1 in registry order.
    for (std::size_t i = 0; i < refs.size(); ++i) {
        res.grads.push_back(tape.grad(static_cast<NodeId>(i)));
    }
    return res;
}

OptimizerState OptimizerState::forModel(PaatModel& model, const PaatConfig& config) {
    OptimizerState st;
    st.lr = config.lr;
    st.beta1 = config.beta1;
    st.beta2 = config.beta2;
    st.epsilon = config.epsilon;
    st.weightDecay = config.weightDecay;
    for (const TensorRef& ref : model.tensors()) {
        st.m.emplace_back(ref.tensor->rows(), ref.tensor->cols());
        st.v.emplace_back(ref.tensor->rows(), ref.tensor->cols());
    }
    return st;
}

void adamwStep(const std::vector<TensorRef>& tensors, const std::vector<Matrix>& grads,
               OptimizerState& state) {
    if (tensors.size() != grads.size() || tensors.size() != state.m.size()) {
        throw ContractError("adamwStep: registry, gradients and state are misaligned");
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t t = 0; t < tensors.size(); ++t) {
        if (!tensors[t].trainable) continue;
        Matrix& p = *tensors[t].tensor;
        const Matrix& g = grads[t];
        if (!g.sameShape(p)) {
            throw ContractError("adamwStep: gradient shape " + g.shapeStr() + " for tensor " +
                                tensors[t].name + " of shape " + p.shapeStr());
        }
        if (!g.allFinite()) {
            throw Error("adamwStep: non-finite gradient in " + tensors[t].name);
        }
        Matrix& m = state.m[t];
        Matrix& v = state.v[t];
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] -= state.lr * (mhat / (std::sqrt(vhat) + state.epsilon) +
                                state.weightDecay * p[i]);
        }
    }
}

}  // namespace paat
