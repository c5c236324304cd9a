#include "paat/presets.hpp"

namespace paat {

GenSpec dispersedGenSpec(std::uint64_t seed) {
    // Long-tail label frequencies and large signature sets keep tail
    // evidence tokens rare, so detection has to aggregate weak sites
    // instead of keying on a handful of memorized ids.
    GenSpec s;
    s.labelCount = 20;
    s.vocabSize = 2000;
    s.signaturePerLabel = 90;
    s.docLenMin = s.docLenMax = 600;
    s.labelsMin = 1;
    s.labelsMax = 5;
    s.dispersion = 6;
    s.regions = 6;
    s.density = 1;
    s.labelSkew = 1.6;
    s.docCount = 2800;
    s.seed = seed;
    return s;
}

GenSpec concentratedGenSpec(std::uint64_t seed) {
    GenSpec s = dispersedGenSpec(seed);
    s.dispersion = 1;
    return s;
}

GenSpec memorizationGenSpec(std::uint64_t seed) {
    GenSpec s;
    s.labelCount = 10;
    s.vocabSize = 100;
    s.signaturePerLabel = 6;
    s.docLenMin = s.docLenMax = 32;
    s.labelsMin = 1;
    s.labelsMax = 2;
    s.dispersion = 2;
    s.regions = 4;
    s.density = 3;
    s.docCount = 50;
    s.seed = seed;
    return s;
}

bool applyGenPreset(const std::string& name, GenSpec& spec) {
    const std::uint64_t seed = spec.seed;
    if (name == "dispersed") spec = dispersedGenSpec(seed);
    else if (name == "concentrated") spec = concentratedGenSpec(seed);
    else if (name == "memorization") spec = memorizationGenSpec(seed);
    else return false;
    return true;
}

PaatConfig experimentConfig(std::size_t labelCount, std::size_t vocabSize) {
    PaatConfig c;
    c.labelCount = labelCount;
    c.vocabSize = vocabSize;
    c.embedDim = 32;
    c.hiddenSize = 16;
    c.attnDim = 32;
    c.alpha = 0.8;
    c.nEnc = 6;
    c.nAtt = 6;
    c.dropoutRate = 0.3;
    c.gamma = 0.5;
    c.maxTokens = 8192;
    c.lr = 0.0015;
    c.epochs = 8;
    c.patience = 5;
    return c;
}

}  // namespace paat
