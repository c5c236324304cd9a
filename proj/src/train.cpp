#include <cmath>
#include <exception>

#include "paat/model.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace paat {

ScoreMatrix scoreDataset(const PaatModel& model, const std::vector<Document>& docs) {
    const std::size_t L = model.config().labelCount;
    ScoreMatrix sm;
    sm.scores = Matrix(docs.size(), L);
    sm.gold.resize(docs.size());

    std::exception_ptr firstError = nullptr;
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t d = 0; d < static_cast<std::int64_t>(docs.size()); ++d) {
        try {
            const auto di = static_cast<std::size_t>(d);
            ForwardResult r = model.forward(docs[di].tokens);
            for (std::size_t l = 0; l < L; ++l) sm.scores.at(di, l) = r.probs[l];
            sm.gold[di] = goldMask(docs[di], L);
        } catch (...) {
#pragma omp critical
            if (!firstError) firstError = std::current_exception();
        }
    }
    if (firstError) std::rethrow_exception(firstError);
    return sm;
}

TrainResult trainLoop(const PaatConfig& config, const std::vector<Document>& train,
                      const std::vector<Document>& valid) {
    config.validate();
    if (train.empty() || valid.empty()) {
        throw InputError("trainLoop: training and validation splits must be non-empty");
    }

    PaatModel model = PaatModel::init(config);
    OptimizerState opt = OptimizerState::forModel(model, config);
    // One stream drives both the epoch shuffles and dropout masks.
    Rng rng(config.seed ^ 0xd1b54a32d192ed03ULL);

    TrainResult result;
    ModelParams best = model.params();
    double bestF1 = -1.0;
    std::size_t bestEpoch = 0;

    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::vector<Matrix> accum;
    std::size_t accumCount = 0;
    auto refs = model.tensors();

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        rng.shuffle(order);
        double lossSum = 0.0;
        accum.clear();
        accumCount = 0;
        for (std::size_t step = 0; step < order.size(); ++step) {
            const Document& doc = train[order[step]];
            PaatModel::StepResult sr =
                model.lossBackward(doc, config.dropoutRate > 0.0 ? &rng : nullptr);
            if (!std::isfinite(sr.loss)) {
                throw Error("training diverged at epoch " + std::to_string(epoch) + ", step " +
                            std::to_string(step + 1) + " (document " + doc.id + ")");
            }
            lossSum += sr.loss;

            if (config.gradAccum == 1) {
                adamwStep(refs, sr.grads, opt);
            } else {
                if (accum.empty()) {
                    accum = std::move(sr.grads);
                } else {
                    for (std::size_t t = 0; t < accum.size(); ++t)
                        for (std::size_t i = 0; i < accum[t].size(); ++i)
                            accum[t][i] += sr.grads[t][i];
                }
                ++accumCount;
                if (accumCount == config.gradAccum || step + 1 == order.size()) {
                    const double inv = 1.0 / static_cast<double>(accumCount);
                    for (Matrix& g : accum)
                        for (std::size_t i = 0; i < g.size(); ++i) g[i] *= inv;
                    adamwStep(refs, accum, opt);
                    accum.clear();
                    accumCount = 0;
                }
            }
        }

        const ScoreMatrix sm = scoreDataset(model, valid);
        const double validF1 = f1Scores(sm, config.threshold).microF1;
        EpochLog log;
        log.epoch = epoch;
        log.trainBce = lossSum / static_cast<double>(train.size());
        log.validMicroF1 = validF1;
        result.log.push_back(log);

        if (validF1 > bestF1) {
            bestF1 = validF1;
            bestEpoch = epoch;
            best = model.params();
        }
        if (config.patience > 0 && epoch - bestEpoch >= config.patience) break;
    }

    model.params() = best;
    result.model = std::move(model);
    result.bestEpoch = bestEpoch;
    result.bestValidMicroF1 = bestF1;
    return result;
}

}  // namespace paat
