#include "paat/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

namespace paat {

void ScoreMatrix::validate() const {
    if (gold.size() != scores.rows()) {
        throw ContractError("score matrix: " + std::to_string(gold.size()) +
                            " gold rows against " + scores.shapeStr());
    }
    for (const auto& row : gold) {
        if (row.size() != scores.cols()) {
            throw ContractError("score matrix: ragged gold row");
        }
    }
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!(scores[i] >= 0.0 && scores[i] <= 1.0)) {
            throw ContractError("score matrix: score outside [0,1]");
        }
    }
}

std::optional<double> aucBinary(const std::vector<double>& scores,
                                const std::vector<std::uint8_t>& positives) {
    if (scores.size() != positives.size()) {
        throw ContractError("aucBinary: " + std::to_string(scores.size()) + " scores against " +
                            std::to_string(positives.size()) + " flags");
    }
    std::size_t pos = 0;
    for (auto p : positives) pos += p ? 1 : 0;
    const std::size_t neg = scores.size() - pos;
    if (pos == 0 || neg == 0) return std::nullopt;

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Walk tie groups in ascending score order; positives in a group earn
    // full credit for negatives strictly below and half for ties.
    double u = 0.0;
    std::size_t negBelow = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        std::size_t groupPos = 0, groupNeg = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            positives[order[j]] ? ++groupPos : ++groupNeg;
            ++j;
        }
        u += static_cast<double>(groupPos) *
             (static_cast<double>(negBelow) + 0.5 * static_cast<double>(groupNeg));
        negBelow += groupNeg;
        i = j;
    }
    return u / (static_cast<double>(pos) * static_cast<double>(neg));
}

AucSummary macroMicroAuc(const ScoreMatrix& sm) {
    sm.validate();
    AucSummary out;
    double sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t l = 0; l < sm.labels(); ++l) {
        std::vector<double> s(sm.docs());
        std::vector<std::uint8_t> y(sm.docs());
        for (std::size_t d = 0; d < sm.docs(); ++d) {
            s[d] = sm.scores.at(d, l);
            y[d] = sm.gold[d][l];
        }
        if (auto auc = aucBinary(s, y)) {
            sum += *auc;
            ++counted;
        } else {
            ++out.excludedLabels;
        }
    }
    if (counted > 0) out.macro = sum / static_cast<double>(counted);

    std::vector<double> pooled(sm.docs() * sm.labels());
    std::vector<std::uint8_t> pooledGold(pooled.size());
    std::size_t idx = 0;
    for (std::size_t d = 0; d < sm.docs(); ++d)
        for (std::size_t l = 0; l < sm.labels(); ++l, ++idx) {
            pooled[idx] = sm.scores.at(d, l);
            pooledGold[idx] = sm.gold[d][l];
        }
    out.micro = aucBinary(pooled, pooledGold);
    return out;
}

namespace {

inline double safeDiv(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

inline double f1Of(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

}  // namespace

F1Report f1Scores(const ScoreMatrix& sm, double threshold) {
    sm.validate();
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw InputError("f1Scores: threshold must lie strictly inside (0,1)");
    }
    F1Report rep;
    rep.perLabel.resize(sm.labels());
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t l = 0; l < sm.labels(); ++l) {
        PerLabelStats& s = rep.perLabel[l];
        for (std::size_t d = 0; d < sm.docs(); ++d) {
            const bool pred = sm.scores.at(d, l) >= threshold;
            const bool gold = sm.gold[d][l] != 0;
            if (gold) ++s.support;
            if (pred && gold) ++s.tp;
            else if (pred) ++s.fp;
            else if (gold) ++s.fn;
        }
        s.precision = safeDiv(static_cast<double>(s.tp), static_cast<double>(s.tp + s.fp));
        s.recall = safeDiv(static_cast<double>(s.tp), static_cast<double>(s.tp + s.fn));
        s.f1 = f1Of(s.precision, s.recall);
        rep.macroPrecision += s.precision;
        rep.macroRecall += s.recall;
        rep.macroF1 += s.f1;
        tp += s.tp;
        fp += s.fp;
        fn += s.fn;
    }
    const auto L = static_cast<double>(sm.labels());
    rep.macroPrecision /= L;
    rep.macroRecall /= L;
    rep.macroF1 /= L;
    rep.microPrecision = safeDiv(static_cast<double>(tp), static_cast<double>(tp + fp));
    rep.microRecall = safeDiv(static_cast<double>(tp), static_cast<double>(tp + fn));
    rep.microF1 = f1Of(rep.microPrecision, rep.microRecall);
    return rep;
}

double precisionAtK(const ScoreMatrix& sm, std::size_t k) {
    sm.validate();
    if (k < 1 || k > sm.labels()) {
        throw InputError("precisionAtK: k = " + std::to_string(k) + " outside [1, " +
                         std::to_string(sm.labels()) + "]");
    }
    double total = 0.0;
    std::vector<std::size_t> order(sm.labels());
    for (std::size_t d = 0; d < sm.docs(); ++d) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return sm.scores.at(d, a) > sm.scores.at(d, b);
        });
        std::size_t hits = 0;
        for (std::size_t i = 0; i < k; ++i) hits += sm.gold[d][order[i]] ? 1 : 0;
        total += static_cast<double>(hits) / static_cast<double>(k);
    }
    return sm.docs() == 0 ? 0.0 : total / static_cast<double>(sm.docs());
}

DisagreementReport disagreementReport(const ScoreMatrix& a, const ScoreMatrix& b,
                                      double threshold) {
    a.validate();
    b.validate();
    if (a.docs() != b.docs() || a.labels() != b.labels()) {
        throw ContractError("disagreementReport: score matrices are not aligned");
    }
    for (std::size_t d = 0; d < a.docs(); ++d) {
        if (a.gold[d] != b.gold[d]) {
            throw ContractError("disagreementReport: gold sets disagree at document " +
                                std::to_string(d));
        }
    }

    struct Counts {
        std::size_t tp = 0, fp = 0, fn = 0;
    };
    std::vector<Counts> perLabelA(a.labels()), perLabelB(a.labels());
    std::vector<std::size_t> cellsPerLabel(a.labels(), 0);
    DisagreementReport rep;

    for (std::size_t d = 0; d < a.docs(); ++d)
        for (std::size_t l = 0; l < a.labels(); ++l) {
            const bool pa = a.scores.at(d, l) >= threshold;
            const bool pb = b.scores.at(d, l) >= threshold;
            if (pa == pb) continue;
            ++rep.cells;
            ++cellsPerLabel[l];
            const bool gold = a.gold[d][l] != 0;
            if (pa && gold) ++perLabelA[l].tp;
            else if (pa) ++perLabelA[l].fp;
            else if (gold) ++perLabelA[l].fn;
            if (pb && gold) ++perLabelB[l].tp;
            else if (pb) ++perLabelB[l].fp;
            else if (gold) ++perLabelB[l].fn;
        }

    auto fill = [&](const std::vector<Counts>& per, DisagreementSide& side) {
        std::size_t tp = 0, fp = 0, fn = 0, active = 0;
        double mp = 0.0, mr = 0.0;
        for (std::size_t l = 0; l < per.size(); ++l) {
            if (cellsPerLabel[l] == 0) continue;
            ++active;
            mp += safeDiv(static_cast<double>(per[l].tp),
                          static_cast<double>(per[l].tp + per[l].fp));
            mr += safeDiv(static_cast<double>(per[l].tp),
                          static_cast<double>(per[l].tp + per[l].fn));
            tp += per[l].tp;
            fp += per[l].fp;
            fn += per[l].fn;
        }
        if (active > 0) {
            side.macroPrecision = mp / static_cast<double>(active);
            side.macroRecall = mr / static_cast<double>(active);
        }
        side.microPrecision = safeDiv(static_cast<double>(tp), static_cast<double>(tp + fp));
        side.microRecall = safeDiv(static_cast<double>(tp), static_cast<double>(tp + fn));
    };
    fill(perLabelA, rep.a);
    fill(perLabelB, rep.b);
    return rep;
}

MetricsReport computeMetrics(const ScoreMatrix& sm, const std::vector<std::size_t>& kList,
                             double threshold) {
    MetricsReport rep;
    rep.threshold = threshold;
    rep.auc = macroMicroAuc(sm);
    rep.f1 = f1Scores(sm, threshold);
    for (std::size_t k : kList) rep.pAtK[k] = precisionAtK(sm, k);
    return rep;
}

std::string metricsToJson(const MetricsReport& report) {
    nlohmann::ordered_json j;
    if (report.auc.macro) j["macro_auc"] = *report.auc.macro;
    else j["macro_auc"] = nullptr;
    if (report.auc.micro) j["micro_auc"] = *report.auc.micro;
    else j["micro_auc"] = nullptr;
    j["macro_f1"] = report.f1.macroF1;
    j["micro_f1"] = report.f1.microF1;
    j["macro_precision"] = report.f1.macroPrecision;
    j["macro_recall"] = report.f1.macroRecall;
    j["micro_precision"] = report.f1.microPrecision;
    j["micro_recall"] = report.f1.microRecall;
    nlohmann::ordered_json pk = nlohmann::ordered_json::object();
    for (const auto& [k, v] : report.pAtK) pk[std::to_string(k)] = v;
    j["p_at_k"] = pk;
    j["excluded_labels"] = report.auc.excludedLabels;
    j["threshold"] = report.threshold;
    nlohmann::ordered_json per = nlohmann::ordered_json::array();
    for (const auto& s : report.f1.perLabel) {
        per.push_back({{"precision", s.precision},
                       {"recall", s.recall},
                       {"f1", s.f1},
                       {"support", s.support}});
    }
    j["per_label"] = per;
    if (report.disagreement) {
        const DisagreementReport& d = *report.disagreement;
        auto side = [](const DisagreementSide& s) {
            return nlohmann::ordered_json{{"macro_precision", s.macroPrecision},
                                          {"macro_recall", s.macroRecall},
                                          {"micro_precision", s.microPrecision},
                                          {"micro_recall", s.microRecall}};
        };
        j["disagreement"] = {{"cells", d.cells}, {"a", side(d.a)}, {"b", side(d.b)}};
    }
    return j.dump(2) + "\n";
}

}  // namespace paat
