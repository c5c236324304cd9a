#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "paat/matrix.hpp"

namespace paat {

// Aligned probability scores and gold booleans, documents x labels.
struct ScoreMatrix {
    Matrix scores;                           // D x L, values in [0, 1]
    std::vector<std::vector<std::uint8_t>> gold;  // D rows of L flags

    std::size_t docs() const { return scores.rows(); }
    std::size_t labels() const { return scores.cols(); }
    void validate() const;
};

// Probability that a random positive outranks a random negative, ties
// worth 0.5 (rank-statistic form). Empty when the label is degenerate
// (all positive or all negative).
std::optional<double> aucBinary(const std::vector<double>& scores,
                                const std::vector<std::uint8_t>& positives);

struct AucSummary {
    std::optional<double> macro;  // absent when every label is degenerate
    std::optional<double> micro;
    std::size_t excludedLabels = 0;
};

// macro: unweighted mean of per-label AUC over non-degenerate labels;
// micro: one AUC over all pooled D x L cells.
AucSummary macroMicroAuc(const ScoreMatrix& sm);

struct PerLabelStats {
    std::size_t tp = 0, fp = 0, fn = 0, support = 0;
    double precision = 0.0, recall = 0.0, f1 = 0.0;
};

struct F1Report {
    double macroPrecision = 0.0, macroRecall = 0.0, macroF1 = 0.0;
    double microPrecision = 0.0, microRecall = 0.0, microF1 = 0.0;
    std::vector<PerLabelStats> perLabel;
};

// Binarize at threshold; 0/0 counts as 0; macro averages over all
// labels, micro pools TP/FP/FN.
F1Report f1Scores(const ScoreMatrix& sm, double threshold);

// Mean over documents of |top-k by score intersect gold| / k; score ties
// rank the lower label index first.
double precisionAtK(const ScoreMatrix& sm, std::size_t k);

struct DisagreementSide {
    double macroPrecision = 0.0, macroRecall = 0.0;
    double microPrecision = 0.0, microRecall = 0.0;
};

struct DisagreementReport {
    std::size_t cells = 0;
    DisagreementSide a, b;
};

// Restricted to (doc, label) cells where the two binarized predictions
// differ; macro averages over labels owning at least one such cell.
DisagreementReport disagreementReport(const ScoreMatrix& a, const ScoreMatrix& b,
                                      double threshold);

struct MetricsReport {
    AucSummary auc;
    F1Report f1;
    std::map<std::size_t, double> pAtK;
    double threshold = 0.5;
    std::optional<DisagreementReport> disagreement;
};

MetricsReport computeMetrics(const ScoreMatrix& sm, const std::vector<std::size_t>& kList,
                             double threshold);

// Fixed-key JSON (macro_auc, micro_auc, macro_f1, micro_f1, p_at_k,
// excluded_labels, disagreement). Deterministic bytes.
std::string metricsToJson(const MetricsReport& report);

}  // namespace paat
