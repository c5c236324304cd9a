#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "paat/metrics.hpp"
#include "paat/rng.hpp"

using namespace paat;

namespace {

// Independent oracles: straight pair counting and cell enumeration.

double aucOracle(const std::vector<double>& s, const std::vector<std::uint8_t>& y) {
    double wins = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!y[i]) continue;
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (y[j]) continue;
            ++pairs;
            if (s[i] > s[j]) wins += 1.0;
            else if (s[i] == s[j]) wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

double pAtKOracle(const ScoreMatrix& sm, std::size_t k) {
    double total = 0.0;
    for (std::size_t d = 0; d < sm.docs(); ++d) {
        // Selection by repeated max with lower-index tie preference.
        std::vector<bool> used(sm.labels(), false);
        std::size_t hits = 0;
        for (std::size_t pick = 0; pick < k; ++pick) {
            std::size_t best = sm.labels();
            for (std::size_t l = 0; l < sm.labels(); ++l) {
                if (used[l]) continue;
                if (best == sm.labels() || sm.scores.at(d, l) > sm.scores.at(d, best)) best = l;
            }
            used[best] = true;
            hits += sm.gold[d][best] ? 1 : 0;
        }
        total += static_cast<double>(hits) / static_cast<double>(k);
    }
    return total / static_cast<double>(sm.docs());
}

ScoreMatrix randomScores(Rng& rng, std::size_t D, std::size_t L, bool ties) {
    ScoreMatrix sm;
    sm.scores = Matrix(D, L);
    sm.gold.assign(D, std::vector<std::uint8_t>(L, 0));
    for (std::size_t d = 0; d < D; ++d)
        for (std::size_t l = 0; l < L; ++l) {
            sm.scores.at(d, l) =
                ties ? static_cast<double>(rng.below(5)) / 4.0 : rng.uniform();
            sm.gold[d][l] = rng.bernoulli(0.35) ? 1 : 0;
        }
    return sm;
}

}  // namespace

TEST_CASE("aucBinary worked examples") {
    auto a = aucBinary({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1});
    REQUIRE(a.has_value());
    CHECK(*a == doctest::Approx(0.75).epsilon(1e-15));

    auto perfect = aucBinary({0.1, 0.2, 0.9, 0.8}, {0, 0, 1, 1});
    CHECK(*perfect == 1.0);

    auto allTied = aucBinary({0.5, 0.5, 0.5}, {1, 0, 1});
    CHECK(*allTied == 0.5);

    CHECK_FALSE(aucBinary({0.1, 0.2}, {1, 1}).has_value());
    CHECK_FALSE(aucBinary({0.1, 0.2}, {0, 0}).has_value());
}

TEST_CASE("aucBinary matches pair counting under fuzzing") {
    Rng rng(41);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + rng.below(24);
        std::vector<double> s(n);
        std::vector<std::uint8_t> y(n);
        bool anyPos = false, anyNeg = false;
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = trial % 3 == 0 ? static_cast<double>(rng.below(4)) / 3.0 : rng.uniform();
            y[i] = rng.bernoulli(0.5) ? 1 : 0;
            (y[i] ? anyPos : anyNeg) = true;
        }
        if (!anyPos || !anyNeg) continue;
        auto got = aucBinary(s, y);
        REQUIRE(got.has_value());
        CHECK(std::fabs(*got - aucOracle(s, y)) <= 1e-12);
    }
}

TEST_CASE("aucBinary is invariant under strictly monotone transforms") {
    Rng rng(42);
    std::vector<double> s(20);
    std::vector<std::uint8_t> y(20);
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] = rng.uniform();
        y[i] = i % 3 == 0 ? 1 : 0;
    }
    auto base = aucBinary(s, y);
    std::vector<double> cubed = s, affine = s;
    for (auto& v : cubed) v = v * v * v;
    for (auto& v : affine) v = 2.0 * v + 1.0;
    CHECK(*aucBinary(cubed, y) == doctest::Approx(*base).epsilon(1e-15));
    CHECK(*aucBinary(affine, y) == doctest::Approx(*base).epsilon(1e-15));
}

TEST_CASE("macro and micro AUC") {
    ScoreMatrix sm;
    sm.scores = Matrix{{0.9, 0.4}, {0.1, 0.6}, {0.8, 0.5}};
    sm.gold = {{1, 0}, {0, 1}, {1, 1}};
    auto s = macroMicroAuc(sm);
    REQUIRE(s.macro.has_value());
    // label 0 perfect (0.9, 0.8 above 0.1); label 1: pos {0.6, 0.5}, neg {0.4} -> 1.0
    CHECK(*s.macro == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(s.excludedLabels == 0);

    // Single-label matrix: macro equals micro.
    ScoreMatrix one;
    one.scores = Matrix{{0.9}, {0.2}, {0.6}};
    one.gold = {{1}, {0}, {1}};
    auto so = macroMicroAuc(one);
    CHECK(*so.macro == *so.micro);

    // Two labels with per-label AUCs 1.0 and 0.5.
    ScoreMatrix two;
    two.scores = Matrix{{0.9, 0.5}, {0.1, 0.5}};
    two.gold = {{1, 1}, {0, 0}};
    auto st = macroMicroAuc(two);
    CHECK(*st.macro == doctest::Approx(0.75).epsilon(1e-15));

    // Degenerate labels are excluded, not fatal.
    ScoreMatrix deg;
    deg.scores = Matrix{{0.9, 0.5}, {0.1, 0.6}};
    deg.gold = {{1, 1}, {0, 1}};
    auto sd = macroMicroAuc(deg);
    CHECK(sd.excludedLabels == 1);
    CHECK(*sd.macro == 1.0);
}

TEST_CASE("macro and micro AUC match brute force on random instances") {
    Rng rng(43);
    for (int trial = 0; trial < 300; ++trial) {
        ScoreMatrix sm = randomScores(rng, 2 + rng.below(8), 1 + rng.below(6), trial % 2 == 0);
        auto got = macroMicroAuc(sm);

        double sum = 0.0;
        std::size_t counted = 0, excluded = 0;
        for (std::size_t l = 0; l < sm.labels(); ++l) {
            std::vector<double> s(sm.docs());
            std::vector<std::uint8_t> y(sm.docs());
            std::size_t pos = 0;
            for (std::size_t d = 0; d < sm.docs(); ++d) {
                s[d] = sm.scores.at(d, l);
                y[d] = sm.gold[d][l];
                pos += y[d];
            }
            if (pos == 0 || pos == sm.docs()) {
                ++excluded;
                continue;
            }
            sum += aucOracle(s, y);
            ++counted;
        }
        CHECK(got.excludedLabels == excluded);
        if (counted == 0) {
            CHECK_FALSE(got.macro.has_value());
        } else {
            CHECK(std::fabs(*got.macro - sum / double(counted)) <= 1e-12);
        }

        std::vector<double> pooled;
        std::vector<std::uint8_t> pooledGold;
        for (std::size_t d = 0; d < sm.docs(); ++d)
            for (std::size_t l = 0; l < sm.labels(); ++l) {
                pooled.push_back(sm.scores.at(d, l));
                pooledGold.push_back(sm.gold[d][l]);
            }
        bool anyPos = std::count(pooledGold.begin(), pooledGold.end(), 1) > 0;
        bool anyNeg = std::count(pooledGold.begin(), pooledGold.end(), 0) > 0;
        if (anyPos && anyNeg) {
            CHECK(std::fabs(*got.micro - aucOracle(pooled, pooledGold)) <= 1e-12);
        }
    }
}

TEST_CASE("f1 worked examples") {
    // Pooled TP=2, FP=1, FN=1 over one label.
    ScoreMatrix sm;
    sm.scores = Matrix{{0.9}, {0.8}, {0.7}, {0.1}};
    sm.gold = {{1}, {1}, {0}, {1}};
    F1Report r = f1Scores(sm, 0.5);
    CHECK(r.microPrecision == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(r.microRecall == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(r.microF1 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

    // Perfect predictions.
    ScoreMatrix p;
    p.scores = Matrix{{0.9, 0.1}, {0.2, 0.8}};
    p.gold = {{1, 0}, {0, 1}};
    F1Report rp = f1Scores(p, 0.5);
    CHECK(rp.macroF1 == 1.0);
    CHECK(rp.microF1 == 1.0);

    // A label with no predictions and no gold contributes zero to macro.
    ScoreMatrix z;
    z.scores = Matrix{{0.9, 0.1}};
    z.gold = {{1, 0}};
    F1Report rz = f1Scores(z, 0.5);
    CHECK(rz.perLabel[1].f1 == 0.0);
    CHECK(rz.macroF1 == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(rz.microF1 == 1.0);

    CHECK_THROWS_AS(f1Scores(z, 0.0), InputError);
}

TEST_CASE("precisionAtK worked examples") {
    ScoreMatrix sm;
    sm.scores = Matrix{{0.9, 0.1, 0.8}};
    sm.gold = {{1, 0, 1}};
    CHECK(precisionAtK(sm, 2) == 1.0);
    CHECK(precisionAtK(sm, 3) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

    ScoreMatrix empty;
    empty.scores = Matrix{{0.9, 0.1}, {0.8, 0.2}};
    empty.gold = {{0, 0}, {1, 0}};
    CHECK(precisionAtK(empty, 1) == doctest::Approx(0.5).epsilon(1e-15));

    // Ties prefer the lower label index.
    ScoreMatrix tie;
    tie.scores = Matrix{{0.5, 0.5, 0.5}};
    tie.gold = {{0, 0, 1}};
    CHECK(precisionAtK(tie, 1) == 0.0);

    CHECK_THROWS_AS(precisionAtK(tie, 4), InputError);
    CHECK_THROWS_AS(precisionAtK(tie, 0), InputError);
}

TEST_CASE("precisionAtK matches repeated-max selection") {
    Rng rng(44);
    for (int trial = 0; trial < 300; ++trial) {
        ScoreMatrix sm = randomScores(rng, 1 + rng.below(6), 2 + rng.below(6), trial % 2 == 0);
        for (std::size_t k = 1; k <= sm.labels(); ++k) {
            CHECK(std::fabs(precisionAtK(sm, k) - pAtKOracle(sm, k)) <= 1e-12);
        }
    }
}

TEST_CASE("mean precision@k decays once k exceeds the gold set size") {
    Rng rng(45);
    const std::size_t D = 60, L = 10;
    ScoreMatrix sm;
    sm.scores = Matrix(D, L);
    sm.gold.assign(D, std::vector<std::uint8_t>(L, 0));
    for (std::size_t d = 0; d < D; ++d) {
        const std::size_t g = 1 + rng.below(2);
        for (std::size_t pick : rng.sampleWithout(L, g)) sm.gold[d][pick] = 1;
        for (std::size_t l = 0; l < L; ++l) {
            sm.scores.at(d, l) = 0.7 * (sm.gold[d][l] ? 1.0 : 0.0) + 0.3 * rng.uniform();
        }
    }
    double prev = precisionAtK(sm, 2);
    for (std::size_t k = 3; k <= L; ++k) {
        const double cur = precisionAtK(sm, k);
        CHECK(cur <= prev + 1e-12);
        prev = cur;
    }
}

TEST_CASE("disagreement report on hand-built cases") {
    ScoreMatrix a, b;
    a.scores = Matrix{{0.9, 0.1}, {0.9, 0.9}};
    b.scores = a.scores;
    a.gold = b.gold = {{1, 0}, {1, 1}};
    DisagreementReport same = disagreementReport(a, b, 0.5);
    CHECK(same.cells == 0);
    CHECK(same.a.microPrecision == 0.0);

    // a is right everywhere the two disagree, b wrong.
    ScoreMatrix right, wrong;
    right.scores = Matrix{{0.9, 0.1}, {0.1, 0.9}};
    wrong.scores = Matrix{{0.1, 0.9}, {0.9, 0.1}};
    right.gold = wrong.gold = {{1, 0}, {0, 1}};
    DisagreementReport rep = disagreementReport(right, wrong, 0.5);
    CHECK(rep.cells == 4);
    CHECK(rep.a.microPrecision == 1.0);
    CHECK(rep.a.microRecall == 1.0);
    CHECK(rep.b.microPrecision == 0.0);
    CHECK(rep.b.microRecall == 0.0);
    CHECK(rep.a.macroPrecision == 1.0);
    CHECK(rep.b.macroRecall == 0.0);
}

TEST_CASE("disagreement report matches exhaustive enumeration") {
    Rng rng(46);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t D = 1 + rng.below(6), L = 1 + rng.below(5);
        ScoreMatrix a = randomScores(rng, D, L, true);
        ScoreMatrix b = randomScores(rng, D, L, true);
        b.gold = a.gold;
        DisagreementReport rep = disagreementReport(a, b, 0.5);

        // Oracle: explicit cell list, then counts from scratch.
        struct Cell {
            std::size_t d, l;
        };
        std::vector<Cell> cells;
        for (std::size_t d = 0; d < D; ++d)
            for (std::size_t l = 0; l < L; ++l) {
                if ((a.scores.at(d, l) >= 0.5) != (b.scores.at(d, l) >= 0.5))
                    cells.push_back({d, l});
            }
        CHECK(rep.cells == cells.size());

        auto micro = [&](const ScoreMatrix& m) {
            std::size_t tp = 0, fp = 0, fn = 0;
            for (const Cell& c : cells) {
                const bool pred = m.scores.at(c.d, c.l) >= 0.5;
                const bool gold = a.gold[c.d][c.l] != 0;
                if (pred && gold) ++tp;
                else if (pred) ++fp;
                else if (gold) ++fn;
            }
            const double p = tp + fp == 0 ? 0.0 : double(tp) / double(tp + fp);
            const double r = tp + fn == 0 ? 0.0 : double(tp) / double(tp + fn);
            return std::make_pair(p, r);
        };
        auto [ap, ar] = micro(a);
        auto [bp, br] = micro(b);
        CHECK(rep.a.microPrecision == doctest::Approx(ap).epsilon(1e-15));
        CHECK(rep.a.microRecall == doctest::Approx(ar).epsilon(1e-15));
        CHECK(rep.b.microPrecision == doctest::Approx(bp).epsilon(1e-15));
        CHECK(rep.b.microRecall == doctest::Approx(br).epsilon(1e-15));
    }
}

TEST_CASE("micro F1 is label-permutation invariant, macro document-permutation invariant") {
    Rng rng(47);
    ScoreMatrix sm = randomScores(rng, 7, 5, false);

    std::vector<std::size_t> lperm = {3, 0, 4, 1, 2};
    ScoreMatrix lp;
    lp.scores = Matrix(sm.docs(), sm.labels());
    lp.gold.assign(sm.docs(), std::vector<std::uint8_t>(sm.labels(), 0));
    for (std::size_t d = 0; d < sm.docs(); ++d)
        for (std::size_t l = 0; l < sm.labels(); ++l) {
            lp.scores.at(d, l) = sm.scores.at(d, lperm[l]);
            lp.gold[d][l] = sm.gold[d][lperm[l]];
        }
    CHECK(f1Scores(lp, 0.5).microF1 == doctest::Approx(f1Scores(sm, 0.5).microF1).epsilon(1e-15));

    std::vector<std::size_t> dperm = {6, 2, 0, 5, 1, 4, 3};
    ScoreMatrix dp;
    dp.scores = Matrix(sm.docs(), sm.labels());
    dp.gold.assign(sm.docs(), std::vector<std::uint8_t>(sm.labels(), 0));
    for (std::size_t d = 0; d < sm.docs(); ++d)
        for (std::size_t l = 0; l < sm.labels(); ++l) {
            dp.scores.at(d, l) = sm.scores.at(dperm[d], l);
            dp.gold[d][l] = sm.gold[dperm[d]][l];
        }
    CHECK(f1Scores(dp, 0.5).macroF1 == doctest::Approx(f1Scores(sm, 0.5).macroF1).epsilon(1e-15));
    auto a1 = macroMicroAuc(dp), a2 = macroMicroAuc(sm);
    CHECK(*a1.macro == doctest::Approx(*a2.macro).epsilon(1e-15));
}

TEST_CASE("metrics JSON is deterministic and carries the fixed keys") {
    Rng rng(48);
    ScoreMatrix sm = randomScores(rng, 5, 4, false);
    MetricsReport rep = computeMetrics(sm, {1, 3}, 0.5);
    const std::string a = metricsToJson(rep);
    const std::string b = metricsToJson(rep);
    CHECK(a == b);
    for (const char* key : {"macro_auc", "micro_auc", "macro_f1", "micro_f1", "p_at_k",
                            "excluded_labels", "per_label"}) {
        CHECK(a.find(key) != std::string::npos);
    }
    CHECK(a.find("disagreement") == std::string::npos);
    rep.disagreement = DisagreementReport{};
    CHECK(metricsToJson(rep).find("disagreement") != std::string::npos);
}
