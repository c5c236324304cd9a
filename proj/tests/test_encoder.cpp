#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "paat/encoder.hpp"
#include "paat/gradcheck.hpp"
#include "paat/kernels.hpp"
#include "paat/reference.hpp"
#include "paat/rng.hpp"
#include "paat/tape.hpp"

using namespace paat;

namespace {

Matrix randomMatrix(Rng& rng, std::size_t r, std::size_t c, double lo = -0.5, double hi = 0.5) {
    Matrix m(r, c);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.uniform(lo, hi);
    return m;
}

BiLstmParams randomLstm(Rng& rng, std::size_t u, std::size_t e) {
    BiLstmParams p;
    for (LstmDirParams* d : {&p.fwd, &p.bwd}) {
        d->Wi = randomMatrix(rng, u, e);
        d->Wf = randomMatrix(rng, u, e);
        d->Wg = randomMatrix(rng, u, e);
        d->Wo = randomMatrix(rng, u, e);
        d->Ri = randomMatrix(rng, u, u);
        d->Rf = randomMatrix(rng, u, u);
        d->Rg = randomMatrix(rng, u, u);
        d->Ro = randomMatrix(rng, u, u);
        d->bi = randomMatrix(rng, u, 1);
        d->bf = randomMatrix(rng, u, 1);
        d->bg = randomMatrix(rng, u, 1);
        d->bo = randomMatrix(rng, u, 1);
    }
    return p;
}

BiLstmParams zeroLstm(std::size_t u, std::size_t e) {
    BiLstmParams p;
    for (LstmDirParams* d : {&p.fwd, &p.bwd}) {
        d->Wi = d->Wf = d->Wg = d->Wo = Matrix(u, e);
        d->Ri = d->Rf = d->Rg = d->Ro = Matrix(u, u);
        d->bi = d->bf = d->bg = d->bo = Matrix(u, 1);
    }
    return p;
}

}  // namespace

TEST_CASE("segmentTokens balances sizes") {
    std::vector<TokenId> ten(10, 1);
    auto b = segmentTokens(ten, 3);
    REQUIRE(b.count() == 3);
    CHECK(b.spans[0] == std::make_pair<std::size_t, std::size_t>(0, 4));
    CHECK(b.spans[1] == std::make_pair<std::size_t, std::size_t>(4, 7));
    CHECK(b.spans[2] == std::make_pair<std::size_t, std::size_t>(7, 10));

    std::vector<TokenId> five(5, 1);
    auto one = segmentTokens(five, 1);
    REQUIRE(one.count() == 1);
    CHECK(one.spans[0] == std::make_pair<std::size_t, std::size_t>(0, 5));

    std::vector<TokenId> two(2, 1);
    auto clamped = segmentTokens(two, 6);
    REQUIRE(clamped.count() == 2);
    CHECK(clamped.spans[0].second - clamped.spans[0].first == 1);
    CHECK(clamped.spans[1].second - clamped.spans[1].first == 1);

    CHECK_THROWS_AS(segmentTokens({}, 3), InputError);
}

TEST_CASE("segment sizes differ by at most one and cover the sequence") {
    Rng rng(11);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + rng.below(500);
        const std::size_t k = 1 + rng.below(12);
        auto b = segmentCount(n, k);
        b.validate();
        CHECK(b.count() == std::min(n, k));
        std::size_t mn = n, mx = 0;
        for (auto [s, e] : b.spans) {
            mn = std::min(mn, e - s);
            mx = std::max(mx, e - s);
        }
        CHECK(mx - mn <= 1);
        CHECK(b.tokenCount() == n);
    }
}

TEST_CASE("segmentAtHeaders starts a segment at each header") {
    std::vector<TokenId> toks = {5, 6, 2, 7, 8, 9, 2, 4};
    auto b = segmentAtHeaders(toks, 2);
    REQUIRE(b.count() == 3);
    CHECK(b.spans[0] == std::make_pair<std::size_t, std::size_t>(0, 2));
    CHECK(b.spans[1] == std::make_pair<std::size_t, std::size_t>(2, 6));
    CHECK(b.spans[2] == std::make_pair<std::size_t, std::size_t>(6, 8));

    std::vector<TokenId> noHeader = {5, 6, 7};
    CHECK(segmentAtHeaders(noHeader, 2).count() == 1);
    // A leading header opens the first segment rather than an empty one.
    std::vector<TokenId> leading = {2, 5, 6};
    CHECK(segmentAtHeaders(leading, 2).count() == 1);
}

TEST_CASE("encodeSegment with gamma zero is a plain lookup") {
    Rng rng(3);
    Matrix table = randomMatrix(rng, 4, 10);
    SegmentEncoderSpec spec{SegmentEncoderSpec::Kind::TrainableEmbedding, 10, 4, 0.0};
    std::vector<TokenId> toks = {7, 0, 3};
    Matrix out = encodeSegment(spec, table, toks);
    for (std::size_t t = 0; t < toks.size(); ++t)
        for (std::size_t r = 0; r < 4; ++r)
            CHECK(out.at(r, t) == table.at(r, static_cast<std::size_t>(toks[t])));
}

TEST_CASE("single-token segment with gamma one doubles the embedding") {
    Rng rng(4);
    Matrix table = randomMatrix(rng, 3, 5);
    SegmentEncoderSpec spec{SegmentEncoderSpec::Kind::TrainableEmbedding, 5, 3, 1.0};
    std::vector<TokenId> toks = {2};
    Matrix out = encodeSegment(spec, table, toks);
    for (std::size_t r = 0; r < 3; ++r)
        CHECK(out.at(r, 0) == doctest::Approx(2.0 * table.at(r, 2)).epsilon(1e-15));
}

TEST_CASE("frozen projection ignores gamma and is deterministic") {
    Matrix table = makeFrozenProjection(4, 9, 123);
    CHECK(maxAbsDiff(table, makeFrozenProjection(4, 9, 123)) == 0.0);
    SegmentEncoderSpec spec{SegmentEncoderSpec::Kind::FrozenProjection, 9, 4, 0.9};
    std::vector<TokenId> toks = {1, 8, 8};
    Matrix a = encodeSegment(spec, table, toks);
    Matrix b = encodeSegment(spec, table, toks);
    CHECK(a == b);
    for (std::size_t t = 0; t < toks.size(); ++t)
        for (std::size_t r = 0; r < 4; ++r)
            CHECK(a.at(r, t) == table.at(r, static_cast<std::size_t>(toks[t])));
}

TEST_CASE("encodeSegment names the offending id and position") {
    Matrix table(2, 4);
    SegmentEncoderSpec spec{SegmentEncoderSpec::Kind::TrainableEmbedding, 4, 2, 0.0};
    std::vector<TokenId> toks = {1, 9, 0};
    CHECK_THROWS_WITH_AS(encodeSegment(spec, table, toks), doctest::Contains("9"), InputError);
    CHECK_THROWS_WITH_AS(encodeSegment(spec, table, toks), doctest::Contains("position 1"),
                         InputError);
}

TEST_CASE("encodeSegment agrees with the scalar reference under mixing") {
    Rng rng(5);
    Matrix table = randomMatrix(rng, 4, 12);
    SegmentEncoderSpec spec{SegmentEncoderSpec::Kind::TrainableEmbedding, 12, 4, 0.5};
    std::vector<TokenId> toks = {3, 3, 11, 0, 5, 1, 7};
    auto bounds = segmentTokens(toks, 2);
    Matrix want = ref::embedSegmentsRef(table, toks, bounds, 0.5);
    std::vector<Matrix> parts;
    for (auto [s0, s1] : bounds.spans)
        parts.push_back(
            encodeSegment(spec, table, std::span<const TokenId>(toks.data() + s0, s1 - s0)));
    Matrix got = concatCols({&parts[0], &parts[1]});
    CHECK(maxAbsDiff(got, want) <= 1e-15);

    Tape tape;
    NodeId t = tape.leaf(table, false);
    Matrix viaTape = tape.value(tape.embedSegments(t, toks, bounds, 0.5, true));
    CHECK(maxAbsDiff(viaTape, want) <= 1e-15);
}

TEST_CASE("bi-LSTM with all-zero parameters emits zeros") {
    BiLstmParams p = zeroLstm(3, 2);
    Matrix x{{0.5, -0.25, 1.0}, {0.1, 0.2, 0.3}};
    Matrix out = biLstmForward(p, x, 0.0, nullptr);
    CHECK(out == Matrix(6, 3));
}

TEST_CASE("bi-LSTM single column runs both directions on the same input") {
    Rng rng(6);
    BiLstmParams p = randomLstm(rng, 3, 2);
    Matrix x = randomMatrix(rng, 2, 1);
    Matrix out = biLstmForward(p, x, 0.0, nullptr);
    CHECK(out.rows() == 6);
    CHECK(out.cols() == 1);
    CHECK(maxAbsDiff(out, ref::biLstmRef(p.view(), x)) <= 1e-15);
}

TEST_CASE("bi-LSTM matches the naive reference") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t e = 1 + rng.below(4);
        const std::size_t u = 1 + rng.below(4);
        const std::size_t N = 1 + rng.below(6);
        BiLstmParams p = randomLstm(rng, u, e);
        Matrix x = randomMatrix(rng, e, N, -1.0, 1.0);
        CHECK(maxAbsDiff(biLstmForward(p, x, 0.0, nullptr), ref::biLstmRef(p.view(), x)) <=
              1e-12);
    }
}

TEST_CASE("every bi-LSTM output column depends on every input column") {
    Rng rng(8);
    BiLstmParams p = randomLstm(rng, 3, 2);
    Matrix x = randomMatrix(rng, 2, 5, -1.0, 1.0);
    Matrix base = biLstmForward(p, x, 0.0, nullptr);
    for (std::size_t col = 0; col < x.cols(); ++col) {
        Matrix xp = x;
        xp.at(0, col) += 0.37;
        Matrix out = biLstmForward(p, xp, 0.0, nullptr);
        CHECK(maxAbsDiff(out, base) > 0.0);
    }
}

TEST_CASE("dropout mask is inverted and only takes two values") {
    Rng rng(9);
    Matrix mask = dropoutMask(8, 50, 0.3, rng);
    std::size_t zeros = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        const bool isZero = mask[i] == 0.0;
        const bool isScaled = std::fabs(mask[i] - 1.0 / 0.7) <= 1e-15;
        CHECK((isZero || isScaled));
        zeros += isZero ? 1 : 0;
    }
    CHECK(zeros > 40);   // ~120 expected of 400
    CHECK(zeros < 220);
}

TEST_CASE("encodeDocument with one segment equals whole-document encoding") {
    Rng rng(10);
    Matrix table = randomMatrix(rng, 4, 20);
    SegmentEncoderSpec spec{SegmentEncoderSpec::Kind::TrainableEmbedding, 20, 4, 0.5};
    BiLstmParams lstm = randomLstm(rng, 3, 4);
    std::vector<TokenId> toks = {1, 5, 9, 13, 2, 2, 7};
    Matrix viaOne = encodeDocument(spec, table, lstm, toks, 1);
    Matrix whole = biLstmForward(lstm, encodeSegment(spec, table, toks), 0.0, nullptr);
    CHECK(maxAbsDiff(viaOne, whole) == 0.0);
    // Deterministic in evaluation mode.
    CHECK(encodeDocument(spec, table, lstm, toks, 3) == encodeDocument(spec, table, lstm, toks, 3));
}

TEST_CASE("moving a token across a segment boundary changes both mixing means") {
    Rng rng(12);
    Matrix table = randomMatrix(rng, 4, 20);
    SegmentEncoderSpec spec{SegmentEncoderSpec::Kind::TrainableEmbedding, 20, 4, 0.5};
    BiLstmParams lstm = randomLstm(rng, 3, 4);
    std::vector<TokenId> a = {1, 5, 9, 13, 2, 6, 7, 8};
    std::vector<TokenId> b = {1, 5, 9, 2, 13, 6, 7, 8};  // swap around the 4|4 boundary
    Matrix ha = encodeDocument(spec, table, lstm, a, 2);
    Matrix hb = encodeDocument(spec, table, lstm, b, 2);
    CHECK(maxAbsDiff(ha, hb) > 0.0);

    // The oracle encoder agrees on both inputs.
    auto oracle = [&](const std::vector<TokenId>& toks) {
        return ref::biLstmRef(lstm.view(),
                              ref::embedSegmentsRef(table, toks, segmentTokens(toks, 2), 0.5));
    };
    CHECK(maxAbsDiff(ha, oracle(a)) <= 1e-12);
    CHECK(maxAbsDiff(hb, oracle(b)) <= 1e-12);
}

TEST_CASE("tape bi-LSTM gradients pass finite differences") {
    Rng rng(13);
    const std::size_t e = 2, u = 2, N = 3;
    BiLstmParams p = randomLstm(rng, u, e);
    Matrix x = randomMatrix(rng, e, N, -1.0, 1.0);
    Matrix weights = randomMatrix(rng, 2 * u, N, -1.0, 1.0);

    auto build = [&](Tape& tape, std::vector<NodeId>* leafIds) {
        std::vector<NodeId> ids;
        auto viewLeaves = [&](LstmDirParams& d) {
            for (Matrix* m : {&d.Wi, &d.Wf, &d.Wg, &d.Wo, &d.Ri, &d.Rf, &d.Rg, &d.Ro, &d.bi,
                              &d.bf, &d.bg, &d.bo})
                ids.push_back(tape.leaf(*m, true));
        };
        NodeId nx = tape.leaf(x, true);
        viewLeaves(p.fwd);
        viewLeaves(p.bwd);
        NodeId h = tape.biLstm(nx, ids);
        NodeId loss = tape.sum(tape.mul(h, tape.constant(weights)));
        if (leafIds) {
            leafIds->push_back(nx);
            leafIds->insert(leafIds->end(), ids.begin(), ids.end());
        }
        return loss;
    };

    Tape tape;
    std::vector<NodeId> leafIds;
    NodeId loss = build(tape, &leafIds);
    tape.backward(loss);

    std::vector<std::pair<std::string, Matrix*>> params = {{"x", &x}};
    auto addDir = [&](const char* dir, LstmDirParams& d) {
        const std::string b = std::string(dir) + ".";
        params.insert(params.end(),
                      {{b + "Wi", &d.Wi}, {b + "Wf", &d.Wf}, {b + "Wg", &d.Wg}, {b + "Wo", &d.Wo},
                       {b + "Ri", &d.Ri}, {b + "Rf", &d.Rf}, {b + "Rg", &d.Rg}, {b + "Ro", &d.Ro},
                       {b + "bi", &d.bi}, {b + "bf", &d.bf}, {b + "bg", &d.bg}, {b + "bo", &d.bo}});
    };
    addDir("fwd", p.fwd);
    addDir("bwd", p.bwd);

    std::vector<Matrix> analytic;
    for (NodeId id : leafIds) analytic.push_back(tape.grad(id));

    auto lossFn = [&]() {
        Tape t2;
        NodeId l = build(t2, nullptr);
        return t2.value(l)[0];
    };
    GradReport rep = finiteDiffCheck(lossFn, params, analytic, 1e-5, 1e-6);
    INFO(rep.summary());
    CHECK(rep.pass);
}
