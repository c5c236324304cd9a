#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "paat/gradcheck.hpp"
#include "paat/kernels.hpp"
#include "paat/reference.hpp"
#include "paat/rng.hpp"
#include "paat/tape.hpp"

using namespace paat;

namespace {

Matrix randomMatrix(Rng& rng, std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0) {
    Matrix m(r, c);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.uniform(lo, hi);
    return m;
}

}  // namespace

TEST_CASE("matmul basic cases") {
    Matrix a{{1, 2}, {3, 4}};
    CHECK(matmul(Matrix::identity(2), a) == a);

    Matrix z(2, 3);
    Matrix any{{1, 2}, {3, 4}, {5, 6}};
    CHECK(matmul(z, any) == Matrix(2, 2));

    Matrix b{{5}, {6}};
    Matrix expect{{17}, {39}};
    CHECK(maxAbsDiff(matmul(a, b), expect) == 0.0);
}

TEST_CASE("matmul rejects mismatched shapes with both named") {
    Matrix a(2, 3), b(2, 2);
    CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("2x3"), ShapeError);
    CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("2x2"), ShapeError);
}

TEST_CASE("matmul agrees with the scalar triple-loop reference") {
    Rng rng(20240);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto m = 1 + rng.below(16), k = 1 + rng.below(16), n = 1 + rng.below(16);
        Matrix a = randomMatrix(rng, m, k);
        Matrix b = randomMatrix(rng, k, n);
        worst = std::max(worst, maxAbsDiff(matmul(a, b), ref::matmulRef(a, b)));
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("matmul transpose flags agree with explicit transposition") {
    Rng rng(7);
    Matrix a = randomMatrix(rng, 4, 3);
    Matrix b = randomMatrix(rng, 4, 5);
    Matrix at(3, 4);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 3; ++j) at.at(j, i) = a.at(i, j);
    CHECK(maxAbsDiff(matmul(a, b, true, false), ref::matmulRef(at, b)) <= 1e-15);

    Matrix c = randomMatrix(rng, 5, 3);
    Matrix ct(3, 5);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 3; ++j) ct.at(j, i) = c.at(i, j);
    CHECK(maxAbsDiff(matmul(at, c, true, true), ref::matmulRef(a, ct)) <= 1e-15);
}

TEST_CASE("rowSoftmax examples") {
    Matrix even{{0, 0}};
    Matrix r = rowSoftmax(even);
    CHECK(r.at(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(r.at(0, 1) == doctest::Approx(0.5).epsilon(1e-15));

    Matrix big{{1000, 1000, 1000}};
    Matrix rb = rowSoftmax(big);
    for (std::size_t j = 0; j < 3; ++j)
        CHECK(rb.at(0, j) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(rb.allFinite());

    Matrix ln2{{0, std::log(2.0)}};
    Matrix rl = rowSoftmax(ln2);
    CHECK(rl.at(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(rl.at(0, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("rowSoftmax rows sum to one under extreme magnitudes") {
    Rng rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        Matrix x = randomMatrix(rng, 1 + rng.below(6), 1 + rng.below(9), -1e3, 1e3);
        Matrix y = rowSoftmax(x);
        REQUIRE(y.allFinite());
        for (std::size_t r = 0; r < y.rows(); ++r) {
            double sum = 0.0;
            for (std::size_t c = 0; c < y.cols(); ++c) {
                sum += y.at(r, c);
                CHECK(y.at(r, c) >= 0.0);
            }
            CHECK(std::fabs(sum - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("elementwise examples") {
    CHECK(tanhMap(Matrix(2, 2)) == Matrix(2, 2));
    CHECK(sigmoidMap(Matrix{{0}}).at(0, 0) == 0.5);
    Matrix s = scaleMap(Matrix{{1, -2}}, 0.8);
    CHECK(s.at(0, 0) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(s.at(0, 1) == doctest::Approx(-1.6).epsilon(1e-15));
    CHECK_THROWS_AS(add(Matrix(2, 2), Matrix(2, 3)), ShapeError);
    CHECK_THROWS_AS(mul(Matrix(1, 2), Matrix(2, 1)), ShapeError);
}

TEST_CASE("diagOf") {
    Matrix m{{1, 2}, {3, 4}};
    Matrix d = diagOf(m);
    CHECK(d.rows() == 2);
    CHECK(d[0] == 1.0);
    CHECK(d[1] == 4.0);
    CHECK(diagOf(Matrix::identity(3)) == Matrix{{1}, {1}, {1}});
    CHECK(diagOf(Matrix(2, 2)) == Matrix(2, 1));
    CHECK_THROWS_AS(diagOf(Matrix(2, 3)), ShapeError);
}

TEST_CASE("kernels are deterministic across repeated calls") {
    Rng rng(4242);
    Matrix a = randomMatrix(rng, 13, 17);
    Matrix b = randomMatrix(rng, 17, 11);
    CHECK(matmul(a, b) == matmul(a, b));
    CHECK(rowSoftmax(a) == rowSoftmax(a));
    CHECK(tanhMap(a) == tanhMap(a));
}

TEST_CASE("backward on sum gives all-ones") {
    Tape tape;
    Rng rng(1);
    NodeId p = tape.leaf(randomMatrix(rng, 3, 2), true, "p");
    NodeId loss = tape.sum(p);
    tape.backward(loss);
    Matrix g = tape.grad(p);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == 1.0);
}

TEST_CASE("backward through tanh at zero gives all-ones") {
    Tape tape;
    NodeId p = tape.leaf(Matrix(2, 3), true, "p");
    NodeId loss = tape.sum(tape.tanh(p));
    tape.backward(loss);
    Matrix g = tape.grad(p);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == 1.0);
}

TEST_CASE("backward rejects a non-scalar loss node") {
    Tape tape;
    NodeId p = tape.leaf(Matrix(2, 2), true, "p");
    CHECK_THROWS_AS(tape.backward(tape.tanh(p)), ContractError);
}

TEST_CASE("finiteDiffCheck on f(p) = p^2 at p = 3") {
    Matrix p{{3.0}};
    auto loss = [&]() { return p[0] * p[0]; };
    Matrix analytic{{6.0}};
    GradReport rep = finiteDiffCheck(loss, {{"p", &p}}, {analytic}, 1e-5, 1e-6);
    CHECK(rep.pass);
    CHECK(std::fabs(rep.entries[0].numeric[0] - 6.0) <= 1e-8);
}

TEST_CASE("finiteDiffCheck on a constant function is zero") {
    Matrix p{{1.0, 2.0}};
    auto loss = []() { return 7.5; };
    GradReport rep = finiteDiffCheck(loss, {{"p", &p}}, {Matrix(1, 2)}, 1e-5, 1e-9);
    CHECK(rep.pass);
    CHECK(rep.entries[0].numeric == Matrix(1, 2));
}

TEST_CASE("finiteDiffCheck reports the offending coordinate on a non-finite loss") {
    Matrix p{{0.5}};
    auto loss = [&]() { return std::log(-p[0]); };
    CHECK_THROWS_WITH_AS(finiteDiffCheck(loss, {{"bad", &p}}, {Matrix(1, 1)}, 1e-5, 1e-6),
                         doctest::Contains("bad"), InputError);
}

namespace {

// Shared fixture: composite losses exercising every differentiable op.
struct CompositeLoss {
    Matrix p, q;

    double eval(int which) const {
        Tape tape;
        return build(tape, which, nullptr, nullptr);
    }

    double build(Tape& tape, int which, NodeId* pOut, NodeId* qOut) const {
        NodeId np = tape.leaf(p, true, "p");
        NodeId nq = tape.leaf(q, true, "q");
        if (pOut) *pOut = np;
        if (qOut) *qOut = nq;
        NodeId loss;
        switch (which) {
            case 0:
                loss = tape.sum(tape.mul(tape.tanh(tape.matmul(np, nq)), tape.sigmoid(np)));
                break;
            case 1:
                loss = tape.sum(tape.rowSoftmax(tape.matmul(np, tape.tanh(nq))));
                break;
            case 2:
                loss = tape.sum(tape.diagOf(tape.matmul(tape.tanh(np), nq)));
                break;
            case 3:
                loss = tape.sum(tape.scale(tape.add(np, tape.mul(nq, nq)), 0.8));
                break;
            case 4:
                loss = tape.sum(tape.mul(tape.rowSoftmax(tape.matmul(np, nq, true, false)),
                                         tape.sigmoid(tape.scale(nq, -1.3))));
                break;
            default: {
                NodeId mm = tape.matmul(np, nq);
                NodeId t = tape.concatRows(tape.sliceCols(np, 0, 2), tape.sliceCols(mm, 1, 3));
                NodeId s = tape.diagOf(
                    tape.matmul(tape.sliceCols(np, 0, 2), tape.sliceCols(nq, 0, 2), true, false));
                NodeId v = tape.concatRows(tape.diagOf(mm), tape.diagOf(mm));
                loss = tape.sum(tape.addColVec(tape.colScale(t, s), v));
                break;
            }
        }
        if (tape.value(loss).size() != 1) throw ContractError("composite loss not scalar");
        const double v = tape.value(loss)[0];
        return v;
    }
};

}  // namespace

TEST_CASE("backward matches finite differences on random op compositions") {
    Rng rng(555);
    for (int trial = 0; trial < 30; ++trial) {
        CompositeLoss c;
        c.p = randomMatrix(rng, 3, 3, -0.8, 0.8);
        c.q = randomMatrix(rng, 3, 3, -0.8, 0.8);
        const int which = trial % 6;

        Tape tape;
        NodeId np = 0, nq = 0;
        c.build(tape, which, &np, &nq);
        NodeId lossNode = static_cast<NodeId>(tape.nodeCount()) - 1;
        tape.backward(lossNode);
        std::vector<Matrix> analytic = {tape.grad(np), tape.grad(nq)};

        auto lossFn = [&]() { return c.eval(which); };
        GradReport rep =
            finiteDiffCheck(lossFn, {{"p", &c.p}, {"q", &c.q}}, analytic, 1e-5, 1e-6);
        INFO("composite ", which, ": ", rep.summary());
        CHECK(rep.pass);
    }
}

TEST_CASE("adjoints accumulate over fan-out") {
    Tape tape;
    Matrix v{{2.0}};
    NodeId p = tape.leaf(v, true, "p");
    // loss = p * p + p  =>  d/dp = 2p + 1 = 5
    NodeId loss = tape.sum(tape.add(tape.mul(p, p), p));
    tape.backward(loss);
    CHECK(tape.grad(p)[0] == doctest::Approx(5.0).epsilon(1e-15));
}
