// Times the OpenMP kernels against the serial scalar references and
// checks they agree while doing it. Run with OMP_NUM_THREADS to compare
// thread counts.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "paat/attention.hpp"
#include "paat/encoder.hpp"
#include "paat/kernels.hpp"
#include "paat/model.hpp"
#include "paat/reference.hpp"
#include "paat/rng.hpp"

using namespace paat;

namespace {

Matrix randomMatrix(Rng& rng, std::size_t r, std::size_t c) {
    Matrix m(r, c);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.uniform(-1.0, 1.0);
    return m;
}

template <typename F>
double timeMs(F&& fn, int reps) {
    // One warmup, then best of reps.
    fn();
    double best = 1e300;
    for (int i = 0; i < reps; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return best;
}

void report(const std::string& name, double serialMs, double parallelMs, double diff) {
    std::printf("%-34s %10.3f ms %10.3f ms %8.2fx   max|diff| %.3g\n", name.c_str(), serialMs,
                parallelMs, serialMs / parallelMs, diff);
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
    std::printf("built without OpenMP; both columns run serial code\n");
#endif
    std::printf("%-34s %13s %13s %9s\n", "kernel", "serial ref", "parallel", "speedup");

    Rng rng(1234);

    {
        Matrix a = randomMatrix(rng, 256, 256);
        Matrix b = randomMatrix(rng, 256, 256);
        Matrix serial, parallel;
        const double sMs = timeMs([&]() { serial = ref::matmulRef(a, b); }, 5);
        const double pMs = timeMs([&]() { parallel = matmul(a, b); }, 5);
        report("matmul 256x256x256", sMs, pMs, maxAbsDiff(serial, parallel));
    }
    {
        // Attention-shaped product: d_a x 2u times 2u x N.
        Matrix w = randomMatrix(rng, 512, 1024);
        Matrix h = randomMatrix(rng, 1024, 600);
        Matrix serial, parallel;
        const double sMs = timeMs([&]() { serial = ref::matmulRef(w, h); }, 5);
        const double pMs = timeMs([&]() { parallel = matmul(w, h); }, 5);
        report("matmul 512x1024 * 1024x600", sMs, pMs, maxAbsDiff(serial, parallel));
    }
    {
        Matrix x = randomMatrix(rng, 50, 4096);
        Matrix serial, parallel;
        const double sMs = timeMs([&]() { serial = ref::rowSoftmaxRef(x); }, 10);
        const double pMs = timeMs([&]() { parallel = rowSoftmax(x); }, 10);
        report("rowSoftmax 50x4096", sMs, pMs, maxAbsDiff(serial, parallel));
    }
    {
        // Full label attention at paper-scale widths on a desk-length doc.
        AttentionParams p{randomMatrix(rng, 64, 64), randomMatrix(rng, 50, 64)};
        Matrix h = randomMatrix(rng, 64, 2048);
        AttentionOutput out;
        ref::AttentionRef refOut;
        const double sMs =
            timeMs([&]() { refOut = ref::labelAttentionRef(p.W, p.U, h); }, 5);
        const double pMs = timeMs([&]() { out = labelAttention(p, h); }, 5);
        report("labelAttention 64/50 @ N=2048", sMs, pMs,
               std::max(maxAbsDiff(out.A, refOut.A), maxAbsDiff(out.V, refOut.V)));
    }
    {
        // Document scoring fan-out: the parallel path in evaluation.
        PaatConfig c;
        c.vocabSize = 500;
        c.labelCount = 20;
        c.embedDim = 32;
        c.hiddenSize = 16;
        c.attnDim = 32;
        c.nEnc = 6;
        c.nAtt = 6;
        c.seed = 5;
        PaatModel model = PaatModel::init(c);
        std::vector<Document> docs;
        for (int i = 0; i < 64; ++i) {
            Document d;
            d.id = "b" + std::to_string(i);
            for (int t = 0; t < 600; ++t)
                d.tokens.push_back(static_cast<TokenId>(rng.below(c.vocabSize)));
            docs.push_back(std::move(d));
        }
        ScoreMatrix serial, parallel;
        const double sMs = timeMs(
            [&]() {
                serial.scores = Matrix(docs.size(), c.labelCount);
                serial.gold.assign(docs.size(), std::vector<std::uint8_t>(c.labelCount, 0));
                for (std::size_t d = 0; d < docs.size(); ++d) {
                    auto probs = model.forward(docs[d].tokens).probs;
                    for (std::size_t l = 0; l < c.labelCount; ++l)
                        serial.scores.at(d, l) = probs[l];
                }
            },
            3);
        const double pMs = timeMs([&]() { parallel = scoreDataset(model, docs); }, 3);
        report("scoreDataset 64 docs x 600 tok", sMs, pMs,
               maxAbsDiff(serial.scores, parallel.scores));
    }
    return 0;
}
