#include "paat/lstm.hpp"

#include <cmath>
#include <vector>

#include "paat/kernels.hpp"

namespace paat {

namespace {

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// All four input-side gate products for every step at once: a 4u x N
// matrix, gate g in rows [g*u, (g+1)*u). The recurrent contribution is
// added step by step.
Matrix inputPreacts(const LstmDirView& w, const Matrix& x) {
    const std::size_t u = w.hiddenSize();
    Matrix pre(4 * u, x.cols());
    for (std::size_t gate = 0; gate < 4; ++gate) {
        const Matrix& W = w.W(gate);
        const Matrix& b = w.b(gate);
        Matrix part = matmul(W, x);
        for (std::size_t r = 0; r < u; ++r) {
            const double bias = b[r];
            double* dst = pre.rowPtr(gate * u + r);
            const double* src = part.rowPtr(r);
            for (std::size_t t = 0; t < x.cols(); ++t) dst[t] = src[t] + bias;
        }
    }
    return pre;
}

}  // namespace

void lstmDirForward(const LstmDirView& w, const Matrix& x, bool reverse, LstmDirCache* cache) {
    const std::size_t u = w.hiddenSize();
    const std::size_t e = w.inputSize();
    const std::size_t N = x.cols();
    if (x.rows() != e) {
        throw ShapeError("lstm: input rows " + x.shapeStr() + " do not match gate width " +
                         std::to_string(e));
    }
    cache->i = Matrix(u, N);
    cache->f = Matrix(u, N);
    cache->g = Matrix(u, N);
    cache->o = Matrix(u, N);
    cache->c = Matrix(u, N);
    cache->h = Matrix(u, N);

    const Matrix pre = inputPreacts(w, x);
    std::vector<double> hprev(u, 0.0), cprev(u, 0.0), a(4 * u);
    for (std::size_t step = 0; step < N; ++step) {
        const std::size_t t = reverse ? N - 1 - step : step;
        for (std::size_t gate = 0; gate < 4; ++gate) {
            const Matrix& R = w.R(gate);
            for (std::size_t r = 0; r < u; ++r) {
                const double* rr = R.rowPtr(r);
                double s = pre.at(gate * u + r, t);
                for (std::size_t c = 0; c < u; ++c) s += rr[c] * hprev[c];
                a[gate * u + r] = s;
            }
        }
        for (std::size_t r = 0; r < u; ++r) {
            const double ig = sigmoid(a[r]);
            const double fg = sigmoid(a[u + r]);
            const double gg = std::tanh(a[2 * u + r]);
            const double og = sigmoid(a[3 * u + r]);
            cache->i.at(r, t) = ig;
            cache->f.at(r, t) = fg;
            cache->g.at(r, t) = gg;
            cache->o.at(r, t) = og;
            const double c = fg * cprev[r] + ig * gg;
            cache->c.at(r, t) = c;
            const double h = og * std::tanh(c);
            cache->h.at(r, t) = h;
            hprev[r] = h;
            cprev[r] = c;
        }
    }
}

void lstmDirBackward(const LstmDirView& w, const Matrix& x, const LstmDirCache& cache,
                     bool reverse, const Matrix& dH,
                     std::array<Matrix*, kLstmTensorsPerDir>& grads, Matrix& dX) {
    const std::size_t u = w.hiddenSize();
    const std::size_t e = w.inputSize();
    const std::size_t N = x.cols();

    // Gate pre-activation adjoints for all steps; the input-side
    // parameter and input gradients fall out as two matmuls afterwards.
    Matrix dPre(4 * u, N);
    std::vector<double> dh(u, 0.0), dc(u, 0.0);
    for (std::size_t step = 0; step < N; ++step) {
        const std::size_t t = reverse ? step : N - 1 - step;
        const bool first = step + 1 == N;
        const std::size_t tprev = reverse ? t + 1 : t - 1;

        for (std::size_t r = 0; r < u; ++r) {
            const double i = cache.i.at(r, t);
            const double f = cache.f.at(r, t);
            const double g = cache.g.at(r, t);
            const double o = cache.o.at(r, t);
            const double tc = std::tanh(cache.c.at(r, t));
            const double cprev = first ? 0.0 : cache.c.at(r, tprev);

            const double dht = dH.at(r, t) + dh[r];
            const double dct = dc[r] + dht * o * (1.0 - tc * tc);
            dPre.at(3 * u + r, t) = dht * tc * o * (1.0 - o);
            dPre.at(u + r, t) = dct * cprev * f * (1.0 - f);
            dPre.at(r, t) = dct * g * i * (1.0 - i);
            dPre.at(2 * u + r, t) = dct * i * (1.0 - g * g);
            dc[r] = dct * f;
        }

        // dR += da h_{t-1}^T and dh_prev = sum R^T da stay in the loop.
        for (std::size_t gate = 0; gate < 4; ++gate) {
            Matrix& dR = *grads[4 + gate];
            const Matrix& R = w.R(gate);
            if (!first) {
                for (std::size_t r = 0; r < u; ++r) {
                    const double d = dPre.at(gate * u + r, t);
                    if (d == 0.0) continue;
                    double* drr = dR.rowPtr(r);
                    for (std::size_t c = 0; c < u; ++c) drr[c] += d * cache.h.at(c, tprev);
                }
            }
            if (gate == 0) {
                for (std::size_t c = 0; c < u; ++c) dh[c] = 0.0;
            }
            for (std::size_t r = 0; r < u; ++r) {
                const double d = dPre.at(gate * u + r, t);
                if (d == 0.0) continue;
                const double* rr = R.rowPtr(r);
                for (std::size_t c = 0; c < u; ++c) dh[c] += rr[c] * d;
            }
        }
    }

    // dW_g += dPre_g x^T ; db_g += row sums ; dX += W_g^T dPre_g.
    for (std::size_t gate = 0; gate < 4; ++gate) {
        Matrix dPreG(u, N);
        for (std::size_t r = 0; r < u; ++r) {
            const double* src = dPre.rowPtr(gate * u + r);
            double* dst = dPreG.rowPtr(r);
            for (std::size_t t = 0; t < N; ++t) dst[t] = src[t];
        }
        matmulAcc(*grads[gate], dPreG, x, false, true, true);
        Matrix& db = *grads[8 + gate];
        for (std::size_t r = 0; r < u; ++r) {
            double s = 0.0;
            const double* src = dPreG.rowPtr(r);
            for (std::size_t t = 0; t < N; ++t) s += src[t];
            db[r] += s;
        }
        matmulAcc(dX, w.W(gate), dPreG, true, false, true);
    }
    (void)e;
}

Matrix biLstmForwardKernel(const BiLstmView& w, const Matrix& x, BiLstmCache* cache) {
    const std::size_t u = w.fwd.hiddenSize();
    if (w.bwd.hiddenSize() != u) {
        throw ShapeError("biLstm: direction hidden sizes disagree");
    }
    lstmDirForward(w.fwd, x, false, &cache->fwd);
    lstmDirForward(w.bwd, x, true, &cache->bwd);
    const std::size_t N = x.cols();
    Matrix out(2 * u, N);
    for (std::size_t r = 0; r < u; ++r)
        for (std::size_t t = 0; t < N; ++t) out.at(r, t) = cache->fwd.h.at(r, t);
    for (std::size_t r = 0; r < u; ++r)
        for (std::size_t t = 0; t < N; ++t) out.at(u + r, t) = cache->bwd.h.at(r, t);
    return out;
}

void biLstmBackwardKernel(const BiLstmView& w, const Matrix& x, const BiLstmCache& cache,
                          const Matrix& dOut,
                          std::array<Matrix*, 2 * kLstmTensorsPerDir>& grads, Matrix& dX) {
    const std::size_t u = w.fwd.hiddenSize();
    const std::size_t N = x.cols();
    Matrix dHf(u, N), dHb(u, N);
    for (std::size_t r = 0; r < u; ++r)
        for (std::size_t t = 0; t < N; ++t) {
            dHf.at(r, t) = dOut.at(r, t);
            dHb.at(r, t) = dOut.at(u + r, t);
        }
    std::array<Matrix*, kLstmTensorsPerDir> gf{}, gb{};
    for (std::size_t i = 0; i < kLstmTensorsPerDir; ++i) {
        gf[i] = grads[i];
        gb[i] = grads[kLstmTensorsPerDir + i];
    }
    lstmDirBackward(w.fwd, x, cache.fwd, false, dHf, gf, dX);
    lstmDirBackward(w.bwd, x, cache.bwd, true, dHb, gb, dX);
}

}  // namespace paat
