#include "paat/reference.hpp"

#include <cmath>

namespace paat::ref {

Matrix matmulRef(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) requireShape(false, "matmulRef", a, b);
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < a.cols(); ++p) s += a.at(i, p) * b.at(p, j);
            out.at(i, j) = s;
        }
    return out;
}

Matrix rowSoftmaxRef(const Matrix& x) {
    Matrix out(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < x.cols(); ++c) sum += std::exp(x.at(r, c));
        for (std::size_t c = 0; c < x.cols(); ++c) out.at(r, c) = std::exp(x.at(r, c)) / sum;
    }
    return out;
}

AttentionRef labelAttentionRef(const Matrix& W, const Matrix& U, const Matrix& H) {
    const std::size_t da = W.rows();
    const std::size_t hu = H.rows();
    const std::size_t N = H.cols();
    const std::size_t L = U.rows();

    Matrix Z(da, N);
    for (std::size_t i = 0; i < da; ++i)
        for (std::size_t j = 0; j < N; ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < hu; ++p) s += W.at(i, p) * H.at(p, j);
            Z.at(i, j) = std::tanh(s);
        }

    Matrix scores(L, N);
    for (std::size_t l = 0; l < L; ++l)
        for (std::size_t j = 0; j < N; ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < da; ++p) s += U.at(l, p) * Z.at(p, j);
            scores.at(l, j) = s;
        }

    AttentionRef out;
    out.A = rowSoftmaxRef(scores);
    out.V = Matrix(hu, L);
    for (std::size_t i = 0; i < hu; ++i)
        for (std::size_t l = 0; l < L; ++l) {
            double s = 0.0;
            for (std::size_t j = 0; j < N; ++j) s += H.at(i, j) * out.A.at(l, j);
            out.V.at(i, l) = s;
        }
    return out;
}

PartitionAttentionRef partitionAttentionRef(const Matrix& W, const Matrix& U, const Matrix& H,
                                            const SegmentBoundaries& boundaries, double alpha) {
    const std::size_t hu = H.rows();
    const std::size_t L = U.rows();
    const std::size_t da = W.rows();
    const std::size_t n = boundaries.count();

    PartitionAttentionRef out;
    out.T = Matrix(L, n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto [s0, s1] = boundaries.spans[k];
        Matrix Hk(hu, s1 - s0);
        for (std::size_t i = 0; i < hu; ++i)
            for (std::size_t j = s0; j < s1; ++j) Hk.at(i, j - s0) = H.at(i, j);
        AttentionRef seg = labelAttentionRef(W, U, Hk);

        // Zhat_k = tanh(W V_k); Ahat_k = U Zhat_k; T_k = diag(Ahat_k) * alpha.
        Matrix Zhat(da, L);
        for (std::size_t i = 0; i < da; ++i)
            for (std::size_t l = 0; l < L; ++l) {
                double s = 0.0;
                for (std::size_t p = 0; p < hu; ++p) s += W.at(i, p) * seg.V.at(p, l);
                Zhat.at(i, l) = std::tanh(s);
            }
        for (std::size_t l = 0; l < L; ++l) {
            double s = 0.0;
            for (std::size_t p = 0; p < da; ++p) s += U.at(l, p) * Zhat.at(p, l);
            out.T.at(l, k) = s * alpha;
        }
        out.perSegment.push_back(std::move(seg));
    }

    out.M = rowSoftmaxRef(out.T);
    out.Vp = Matrix(hu, L);
    for (std::size_t l = 0; l < L; ++l)
        for (std::size_t i = 0; i < hu; ++i) {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k)
                s += out.M.at(l, k) * out.perSegment[k].V.at(i, l);
            out.Vp.at(i, l) = s;
        }
    return out;
}

Matrix biLstmRef(const BiLstmView& w, const Matrix& x) {
    const std::size_t u = w.fwd.hiddenSize();
    const std::size_t e = x.rows();
    const std::size_t N = x.cols();
    Matrix out(2 * u, N);

    for (int dir = 0; dir < 2; ++dir) {
        const LstmDirView& v = dir == 0 ? w.fwd : w.bwd;
        std::vector<double> h(u, 0.0), c(u, 0.0);
        for (std::size_t step = 0; step < N; ++step) {
            const std::size_t t = dir == 0 ? step : N - 1 - step;
            std::vector<double> gates[4];
            for (std::size_t gate = 0; gate < 4; ++gate) {
                gates[gate].assign(u, 0.0);
                for (std::size_t r = 0; r < u; ++r) {
                    double s = v.b(gate)[r];
                    for (std::size_t col = 0; col < e; ++col)
                        s += v.W(gate).at(r, col) * x.at(col, t);
                    for (std::size_t col = 0; col < u; ++col) s += v.R(gate).at(r, col) * h[col];
                    gates[gate][r] = s;
                }
            }
            for (std::size_t r = 0; r < u; ++r) {
                const double ig = 1.0 / (1.0 + std::exp(-gates[0][r]));
                const double fg = 1.0 / (1.0 + std::exp(-gates[1][r]));
                const double gg = std::tanh(gates[2][r]);
                const double og = 1.0 / (1.0 + std::exp(-gates[3][r]));
                c[r] = fg * c[r] + ig * gg;
                h[r] = og * std::tanh(c[r]);
                out.at(dir == 0 ? r : u + r, t) = h[r];
            }
        }
    }
    return out;
}

Matrix embedSegmentsRef(const Matrix& table, const std::vector<TokenId>& tokens,
                        const SegmentBoundaries& boundaries, double gamma) {
    const std::size_t e = table.rows();
    Matrix out(e, tokens.size());
    for (const auto& [s0, s1] : boundaries.spans) {
        for (std::size_t r = 0; r < e; ++r) {
            double mean = 0.0;
            for (std::size_t t = s0; t < s1; ++t)
                mean += table.at(r, static_cast<std::size_t>(tokens[t]));
            mean /= static_cast<double>(s1 - s0);
            for (std::size_t t = s0; t < s1; ++t)
                out.at(r, t) =
                    table.at(r, static_cast<std::size_t>(tokens[t])) + gamma * mean;
        }
    }
    return out;
}

}  // namespace paat::ref
