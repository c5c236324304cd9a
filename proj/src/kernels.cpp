#include "paat/kernels.hpp"

#include <cmath>
#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace paat {

namespace {

inline void checkSame(const Matrix& a, const Matrix& b, const char* what) {
    requireShape(a.sameShape(b), what, a, b);
}

}  // namespace

void matmulAcc(Matrix& out, const Matrix& a, const Matrix& b, bool transA, bool transB,
               bool accumulate) {
    const std::size_t m = transA ? a.cols() : a.rows();
    const std::size_t k = transA ? a.rows() : a.cols();
    const std::size_t kb = transB ? b.cols() : b.rows();
    const std::size_t n = transB ? b.rows() : b.cols();
    if (k != kb) {
        throw ShapeError("matmul: inner dimensions disagree, " + a.shapeStr() +
                         (transA ? "^T" : "") + " * " + b.shapeStr() + (transB ? "^T" : ""));
    }
    if (out.rows() != m || out.cols() != n) {
        if (accumulate) {
            throw ShapeError("matmul: accumulator is " + out.shapeStr() + ", product is " +
                             std::to_string(m) + "x" + std::to_string(n));
        }
        out = Matrix(m, n);
    } else if (!accumulate) {
        out.fill(0.0);
    }

    const double* ad = a.data();
    const double* bd = b.data();
    double* od = out.data();
    const std::size_t acols = a.cols();
    const std::size_t bcols = b.cols();
    const std::size_t work = m * n * k;

#pragma omp parallel for schedule(static) if (work >= kParallelCutoff)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(m); ++i) {
        double* orow = od + static_cast<std::size_t>(i) * n;
        if (!transA && !transB) {
            // Rank-1 row updates, unit-stride over b's rows.
            const double* arow = ad + static_cast<std::size_t>(i) * acols;
            for (std::size_t p = 0; p < k; ++p) {
                const double av = arow[p];
                const double* brow = bd + p * bcols;
                for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
            }
        } else if (!transA && transB) {
            const double* arow = ad + static_cast<std::size_t>(i) * acols;
            for (std::size_t j = 0; j < n; ++j) {
                const double* brow = bd + j * bcols;
                double s = 0.0;
                for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
                orow[j] += s;
            }
        } else if (transA && !transB) {
            for (std::size_t p = 0; p < k; ++p) {
                const double av = ad[p * acols + static_cast<std::size_t>(i)];
                const double* brow = bd + p * bcols;
                for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
            }
        } else {
            for (std::size_t j = 0; j < n; ++j) {
                double s = 0.0;
                for (std::size_t p = 0; p < k; ++p)
                    s += ad[p * acols + static_cast<std::size_t>(i)] * bd[j * bcols + p];
                orow[j] += s;
            }
        }
    }
}

Matrix matmul(const Matrix& a, const Matrix& b, bool transA, bool transB) {
    Matrix out;
    matmulAcc(out, a, b, transA, transB, false);
    return out;
}

Matrix rowSoftmax(const Matrix& x) {
    Matrix out(x.rows(), x.cols());
    const std::size_t n = x.cols();
#pragma omp parallel for schedule(static) if (x.size() >= kParallelCutoff)
    for (std::int64_t r = 0; r < static_cast<std::int64_t>(x.rows()); ++r) {
        const double* in = x.rowPtr(static_cast<std::size_t>(r));
        double* o = out.rowPtr(static_cast<std::size_t>(r));
        double mx = in[0];
        for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, in[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            o[j] = std::exp(in[j] - mx);
            sum += o[j];
        }
        const double inv = 1.0 / sum;
        for (std::size_t j = 0; j < n; ++j) o[j] *= inv;
    }
    return out;
}

namespace {

template <typename F>
Matrix mapUnary(const Matrix& x, F f) {
    Matrix out(x.rows(), x.cols());
    const double* in = x.data();
    double* o = out.data();
#pragma omp parallel for schedule(static) if (x.size() >= kParallelCutoff)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(x.size()); ++i) o[i] = f(in[i]);
    return out;
}

}  // namespace

Matrix tanhMap(const Matrix& x) {
    return mapUnary(x, [](double v) { return std::tanh(v); });
}

Matrix sigmoidMap(const Matrix& x) {
    return mapUnary(x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

Matrix scaleMap(const Matrix& x, double c) {
    return mapUnary(x, [c](double v) { return c * v; });
}

Matrix add(const Matrix& a, const Matrix& b) {
    checkSame(a, b, "add");
    Matrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    checkSame(a, b, "sub");
    Matrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

Matrix mul(const Matrix& a, const Matrix& b) {
    checkSame(a, b, "mul");
    Matrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

Matrix diagOf(const Matrix& x) {
    if (x.rows() != x.cols()) throw ShapeError("diagOf: matrix is not square, " + x.shapeStr());
    Matrix out(x.rows(), 1);
    for (std::size_t i = 0; i < x.rows(); ++i) out[i] = x.at(i, i);
    return out;
}

Matrix addColVec(const Matrix& a, const Matrix& v) {
    if (v.cols() != 1 || v.rows() != a.rows()) {
        throw ShapeError("addColVec: vector " + v.shapeStr() + " against " + a.shapeStr());
    }
    Matrix out(a.rows(), a.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const double add = v[r];
        const double* in = a.rowPtr(r);
        double* o = out.rowPtr(r);
        for (std::size_t c = 0; c < a.cols(); ++c) o[c] = in[c] + add;
    }
    return out;
}

Matrix colScale(const Matrix& a, const Matrix& s) {
    if (s.cols() != 1 || s.rows() != a.cols()) {
        throw ShapeError("colScale: scale vector " + s.shapeStr() + " against " + a.shapeStr());
    }
    Matrix out(a.rows(), a.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const double* in = a.rowPtr(r);
        double* o = out.rowPtr(r);
        for (std::size_t c = 0; c < a.cols(); ++c) o[c] = in[c] * s[c];
    }
    return out;
}

Matrix sliceCols(const Matrix& a, std::size_t c0, std::size_t c1) {
    if (c0 >= c1 || c1 > a.cols()) {
        throw ContractError("sliceCols: range [" + std::to_string(c0) + "," + std::to_string(c1) +
                            ") out of " + a.shapeStr());
    }
    Matrix out(a.rows(), c1 - c0);
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const double* in = a.rowPtr(r) + c0;
        double* o = out.rowPtr(r);
        for (std::size_t c = 0; c < out.cols(); ++c) o[c] = in[c];
    }
    return out;
}

Matrix concatCols(const std::vector<const Matrix*>& parts) {
    if (parts.empty()) throw ContractError("concatCols: no parts");
    const std::size_t rows = parts[0]->rows();
    std::size_t cols = 0;
    for (const Matrix* p : parts) {
        if (p->rows() != rows) {
            throw ShapeError("concatCols: row mismatch, " + parts[0]->shapeStr() + " vs " +
                             p->shapeStr());
        }
        cols += p->cols();
    }
    Matrix out(rows, cols);
    std::size_t off = 0;
    for (const Matrix* p : parts) {
        for (std::size_t r = 0; r < rows; ++r) {
            const double* in = p->rowPtr(r);
            double* o = out.rowPtr(r) + off;
            for (std::size_t c = 0; c < p->cols(); ++c) o[c] = in[c];
        }
        off += p->cols();
    }
    return out;
}

Matrix concatRows(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) requireShape(false, "concatRows", a, b);
    Matrix out(a.rows() + b.rows(), a.cols());
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c) out.at(r, c) = a.at(r, c);
    for (std::size_t r = 0; r < b.rows(); ++r)
        for (std::size_t c = 0; c < b.cols(); ++c) out.at(a.rows() + r, c) = b.at(r, c);
    return out;
}

double sumAll(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i];
    return s;
}

}  // namespace paat
