#include "paat/matrix.hpp"

#include <cmath>
#include <sstream>

namespace paat {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw ShapeError("matrix data length " + std::to_string(data_.size()) +
                         " does not match " + std::to_string(rows_) + "x" + std::to_string(cols_));
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw ShapeError("ragged initializer rows");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

Matrix Matrix::colVec(const std::vector<double>& v) {
    Matrix m(v.size(), 1, v);
    return m;
}

std::string Matrix::shapeStr() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

bool Matrix::allFinite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

double maxAbsDiff(const Matrix& a, const Matrix& b) {
    requireShape(a.sameShape(b), "maxAbsDiff", a, b);
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

void requireShape(bool ok, const std::string& what, const Matrix& a, const Matrix& b) {
    if (!ok) {
        throw ShapeError(what + ": incompatible shapes " + a.shapeStr() + " and " + b.shapeStr());
    }
}

}  // namespace paat
