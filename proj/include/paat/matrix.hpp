#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "paat/error.hpp"

namespace paat {

// Dense row-major matrix of 64-bit reals. Values are immutable by
// convention once an operation has produced them; kernels write into
// freshly allocated storage.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix zeros(std::size_t rows, std::size_t cols) { return Matrix(rows, cols); }
    static Matrix identity(std::size_t n);
    static Matrix colVec(const std::vector<double>& v);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* rowPtr(std::size_t r) { return data_.data() + r * cols_; }
    const double* rowPtr(std::size_t r) const { return data_.data() + r * cols_; }

    bool sameShape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }
    std::string shapeStr() const;
    bool allFinite() const;

    void fill(double v) { data_.assign(data_.size(), v); }

    bool operator==(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Max over |a-b| entrywise; shapes must agree.
double maxAbsDiff(const Matrix& a, const Matrix& b);

void requireShape(bool ok, const std::string& what, const Matrix& a, const Matrix& b);

}  // namespace paat
