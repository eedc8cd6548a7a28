#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace fslstm {

using Vector = std::vector<double>;

// Dense row-major matrix of 64-bit reals.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // rows * cols, row-major

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  Vector row(std::size_t r) const {
    return Vector(data.begin() + static_cast<std::ptrdiff_t>(r * cols),
                  data.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols));
  }

  bool operator==(const Matrix& o) const {
    return rows == o.rows && cols == o.cols && data == o.data;
  }
};

Matrix matmul(const Matrix& a, const Matrix& b);
Vector matvec(const Matrix& a, const Vector& x);

// y += A^T x  (transpose product accumulate, used by backward passes)
void add_tmatvec(const Matrix& a, const Vector& x, Vector& y);
// A += x y^T  (outer product accumulate)
void add_outer(Matrix& a, const Vector& x, const Vector& y);

Vector sigmoid(const Vector& v);
Vector tanh_v(const Vector& v);
Vector relu(const Vector& v);
// max-shifted exponent normalization; output sums to 1
Vector softmax(const Vector& v);
Vector hadamard(const Vector& a, const Vector& b);

Vector add(const Vector& a, const Vector& b);
Vector sub(const Vector& a, const Vector& b);
void add_in_place(Vector& a, const Vector& b);

double sigmoid_scalar(double x);

[[noreturn]] void dim_error(const std::string& message);

}  // namespace fslstm
