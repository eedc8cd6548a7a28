#include "tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace fslstm {

void dim_error(const std::string& message) { throw std::invalid_argument(message); }

namespace {

std::string shape_str(const Matrix& m) {
  std::ostringstream os;
  os << m.rows << "x" << m.cols;
  return os.str();
}

void require_len(const Vector& a, const Vector& b, const char* op) {
  if (a.size() != b.size()) {
    std::ostringstream os;
    os << op << ": length mismatch, lhs has " << a.size() << " entries, rhs has "
       << b.size();
    dim_error(os.str());
  }
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) {
    dim_error("matmul: incompatible shapes, lhs is " + shape_str(a) + ", rhs is " +
              shape_str(b));
  }
  Matrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = a.data.data() + i * a.cols;
    double* orow = out.data.data() + i * b.cols;
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      const double* brow = b.data.data() + k * b.cols;
      for (std::size_t j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

Vector matvec(const Matrix& a, const Vector& x) {
  if (a.cols != x.size()) {
    std::ostringstream os;
    os << "matvec: matrix is " << shape_str(a) << ", vector has " << x.size()
       << " entries";
    dim_error(os.str());
  }
  Vector y(a.rows, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = a.data.data() + i * a.cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < a.cols; ++j) acc += arow[j] * x[j];
    y[i] = acc;
  }
  return y;
}

void add_tmatvec(const Matrix& a, const Vector& x, Vector& y) {
  if (a.rows != x.size() || a.cols != y.size()) {
    std::ostringstream os;
    os << "add_tmatvec: matrix is " << shape_str(a) << ", x has " << x.size()
       << " entries, y has " << y.size();
    dim_error(os.str());
  }
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double xi = x[i];
    const double* arow = a.data.data() + i * a.cols;
    for (std::size_t j = 0; j < a.cols; ++j) y[j] += arow[j] * xi;
  }
}

void add_outer(Matrix& a, const Vector& x, const Vector& y) {
  if (a.rows != x.size() || a.cols != y.size()) {
    std::ostringstream os;
    os << "add_outer: matrix is " << shape_str(a) << ", x has " << x.size()
       << " entries, y has " << y.size();
    dim_error(os.str());
  }
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double xi = x[i];
    double* arow = a.data.data() + i * a.cols;
    for (std::size_t j = 0; j < a.cols; ++j) arow[j] += xi * y[j];
  }
}

double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vector sigmoid(const Vector& v) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = sigmoid_scalar(v[i]);
  return out;
}

Vector tanh_v(const Vector& v) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::tanh(v[i]);
  return out;
}

Vector relu(const Vector& v) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] > 0.0 ? v[i] : 0.0;
  return out;
}

Vector softmax(const Vector& v) {
  if (v.empty()) dim_error("softmax: empty input");
  const double m = *std::max_element(v.begin(), v.end());
  Vector out(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - m);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return out;
}

Vector hadamard(const Vector& a, const Vector& b) {
  require_len(a, b, "hadamard");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

Vector add(const Vector& a, const Vector& b) {
  require_len(a, b, "add");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Vector sub(const Vector& a, const Vector& b) {
  require_len(a, b, "sub");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

void add_in_place(Vector& a, const Vector& b) {
  require_len(a, b, "add_in_place");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

}  // namespace fslstm
