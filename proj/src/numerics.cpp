#include "revgen/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace revgen {

namespace {

std::string vec_shape(const Vector& v) { return "[" + std::to_string(v.size()) + "]"; }

void require_same_length(const Vector& a, const Vector& b, const char* op) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(op) + ": length mismatch " + vec_shape(a) + " vs " +
                         vec_shape(b));
  }
}

}  // namespace

void Vector::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (data_.size() != rows * cols) {
    throw DimensionError("Matrix: " + std::to_string(data_.size()) +
                         " values do not fill " + shape_string());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

std::string Matrix::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

std::uint64_t Rng::next() {
  state_ += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::size_t Rng::below(std::size_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below: empty range");
  return static_cast<std::size_t>(next() % n);
}

Vector matvec(const Matrix& m, const Vector& v) {
  Vector out(m.rows());
  matvec_acc(m, v, out);
  return out;
}

void matvec_acc(const Matrix& m, const Vector& v, Vector& out) {
  if (m.cols() != v.size() || out.size() != m.rows()) {
    throw DimensionError("matvec: matrix " + m.shape_string() + " vs vector " + vec_shape(v));
  }
  for (std::size_t i = 0; i < m.rows(); ++i) {
    out[i] += dot(m.row(i), v.values());
  }
}

void matvec_transposed_acc(const Matrix& m, const Vector& v, Vector& out) {
  if (m.rows() != v.size() || out.size() != m.cols()) {
    throw DimensionError("matvec_transposed: matrix " + m.shape_string() + " vs vector " +
                         vec_shape(v));
  }
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (v[i] != 0.0) axpy(v[i], m.row(i), out.values());
  }
}

void add_outer(Matrix& m, const Vector& a, const Vector& b, double scale) {
  if (m.rows() != a.size() || m.cols() != b.size()) {
    throw DimensionError("add_outer: matrix " + m.shape_string() + " vs " + vec_shape(a) +
                         " x " + vec_shape(b));
  }
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double s = scale * a[i];
    if (s != 0.0) axpy(s, b.values(), m.row(i));
  }
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vector sigmoid(const Vector& v) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = sigmoid(v[i]);
  return out;
}

Vector tanh(const Vector& v) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::tanh(v[i]);
  return out;
}

Vector hadamard(const Vector& a, const Vector& b) {
  require_same_length(a, b, "hadamard");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

Vector add(const Vector& a, const Vector& b) {
  require_same_length(a, b, "add");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Vector concat(const Vector& a, const Vector& b) {
  std::vector<double> out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.values().begin(), a.values().end());
  out.insert(out.end(), b.values().begin(), b.values().end());
  return Vector(std::move(out));
}

Vector softmax(const Vector& v) {
  if (v.empty()) throw DimensionError("softmax: empty vector");
  const double mx = *std::max_element(v.values().begin(), v.values().end());
  Vector out(v.size());
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - mx);
    total += out[i];
  }
  for (std::size_t i = 0; i < v.size(); ++i) out[i] /= total;
  return out;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw DimensionError("axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(std::span<const double> v) { return dot(v, v); }

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

Matrix init_matrix(std::size_t rows, std::size_t cols, double scale, Rng& rng) {
  if (rows == 0 || cols == 0) {
    throw DimensionError("init_matrix: non-positive shape " + std::to_string(rows) + "x" +
                         std::to_string(cols));
  }
  if (!(scale > 0.0)) throw std::invalid_argument("init_matrix: scale must be positive");
  Matrix m(rows, cols);
  for (double& x : m.values()) x = rng.uniform(-scale, scale);
  return m;
}

Vector init_vector(std::size_t n, double scale, Rng& rng) {
  if (n == 0) throw DimensionError("init_vector: empty");
  Vector v(n);
  for (double& x : v.values()) x = rng.uniform(-scale, scale);
  return v;
}

}  // namespace revgen
