#ifndef REVGEN_NUMERICS_HPP_
#define REVGEN_NUMERICS_HPP_

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "revgen/errors.hpp"

namespace revgen {

/// Dense vector of doubles.
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t n, double fill = 0.0) : data_(n, fill) {}
  Vector(std::initializer_list<double> values) : data_(values) {}
  explicit Vector(std::vector<double> values) : data_(std::move(values)) {}

  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  const std::vector<double>& std_vector() const { return data_; }

  void fill(double v);
  bool operator==(const Vector& other) const = default;

 private:
  std::vector<double> data_;
};

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  void fill(double v);
  std::string shape_string() const;
  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// SplitMix64 generator. The stream depends only on the seed:
///   state += 0x9E3779B97F4A7C15
///   z = state; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB; return z ^ (z >> 31)
/// uniform() maps the top 53 bits of a draw to [0, 1).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t next();
  double uniform();
  /// Uniform on [lo, hi].
  double uniform(double lo, double hi);
  /// Uniform integer on [0, n).
  std::size_t below(std::size_t n);

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

inline constexpr double kDefaultInitScale = 0.08;

Vector matvec(const Matrix& m, const Vector& v);
/// out += m^T * v
void matvec_transposed_acc(const Matrix& m, const Vector& v, Vector& out);
/// m += scale * a b^T
void add_outer(Matrix& m, const Vector& a, const Vector& b, double scale = 1.0);
/// out += m * v
void matvec_acc(const Matrix& m, const Vector& v, Vector& out);

Vector sigmoid(const Vector& v);
Vector tanh(const Vector& v);
Vector hadamard(const Vector& a, const Vector& b);
Vector add(const Vector& a, const Vector& b);
Vector concat(const Vector& a, const Vector& b);
Vector softmax(const Vector& v);
double sigmoid(double x);

/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> v);
bool all_finite(std::span<const double> v);

Matrix init_matrix(std::size_t rows, std::size_t cols, double scale, Rng& rng);
Vector init_vector(std::size_t n, double scale, Rng& rng);

}  // namespace revgen

#endif  // REVGEN_NUMERICS_HPP_
