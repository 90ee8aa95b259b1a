#pragma once

#include <Eigen/Dense>

#include <initializer_list>
#include <numeric>
#include <vector>

#include "eaaw/error.hpp"

namespace eaaw {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Dense tensor of 64-bit reals, row-major.
struct Tensor {
  std::vector<int> shape;
  Vec values;

  Tensor() = default;

  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    values = Vec::Zero(shape_size(shape));
  }

  Tensor(std::vector<int> s, Vec v) : shape(std::move(s)), values(std::move(v)) {
    if (values.size() != shape_size(shape))
      throw DimensionError("tensor values do not match shape");
  }

  static long shape_size(const std::vector<int>& s) {
    long n = 1;
    for (int d : s) n *= d;
    return n;
  }

  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }

  static Tensor vector(std::initializer_list<double> xs) {
    Tensor t({static_cast<int>(xs.size())});
    int i = 0;
    for (double x : xs) t.values[i++] = x;
    return t;
  }

  static Tensor from_vec(Vec v) {
    std::vector<int> s{static_cast<int>(v.size())};
    return Tensor(std::move(s), std::move(v));
  }

  long size() const { return values.size(); }
  int rows() const { return shape.at(0); }
  int cols() const { return shape.at(1); }

  double& operator[](long i) { return values[i]; }
  double operator[](long i) const { return values[i]; }

  // 2-D view (row-major).
  Eigen::Map<const RowMat> matrix() const {
    if (shape.size() != 2) throw DimensionError("matrix view requires 2-D tensor");
    return Eigen::Map<const RowMat>(values.data(), shape[0], shape[1]);
  }
  Eigen::Map<RowMat> matrix() {
    if (shape.size() != 2) throw DimensionError("matrix view requires 2-D tensor");
    return Eigen::Map<RowMat>(values.data(), shape[0], shape[1]);
  }

  bool all_finite() const { return values.allFinite(); }
};

}  // namespace eaaw
