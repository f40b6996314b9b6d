#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace spanemo {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// A trainable tensor with its accumulated gradient. Vectors are stored as
/// 1×n matrices so every parameter serializes the same way.
struct Param {
  std::string name;
  Matrix value;
  Matrix grad;

  Param() = default;
  Param(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(); }
};

using ParamList = std::vector<Param*>;

}  // namespace spanemo
