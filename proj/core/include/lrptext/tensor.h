// SPDX-License-Identifier: Apache-2.0

#ifndef LRPTEXT_TENSOR_H_
#define LRPTEXT_TENSOR_H_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace lrptext {

// All computation runs in 64-bit floating point. Parameters are persisted as
// 32-bit reals by default (see serialize.h).
using Real = double;

using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
using RowVector = Eigen::Matrix<Real, 1, Eigen::Dynamic>;

using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;
using VectorMap = Eigen::Map<Vector>;
using ConstVectorMap = Eigen::Map<const Vector>;

// Per-position validity flags of a sequence: true = real token.
using Mask = std::vector<std::uint8_t>;

// A named, dense, row-major parameter tensor.
struct Tensor {
  std::string name;
  std::vector<int> shape;
  std::vector<Real> values;

  Tensor() = default;
  Tensor(std::string tensor_name, std::vector<int> tensor_shape)
      : name(std::move(tensor_name)), shape(std::move(tensor_shape)) {
    values.assign(NumElements(), 0.0);
  }

  std::size_t NumElements() const {
    std::size_t n = 1;
    for (int s : shape) n *= static_cast<std::size_t>(s);
    return n;
  }

  // Views the tensor as rows x cols where cols is the trailing dimension and
  // rows is the product of all leading dimensions.
  ConstMatrixMap AsMatrix() const {
    const int cols = shape.empty() ? 1 : shape.back();
    const int rows = cols == 0 ? 0 : static_cast<int>(NumElements()) / cols;
    return ConstMatrixMap(values.data(), rows, cols);
  }
  MatrixMap AsMatrix() {
    const int cols = shape.empty() ? 1 : shape.back();
    const int rows = cols == 0 ? 0 : static_cast<int>(NumElements()) / cols;
    return MatrixMap(values.data(), rows, cols);
  }
  ConstVectorMap AsVector() const {
    return ConstVectorMap(values.data(), static_cast<Eigen::Index>(values.size()));
  }
  VectorMap AsVector() {
    return VectorMap(values.data(), static_cast<Eigen::Index>(values.size()));
  }
};

inline int CountUnmasked(const Mask &mask) {
  int n = 0;
  for (auto m : mask) n += m ? 1 : 0;
  return n;
}

}  // namespace lrptext

#endif  // LRPTEXT_TENSOR_H_
