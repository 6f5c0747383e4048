#ifndef INSIDER_NUMERICS_H_
#define INSIDER_NUMERICS_H_

// Dense kernels and activations shared by the neural layers. Everything is
// templated on the scalar type through Eigen expressions; the pipeline itself
// instantiates double.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "insider/error.h"

namespace insider {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Column-major work arrays for batched computation: one column per window.
template <typename Scalar>
using BatchMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

inline std::string shape_string(Eigen::Index rows, Eigen::Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

template <typename DerivedW, typename DerivedX>
Vector<typename DerivedW::Scalar> matvec(const Eigen::MatrixBase<DerivedW>& w,
                                         const Eigen::MatrixBase<DerivedX>& x) {
  if (x.cols() != 1 || w.cols() != x.rows()) {
    throw DimensionError("matvec: matrix " + shape_string(w.rows(), w.cols()) +
                         " cannot multiply vector " + shape_string(x.rows(), x.cols()));
  }
  return w * x;
}

// Both activations are written over exp() so Eigen can vectorize them; the
// scalar std::tanh path is several times slower and dominates training.
template <typename Derived>
auto sigmoid(const Eigen::MatrixBase<Derived>& z) {
  using Scalar = typename Derived::Scalar;
  // exp(-z) overflowing to inf gives 0, which the floor lifts to the
  // smallest normal so the result stays strictly positive.
  return (Scalar(1) + (-z.array()).exp())
      .inverse()
      .cwiseMax(std::numeric_limits<Scalar>::min())
      .matrix();
}

template <typename Derived>
auto tanh_act(const Eigen::MatrixBase<Derived>& z) {
  using Scalar = typename Derived::Scalar;
  // Evaluated on |z| and mirrored, so tanh(-z) == -tanh(z) exactly.
  using Plain = typename Derived::PlainObject;
  const Plain zv = z;
  const Plain m =
      (Scalar(1) - Scalar(2) / ((Scalar(2) * zv.array().abs()).exp() + Scalar(1))).matrix();
  return Plain((zv.array() < Scalar(0)).select(-m.array(), m.array()).matrix());
}

template <typename Derived>
auto relu(const Eigen::MatrixBase<Derived>& z) {
  return z.cwiseMax(typename Derived::Scalar(0));
}

// Column-wise softmax: each column of the result is a probability vector.
// Shifting by the column maximum avoids overflow; entries are floored at the
// smallest normal value so every probability stays strictly positive.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> softmax(
    const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  if (logits.rows() < 1) throw DimensionError("softmax: empty logit vector");
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(logits.rows(), logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const Scalar peak = logits.col(c).maxCoeff();
    out.col(c) = (logits.col(c).array() - peak).exp().matrix();
    out.col(c) /= out.col(c).sum();
    out.col(c) = out.col(c).cwiseMax(std::numeric_limits<Scalar>::min());
  }
  return out;
}

enum class ElementwiseOp { kAdd, kMul };

template <typename DerivedA, typename DerivedB>
Vector<typename DerivedA::Scalar> elementwise(const Eigen::MatrixBase<DerivedA>& a,
                                              const Eigen::MatrixBase<DerivedB>& b,
                                              ElementwiseOp op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("elementwise: shapes " + shape_string(a.rows(), a.cols()) + " and " +
                         shape_string(b.rows(), b.cols()) + " differ");
  }
  if (op == ElementwiseOp::kAdd) return a + b;
  return a.cwiseProduct(b);
}

template <typename DerivedA, typename DerivedB>
Vector<typename DerivedA::Scalar> concat(const Eigen::MatrixBase<DerivedA>& a,
                                         const Eigen::MatrixBase<DerivedB>& b) {
  Vector<typename DerivedA::Scalar> out(a.size() + b.size());
  out << a, b;
  return out;
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.allFinite();
}

}  // namespace insider

#endif  // INSIDER_NUMERICS_H_
