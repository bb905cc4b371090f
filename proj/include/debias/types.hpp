#pragma once

#include <cstddef>
#include <string>

#include <Eigen/Dense>

namespace debias {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Layout of a flat sample vector. 1D signals store their length in `cols`
/// with `rows == 1`; 2D images are row-major.
struct Shape {
  Index rows = 1;
  Index cols = 1;
  bool two_dimensional = false;

  static Shape line(Index n);
  static Shape grid(Index rows, Index cols);

  Index size() const { return rows * cols; }
  std::string describe() const;

  friend bool operator==(const Shape&, const Shape&) = default;
};

/// A flat real vector together with its shape descriptor.
class Signal {
 public:
  Signal() = default;
  Signal(Vector values, Shape shape);

  static Signal line(Vector values);
  static Signal grid(Vector values, Index rows, Index cols);
  static Signal zeros(Shape shape);

  const Vector& values() const { return values_; }
  Vector& values() { return values_; }
  const Shape& shape() const { return shape_; }
  Index size() const { return values_.size(); }

  double operator()(Index r, Index c) const { return values_[r * shape_.cols + c]; }

 private:
  Vector values_;
  Shape shape_;
};

}  // namespace debias
