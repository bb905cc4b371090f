#include "debias/types.hpp"

#include <sstream>

#include "debias/errors.hpp"

namespace debias {

Shape Shape::line(Index n) {
  if (n < 1) throw InvalidDimension("1D shape needs length >= 1");
  return Shape{1, n, false};
}

Shape Shape::grid(Index rows, Index cols) {
  if (rows < 1 || cols < 1) throw InvalidDimension("2D shape needs rows, cols >= 1");
  return Shape{rows, cols, true};
}

std::string Shape::describe() const {
  std::ostringstream os;
  if (two_dimensional) {
    os << rows << "x" << cols;
  } else {
    os << cols;
  }
  return os.str();
}

Signal::Signal(Vector values, Shape shape) : values_(std::move(values)), shape_(shape) {
  if (values_.size() != shape_.size()) {
    throw InvalidDimension("signal length " + std::to_string(values_.size()) +
                           " does not match shape " + shape_.describe());
  }
  if (!values_.allFinite()) throw NonFiniteValue("signal has non-finite entries");
}

Signal Signal::line(Vector values) {
  const Index n = values.size();
  return Signal(std::move(values), Shape::line(n));
}

Signal Signal::grid(Vector values, Index rows, Index cols) {
  return Signal(std::move(values), Shape::grid(rows, cols));
}

Signal Signal::zeros(Shape shape) { return Signal(Vector::Zero(shape.size()), shape); }

}  // namespace debias
