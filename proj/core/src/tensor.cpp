#include "attribens/tensor.hpp"

#include <stdexcept>

namespace attribens {

std::size_t shape_numel(std::span<const std::size_t> shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) {
    if (d == 0) throw std::invalid_argument("tensor shape has zero dimension");
    n *= d;
  }
  return n;
}

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_numel(shape_), 0.0f) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_numel(shape_))
    throw std::invalid_argument("tensor data size does not match shape");
}

std::vector<double> to_doubles(const Tensor& t) {
  return std::vector<double>(t.data().begin(), t.data().end());
}

Tensor tensor_from_doubles(std::vector<std::size_t> shape, std::span<const double> values) {
  std::vector<float> f(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) f[i] = static_cast<float>(values[i]);
  return Tensor(std::move(shape), std::move(f));
}

Tensor gaussian_tensor(RngStream& s, std::vector<std::size_t> shape) {
  const std::size_t n = shape_numel(shape);
  std::vector<double> buf(n);
  fill_gaussian(s, buf.data(), n);
  return tensor_from_doubles(std::move(shape), buf);
}

}  // namespace attribens
