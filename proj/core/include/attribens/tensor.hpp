#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "attribens/rng.hpp"

namespace attribens {

// Dense tensor, float32 storage. Arithmetic throughout the library promotes to
// double and reduces in double; float32 is the storage/interchange width.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::vector<std::size_t> shape, std::vector<float> data);

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t numel() const noexcept { return data_.size(); }
  bool same_shape(const Tensor& o) const noexcept { return shape_ == o.shape_; }

  std::span<const float> data() const noexcept { return data_; }
  std::span<float> data() noexcept { return data_; }
  float operator[](std::size_t i) const noexcept { return data_[i]; }
  float& operator[](std::size_t i) noexcept { return data_[i]; }

 private:
  std::vector<std::size_t> shape_;
  std::vector<float> data_;
};

std::size_t shape_numel(std::span<const std::size_t> shape);

std::vector<double> to_doubles(const Tensor& t);
Tensor tensor_from_doubles(std::vector<std::size_t> shape, std::span<const double> values);

// Standard-normal tensor; advances the stream by gaussian_blocks(numel).
Tensor gaussian_tensor(RngStream& s, std::vector<std::size_t> shape);

}  // namespace attribens
