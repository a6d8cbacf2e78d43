#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace dnf {

struct Tensor {
  std::vector<std::uint64_t> shape;
  Eigen::ArrayXf data;

  Tensor() = default;
  Tensor(std::vector<std::uint64_t> s, Eigen::ArrayXf d) : shape(std::move(s)), data(std::move(d)) {}

  /// Product of dims; 1 for a scalar (empty shape).
  std::uint64_t numel() const;
  bool consistent() const { return numel() == static_cast<std::uint64_t>(data.size()); }
};

/// Bitwise equality, so NaN payloads and signed zeros count.
bool bit_equal(const Tensor& a, const Tensor& b);

using NamedTensorSet = std::map<std::string, Tensor>;

bool bit_equal(const NamedTensorSet& a, const NamedTensorSet& b);

/// Throws MissingTensor when names differ and ShapeMismatch when shapes do.
void check_compatible(const NamedTensorSet& a, const NamedTensorSet& b);

}  // namespace dnf
