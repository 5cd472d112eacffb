#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace migdir {

/// Dense n-dimensional real array, row-major (last dimension fastest).
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;

  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(static_cast<std::size_t>(numel(shape)), 0.0);
  }

  static std::int64_t numel(const std::vector<int>& s) {
    std::int64_t n = 1;
    for (int d : s) {
      if (d <= 0) throw std::invalid_argument("Tensor: non-positive dim");
      n *= d;
    }
    return n;
  }

  std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }
};

inline std::string shape_string(const std::vector<int>& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

}  // namespace migdir
