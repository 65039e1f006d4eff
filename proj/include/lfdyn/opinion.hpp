#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <string_view>
#include <vector>

namespace lfdyn {

using Index = std::uint32_t;
using Opinion = std::vector<double>;
using OpinionView = std::span<const double>;

enum class Norm { euclidean, chebyshev };

inline std::string_view to_string(Norm norm) {
  return norm == Norm::euclidean ? "euclidean" : "chebyshev";
}

/// Coordinates are visited in ascending order, so the result is a pure
/// function of the bit patterns of both arguments.
inline double distance(OpinionView a, OpinionView b, Norm norm) {
  double acc = 0.0;
  if (norm == Norm::euclidean) {
    for (std::size_t c = 0; c < a.size(); ++c) {
      const double diff = a[c] - b[c];
      acc += diff * diff;
    }
    return std::sqrt(acc);
  }
  for (std::size_t c = 0; c < a.size(); ++c) acc = std::max(acc, std::abs(a[c] - b[c]));
  return acc;
}

inline bool all_finite(OpinionView x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

/// Row-major agents x dim block; row i is the opinion of agent i.
class OpinionMatrix {
 public:
  OpinionMatrix() = default;
  OpinionMatrix(std::size_t agents, std::size_t dim, double fill = 0.0)
      : agents_(agents), dim_(dim), data_(agents * dim, fill) {}

  static OpinionMatrix from_rows(const std::vector<Opinion>& rows) {
    const std::size_t dim = rows.empty() ? 0 : rows.front().size();
    OpinionMatrix m(rows.size(), dim);
    for (std::size_t i = 0; i < rows.size(); ++i)
      std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
    return m;
  }

  std::size_t agents() const noexcept { return agents_; }
  std::size_t dim() const noexcept { return dim_; }

  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * dim_, dim_}; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * dim_, dim_};
  }

  const std::vector<double>& data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  bool operator==(const OpinionMatrix&) const = default;

 private:
  std::size_t agents_{0};
  std::size_t dim_{0};
  std::vector<double> data_;
};

/// Equality of the underlying bit patterns (distinguishes -0.0 from 0.0).
inline bool bitwise_equal(const OpinionMatrix& a, const OpinionMatrix& b) {
  return a.agents() == b.agents() && a.dim() == b.dim() &&
         std::memcmp(a.data().data(), b.data().data(), a.data().size() * sizeof(double)) == 0;
}

}  // namespace lfdyn
