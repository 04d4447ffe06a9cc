#include "pdmp/state.hpp"

#include <algorithm>
#include <cmath>

#include "pdmp/error.hpp"

namespace pdmp {

HybridState::HybridState(std::initializer_list<double> x, std::size_t mode)
    : HybridState(std::span<const double>(x.begin(), x.size()), mode) {}

HybridState::HybridState(std::span<const double> x, std::size_t mode) : dim_(x.size()), mode_(mode) {
  require(x.size() <= kMaxDim, "state dimension exceeds kMaxDim");
  std::copy(x.begin(), x.end(), x_.begin());
}

double HybridState::norm() const noexcept {
  double s = 0.0;
  for (std::size_t k = 0; k < dim_; ++k) s += x_[k] * x_[k];
  return std::sqrt(s);
}

double HybridState::max_abs() const noexcept {
  double m = 0.0;
  for (std::size_t k = 0; k < dim_; ++k) m = std::max(m, std::abs(x_[k]));
  return m;
}

bool HybridState::finite() const noexcept {
  for (std::size_t k = 0; k < dim_; ++k)
    if (!std::isfinite(x_[k])) return false;
  return true;
}

bool operator==(const HybridState& a, const HybridState& b) noexcept {
  if (a.dim_ != b.dim_ || a.mode_ != b.mode_) return false;
  for (std::size_t k = 0; k < a.dim_; ++k)
    if (a.x_[k] != b.x_[k]) return false;
  return true;
}

}  // namespace pdmp
