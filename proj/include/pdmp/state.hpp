#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>

namespace pdmp {

/// Largest continuous dimension supported by the engine.
inline constexpr std::size_t kMaxDim = 4;

/// PDMP state (x, i): a position in R^d and a discrete mode index.
class HybridState {
 public:
  HybridState() = default;
  HybridState(std::initializer_list<double> x, std::size_t mode = 0);
  HybridState(std::span<const double> x, std::size_t mode);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t mode() const noexcept { return mode_; }
  void set_mode(std::size_t mode) noexcept { mode_ = mode; }

  double& operator[](std::size_t k) noexcept { return x_[k]; }
  double operator[](std::size_t k) const noexcept { return x_[k]; }

  std::span<double> position() noexcept { return {x_.data(), dim_}; }
  std::span<const double> position() const noexcept { return {x_.data(), dim_}; }

  double norm() const noexcept;
  double max_abs() const noexcept;
  bool finite() const noexcept;

  friend bool operator==(const HybridState& a, const HybridState& b) noexcept;

 private:
  std::array<double, kMaxDim> x_{};
  std::size_t dim_ = 0;
  std::size_t mode_ = 0;
};

}  // namespace pdmp
