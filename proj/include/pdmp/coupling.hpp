#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "pdmp/models.hpp"
#include "pdmp/random.hpp"
#include "pdmp/state.hpp"

namespace pdmp {

struct CoupledRun {
  HybridState first;   // terminal state of the copy started at x
  HybridState second;  // terminal state of the copy started at y
  bool coalesced = false;
  std::optional<double> coalescence_time;
  std::vector<double> distances;  // one per requested time
  std::size_t jump_count = 0;     // jumps of the driving process up to the horizon
};

struct DistanceEstimate {
  double value = 0.0;
  double se = 0.0;
  std::size_t count = 0;
};

/// Both copies driven by the same jump times and jump variables. Supported
/// for storage, tcp and aimd; records |X_s - Y_s| at each requested time (the
/// last one is the horizon). State-dependent rates use common thinning.
CoupledRun couple_shared_noise(const ModelSpec& spec, double x, double y, std::span<const double> times,
                               RandomSource& rng);

/// Shared jump times and increments; the last increment uses the maximal
/// coupling of the two shifted Exp(1) laws. `coalesced` is set when that
/// coupling succeeds, so it requires at least one jump.
CoupledRun couple_tv_storage(double x, double y, double t, double alpha, double beta, RandomSource& rng);

/// Shared jump times up to the penultimate one; the final jump times are
/// aligned so that the paths meet. With no jump the copies coalesce only if
/// x = y.
CoupledRun couple_tv_tcp(double x, double y, double t, double lambda, RandomSource& rng);

/// Mode-switching coupling for dim1, planar-rotation and morris-lecar:
/// synchronous thinning with shared uniforms while the modes agree,
/// independent variates while they differ. Distances are |X - Y| + 1{I != J}.
CoupledRun couple_switched(const ModelSpec& spec, const HybridState& x, const HybridState& y,
                           std::span<const double> times, RandomSource& rng);

/// Exact W_p between the empirical measures of two 1-D samples.
DistanceEstimate empirical_wasserstein(std::span<const double> a, std::span<const double> b, double p);

/// Half the L1 distance between histogram densities on bins [k w, (k+1) w).
DistanceEstimate empirical_tv(std::span<const double> a, std::span<const double> b, double bin_width);

/// 0.01 times the pooled sample standard deviation.
double default_tv_bin_width(std::span<const double> a, std::span<const double> b);

/// (1/t) log |X_t| for the switched-linear system, following only the
/// direction of X so that no overflow can occur.
double lyapunov_mc(double alpha, double r, double horizon, RandomSource& rng);

}  // namespace pdmp
