#pragma once

#include <algorithm>
#include <utility>

namespace pdmp::detail {

// Lookahead window for thinning: start near one expected proposal at the
// local rate and halve until the window bound allows at most two.
// bound_over(w) bounds the rate over the next w time units.
template <class BoundOver>
std::pair<double, double> thinning_window(BoundOver&& bound_over, double remaining) {
  double window = remaining;
  if (const double local = bound_over(0.0); local > 0.0) window = std::min(window, 1.0 / local);
  double bound = bound_over(window);
  while (bound * window > 2.0) {
    window *= 0.5;
    bound = bound_over(window);
  }
  return {window, bound};
}

}  // namespace pdmp::detail
