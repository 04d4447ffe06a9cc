#include "pdmp/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "pdmp/engine.hpp"
#include "pdmp/error.hpp"
#include "thinning_window.hpp"

namespace pdmp {

namespace {

double bound_along(const PdmpModel& model, const HybridState& s, double window) {
  if (model.rate.kind == RateKind::bounded) return model.rate.segment_bound(s, window);
  return model.rate.rate(s);
}

double distance(const HybridState& a, const HybridState& b) {
  double d2 = 0.0;
  for (std::size_t j = 0; j < a.dim(); ++j) d2 += (a[j] - b[j]) * (a[j] - b[j]);
  return std::sqrt(d2) + (a.mode() != b.mode() ? 1.0 : 0.0);
}

// Shared driver for the two thinning-based couplings. `jump` receives the
// accepted flags and updates the pair in place.
template <class Jump>
CoupledRun drive_pair(const PdmpModel& model, HybridState x, HybridState y, std::span<const double> times,
                      RandomSource& rng, Jump&& jump) {
  require(!times.empty() && std::is_sorted(times.begin(), times.end()) && times.front() >= 0.0,
          "coupling times must be nonempty, sorted and nonnegative");
  model.check_state(x);
  model.check_state(y);
  const double horizon = times.back();
  CoupledRun run;
  run.distances.reserve(times.size());
  if (x == y) run.coalescence_time = 0.0;
  std::size_t next = 0;
  auto record = [&](double t0, double t1, bool final) {
    while (next < times.size() && (times[next] < t1 || (final && times[next] <= t1))) {
      const double dt = std::max(times[next] - t0, 0.0);
      run.distances.push_back(distance(advance_flow(model, x, dt), advance_flow(model, y, dt)));
      ++next;
    }
  };
  double t = 0.0;
  while (true) {
    const double remaining = horizon - t;
    if (remaining <= 0.0) {
      record(t, horizon, true);
      break;
    }
    const auto [window, bound] = detail::thinning_window(
        [&](double w) { return std::max(bound_along(model, x, w), bound_along(model, y, w)); }, remaining);
    if (!std::isfinite(bound) || bound < 0.0) fail(ErrorCode::bound_violation, "invalid coupling rate bound");
    const double proposal = bound > 0.0 ? rng.exponential() / bound : window;
    if (proposal >= window) {
      const bool final = window >= remaining;
      record(t, final ? horizon : t + window, final);
      x = advance_flow(model, x, window);
      y = advance_flow(model, y, window);
      t = final ? horizon : t + window;
      if (final) break;
      continue;
    }
    record(t, t + proposal, false);
    x = advance_flow(model, x, proposal);
    y = advance_flow(model, y, proposal);
    t += proposal;
    const double rx = model.rate.rate(x), ry = model.rate.rate(y);
    if (std::max(rx, ry) > bound * (1.0 + 1e-12))
      fail(ErrorCode::bound_violation, "jump rate exceeds the coupling bound in model " + model.name);
    jump(x, y, rx, ry, bound, run);
    if (!run.coalescence_time && x == y) run.coalescence_time = t;
  }
  run.first = x;
  run.second = y;
  run.coalesced = x == y;
  return run;
}

}  // namespace

CoupledRun couple_shared_noise(const ModelSpec& spec, double x, double y, std::span<const double> times,
                               RandomSource& rng) {
  const std::string tag = variant_tag(spec);
  if (tag != "storage" && tag != "tcp" && tag != "aimd")
    fail(ErrorCode::unsupported_model, "couple_shared_noise supports storage, tcp and aimd, not " + tag);
  const PdmpModel model = build_model(spec);
  return drive_pair(model, HybridState({x}), HybridState({y}), times, rng,
                    [&](HybridState& a, HybridState& b, double ra, double rb, double bound, CoupledRun& run) {
                      const double u = rng.uniform() * bound;
                      const bool ja = u <= ra, jb = u <= rb;
                      if (!ja && !jb) return;
                      // Both kernels read the same variates.
                      RandomSource for_a = rng, for_b = rng;
                      if (ja) a = model.kernel.sample(a, for_a);
                      if (jb) b = model.kernel.sample(b, for_b);
                      rng = ja ? for_a : for_b;
                      if (ja && jb) ++run.jump_count;
                    });
}

CoupledRun couple_switched(const ModelSpec& spec, const HybridState& x, const HybridState& y,
                           std::span<const double> times, RandomSource& rng) {
  const std::string tag = variant_tag(spec);
  if (tag != "dim1" && tag != "planar-rotation" && tag != "morris-lecar")
    fail(ErrorCode::unsupported_model, "couple_switched supports dim1, planar-rotation and morris-lecar, not " + tag);
  const PdmpModel model = build_model(spec);
  return drive_pair(model, x, y, times, rng,
                    [&](HybridState& a, HybridState& b, double ra, double rb, double bound, CoupledRun& run) {
                      const bool together = a.mode() == b.mode();
                      const double ua = rng.uniform();
                      const double ub = together ? ua : rng.uniform();
                      const bool ja = ua * bound <= ra, jb = ub * bound <= rb;
                      SwitchRates table;
                      if (together) {
                        const double v = rng.uniform();
                        if (ja) {
                          model.mode_rates(a, table);
                          a.set_mode(table.sample_target(v));
                        }
                        if (jb) {
                          model.mode_rates(b, table);
                          b.set_mode(table.sample_target(v));
                        }
                      } else {
                        if (ja) {
                          model.mode_rates(a, table);
                          a.set_mode(table.sample_target(rng.uniform()));
                        }
                        if (jb) {
                          model.mode_rates(b, table);
                          b.set_mode(table.sample_target(rng.uniform()));
                        }
                      }
                      if (ja || jb) ++run.jump_count;
                    });
}

CoupledRun couple_tv_storage(double x, double y, double t, double alpha, double beta, RandomSource& rng) {
  require(t > 0.0, "couple_tv_storage requires t > 0");
  validate(StorageParams{alpha, beta});
  std::vector<double> jumps;
  for (double s = rng.exponential() / alpha; s <= t; s += rng.exponential() / alpha) jumps.push_back(s);
  CoupledRun run;
  run.jump_count = jumps.size();
  double a = x, b = y, now = 0.0;
  for (std::size_t k = 0; k < jumps.size(); ++k) {
    const double decay = std::exp(-beta * (jumps[k] - now));
    a *= decay;
    b *= decay;
    now = jumps[k];
    if (k + 1 < jumps.size()) {
      const double e = rng.exponential();
      a += e;
      b += e;
      continue;
    }
    // Maximal coupling of a + Exp(1) and b + Exp(1): the lower copy is drawn
    // by inversion; above the higher start it is shared, below it the higher
    // copy reuses the same uniform rescaled onto its residual law.
    const bool a_high = a >= b;
    const double high = a_high ? a : b, low = a_high ? b : a;
    const double u = rng.uniform();
    const double z_low = low - std::log1p(-u);
    double z_high;
    if (z_low >= high) {
      z_high = z_low;
    } else {
      const double miss = -std::expm1(-(high - low));  // 1 - e^{-gap}
      z_high = high - std::log1p(-u / miss);
    }
    a = a_high ? z_high : z_low;
    b = a_high ? z_low : z_high;
    if (a == b) {
      run.coalesced = true;
      run.coalescence_time = now;
    }
  }
  const double decay = std::exp(-beta * (t - now));
  a *= decay;
  b = run.coalesced ? a : b * decay;
  run.first = HybridState({a});
  run.second = HybridState({b});
  run.distances.push_back(std::abs(a - b));
  return run;
}

CoupledRun couple_tv_tcp(double x, double y, double t, double lambda, RandomSource& rng) {
  require(t > 0.0, "couple_tv_tcp requires t > 0");
  validate(TcpParams{lambda});
  require(x >= 0.0 && y >= 0.0, "couple_tv_tcp requires x, y >= 0");
  std::vector<double> jumps;
  for (double s = rng.exponential() / lambda; s <= t; s += rng.exponential() / lambda) jumps.push_back(s);
  CoupledRun run;
  run.jump_count = jumps.size();
  if (jumps.empty()) {
    run.first = HybridState({x + t});
    run.second = HybridState({y + t});
    run.coalesced = x == y;
    if (run.coalesced) run.coalescence_time = 0.0;
    run.distances.push_back(std::abs(x - y));
    return run;
  }
  // Shared jumps up to the penultimate one.
  double a = x, b = y, now = 0.0;
  for (std::size_t k = 0; k + 1 < jumps.size(); ++k) {
    a = 0.5 * (a + jumps[k] - now);
    b = 0.5 * (b + jumps[k] - now);
    now = jumps[k];
  }
  // Given the penultimate time, the last jump of each copy is uniform on
  // (now, t). The copy from x is shifted by the current gap, modulo the
  // interval, which keeps it uniform; the paths meet unless it wraps.
  const double gap = a - b;
  const double last_b = jumps.back();
  const double width = t - now;
  double offset = std::fmod(last_b - now + gap, width);
  if (offset < 0.0) offset += width;
  const double last_a = now + offset;
  const bool aligned = std::abs(last_a - (last_b + gap)) <= 1e-12 * (1.0 + t);
  a = 0.5 * (a + last_a - now) + (t - last_a);
  b = 0.5 * (b + last_b - now) + (t - last_b);
  if (aligned) {
    run.coalesced = true;
    run.coalescence_time = std::max(last_a, last_b);
    b = a;
  }
  run.first = HybridState({a});
  run.second = HybridState({b});
  run.distances.push_back(std::abs(a - b));
  return run;
}

DistanceEstimate empirical_wasserstein(std::span<const double> a, std::span<const double> b, double p) {
  require(!a.empty() && !b.empty(), "empirical_wasserstein needs nonempty samples");
  require(p >= 1.0, "empirical_wasserstein requires p >= 1");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  // Integrate |F_a^{-1}(u) - F_b^{-1}(u)|^p over the merged quantile
  // breakpoints k/n and l/m; with n = m this is the order-statistics pairing.
  const auto n = sa.size(), m = sb.size();
  std::size_t i = 0, j = 0;
  double u = 0.0, total = 0.0, total_sq = 0.0;
  while (i < n && j < m) {
    const double next_a = static_cast<double>(i + 1) / static_cast<double>(n);
    const double next_b = static_cast<double>(j + 1) / static_cast<double>(m);
    const double next = std::min(next_a, next_b);
    const double term = std::pow(std::abs(sa[i] - sb[j]), p);
    const double weight = next - u;
    total += weight * term;
    total_sq += weight * term * term;
    u = next;
    if (next_a <= next) ++i;
    if (next_b <= next) ++j;
  }
  DistanceEstimate out;
  out.count = std::min(n, m);
  out.value = std::pow(total, 1.0 / p);
  const double var = std::max(total_sq - total * total, 0.0);
  const double se_mean = std::sqrt(var / static_cast<double>(out.count));
  out.se = total > 0.0 ? se_mean / p * std::pow(total, 1.0 / p - 1.0) : 0.0;
  return out;
}

DistanceEstimate empirical_tv(std::span<const double> a, std::span<const double> b, double bin_width) {
  require(bin_width > 0.0, "empirical_tv requires bin_width > 0");
  require(!a.empty() && !b.empty(), "empirical_tv needs nonempty samples");
  std::map<long long, std::pair<double, double>> bins;
  for (double v : a) bins[static_cast<long long>(std::floor(v / bin_width))].first += 1.0;
  for (double v : b) bins[static_cast<long long>(std::floor(v / bin_width))].second += 1.0;
  const auto na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  double tv = 0.0, var = 0.0;
  for (const auto& [k, counts] : bins) {
    const double pa = counts.first / na, pb = counts.second / nb;
    tv += std::abs(pa - pb);
    var += pa * (1.0 - pa) / na + pb * (1.0 - pb) / nb;
  }
  return {0.5 * tv, 0.5 * std::sqrt(var), std::min(a.size(), b.size())};
}

double default_tv_bin_width(std::span<const double> a, std::span<const double> b) {
  require(a.size() + b.size() >= 2, "default_tv_bin_width needs at least two samples");
  double sum = 0.0;
  for (double v : a) sum += v;
  for (double v : b) sum += v;
  const double n = static_cast<double>(a.size() + b.size());
  const double mean = sum / n;
  double ss = 0.0;
  for (double v : a) ss += (v - mean) * (v - mean);
  for (double v : b) ss += (v - mean) * (v - mean);
  const double width = 0.01 * std::sqrt(ss / (n - 1.0));
  require(width > 0.0, "samples have zero spread");
  return width;
}

double lyapunov_mc(double alpha, double r, double horizon, RandomSource& rng) {
  require(alpha > 0.0 && r > 0.0 && horizon > 0.0, "lyapunov_mc requires alpha, r, horizon > 0");
  // Unit direction (c, s) and mode. Mode 0 shears (c, s) -> (c + t s, s),
  // mode 1 shears (c, s) -> (c, s - t c); the damping only adds -alpha t.
  double c = 0.0, s = 1.0;
  std::size_t mode = 0;
  double log_norm = 0.0, t = 0.0;
  while (t < horizon) {
    const double dt = std::min(rng.exponential() / r, horizon - t);
    double nc = c, ns = s;
    if (mode == 0)
      nc += dt * s;
    else
      ns -= dt * c;
    const double len = std::hypot(nc, ns);
    log_norm += std::log(len);
    c = nc / len;
    s = ns / len;
    t += dt;
    mode = 1 - mode;
  }
  return log_norm / horizon - alpha;
}

}  // namespace pdmp
