#include <algorithm>
#include <cmath>
#include <limits>

#include "experiment_internal.hpp"
#include "parallel.hpp"
#include "pdmp/engine.hpp"
#include "pdmp/error.hpp"
#include "pdmp/oracles.hpp"
#include "pdmp/stats.hpp"
#include "text_util.hpp"

namespace pdmp::detail {

namespace {

std::vector<SampledPath> sample_paths(const RunContext& ctx, const PdmpModel& model, const HybridState& init,
                                      const std::vector<double>& times, std::uint64_t block) {
  const auto& c = ctx.config;
  return parallel_map(c.samples, ctx.workers, [&](std::size_t k) {
    RandomSource rng(c.seed, stream_index(block, k));
    return simulate_sampled(model, init, times, rng);
  });
}

std::vector<HybridState> terminal_states(const RunContext& ctx, const PdmpModel& model, const HybridState& init,
                                         double horizon, std::uint64_t block) {
  const auto& c = ctx.config;
  return parallel_map(c.samples, ctx.workers, [&](std::size_t k) {
    RandomSource rng(c.seed, stream_index(block, k));
    const RunSummary s = run_to(model, init, horizon, rng);
    if (s.outcome == Outcome::exploded) fail(ErrorCode::numerical_overflow, "trajectory exploded");
    return s.terminal;
  });
}

// Histogram of `values` on [lo, hi) against a density, as CSV rows.
std::string histogram_csv(int mode, const std::vector<double>& values, double lo, double hi, std::size_t bins,
                          double total, const std::function<double(double)>& density) {
  std::vector<double> counts(bins, 0.0);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (double v : values) {
    const auto k = static_cast<long long>(std::floor((v - lo) / width));
    if (k >= 0 && k < static_cast<long long>(bins)) counts[static_cast<std::size_t>(k)] += 1.0;
  }
  std::string out;
  for (std::size_t k = 0; k < bins; ++k) {
    const double a = lo + width * static_cast<double>(k), b = a + width;
    out += csv_line({static_cast<double>(mode), a, b, counts[k] / (total * width), density(0.5 * (a + b))});
  }
  return out;
}

}  // namespace

void run_simulate(RunContext& ctx) {
  const auto& c = ctx.config;
  const PdmpModel model = build_model(*c.model);
  const HybridState init(std::span<const double>(c.x0), c.mode0);
  const auto paths = sample_paths(ctx, model, init, c.times, 0);
  const std::string tag = variant_tag(*c.model);

  std::size_t exploded = 0;
  for (const auto& p : paths) exploded += p.outcome == Outcome::exploded;
  ctx.rows.push_back(info_row("exploded trajectories", static_cast<double>(exploded)));

  std::string csv = "t,coordinate,mean,se,count\n";
  for (std::size_t ti = 0; ti < c.times.size(); ++ti) {
    const double t = c.times[ti];
    for (std::size_t j = 0; j < model.dim; ++j) {
      std::vector<double> values;
      for (const auto& p : paths)
        if (p.states.size() > ti) values.push_back(p.states[ti][j]);
      if (values.empty()) continue;
      const MeanEstimate m = mean_estimate(values);
      csv += csv_line({t, static_cast<double>(j), m.mean, m.se, static_cast<double>(m.count)});
      const std::string name = "mean x" + std::to_string(j) + " at t=" + label(t);
      if (tag == "storage") {
        const auto& p = std::get<StorageParams>(*c.model);
        ctx.rows.push_back(check_within_se(name, m, storage_mean(c.x0[0], t, p.alpha, p.beta), "storage mean formula"));
      } else if (tag == "tcp") {
        const auto& p = std::get<TcpParams>(*c.model);
        ctx.rows.push_back(check_within_se(name, m, tcp_moment(1, c.x0[0], t, p.lambda), "tcp moment formula"));
      } else {
        ctx.rows.push_back(info_row(name, m.mean, m.se));
      }
    }
    if (model.mode_count > 1 && model.mode_count <= 4) {
      for (std::size_t i = 0; i < model.mode_count; ++i) {
        std::size_t hits = 0, n = 0;
        for (const auto& p : paths)
          if (p.states.size() > ti) {
            ++n;
            hits += p.states[ti].mode() == i;
          }
        if (n == 0) continue;
        const MeanEstimate f = frequency_estimate(hits, n);
        ctx.rows.push_back(info_row("P(mode=" + std::to_string(i) + ") at t=" + label(t), f.mean, f.se));
      }
    }
  }
  ctx.files.push_back({".csv", csv});

  if (tag == "switched-linear") {
    const auto& p = std::get<SwitchedLinearParams>(*c.model);
    std::vector<double> rates;
    for (const auto& path : paths) {
      if (path.outcome == Outcome::exploded) {
        rates.push_back(std::log(kExplosionThreshold) / path.end_time);
        continue;
      }
      rates.push_back(std::log(path.states.back().norm()) / c.times.back());
    }
    const MeanEstimate m = mean_estimate(rates);
    const double l = lyapunov_quadrature(p.alpha, p.r).l_value;
    ReportRow row = info_row("sign of (1/t) log|X_t| vs quadrature exponent", m.mean, m.se,
                             "explosions count as positive growth");
    row.oracle = l;
    row.verdict = (m.mean > 0.0) == (l > 0.0) ? Verdict::pass : Verdict::fail;
    ctx.rows.push_back(row);
  }
}

void run_moments(RunContext& ctx) {
  const auto& c = ctx.config;
  const PdmpModel model = build_model(*c.model);
  const std::string tag = variant_tag(*c.model);
  std::vector<double> times = c.times;
  if (c.stationary_time) times.push_back(*c.stationary_time);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  std::vector<double> orders = c.orders.empty() ? std::vector<double>{1.0} : c.orders;

  auto oracle = [&](int n, double x, double t) {
    if (tag == "storage") {
      const auto& p = std::get<StorageParams>(*c.model);
      return storage_mean(x, t, p.alpha, p.beta);
    }
    return tcp_moment(n, x, t, std::get<TcpParams>(*c.model).lambda);
  };
  auto stationary = [&](int n) {
    if (tag == "storage") {
      const auto& p = std::get<StorageParams>(*c.model);
      return p.alpha / p.beta;
    }
    return tcp_invariant_moment(n, std::get<TcpParams>(*c.model).lambda);
  };

  std::string csv = "x,t,n,estimate,se,oracle\n";
  for (std::size_t b = 0; b < c.x0.size(); ++b) {
    const double x = c.x0[b];
    const auto paths = sample_paths(ctx, model, HybridState({x}), times, b);
    auto moment = [&](double t, int n) {
      const std::size_t ti = static_cast<std::size_t>(std::find(times.begin(), times.end(), t) - times.begin());
      std::vector<double> values;
      values.reserve(paths.size());
      for (const auto& p : paths) values.push_back(std::pow(p.states.at(ti)[0], n));
      return mean_estimate(values);
    };
    for (double t : c.times)
      for (double order : orders) {
        const int n = static_cast<int>(order);
        const MeanEstimate m = moment(t, n);
        const double o = oracle(n, x, t);
        csv += csv_line({x, t, static_cast<double>(n), m.mean, m.se, o});
        ctx.rows.push_back(check_within_se("E[X^" + std::to_string(n) + "] x=" + label(x) + " t=" + label(t), m, o,
                                           "transient moment formula"));
      }
    if (c.stationary_time)
      for (double order : c.stationary_orders) {
        const int n = static_cast<int>(order);
        const MeanEstimate m = moment(*c.stationary_time, n);
        const double o = stationary(n);
        csv += csv_line({x, *c.stationary_time, static_cast<double>(n), m.mean, m.se, o});
        ctx.rows.push_back(check_within_se("stationary E[X^" + std::to_string(n) + "] x=" + label(x) +
                                               " t=" + label(*c.stationary_time),
                                           m, o, "invariant moment n!/prod theta_k"));
      }
  }
  ctx.files.push_back({".csv", csv});
}

void run_invariant_check(RunContext& ctx) {
  const auto& c = ctx.config;
  const PdmpModel model = build_model(*c.model);
  const std::string tag = variant_tag(*c.model);
  const HybridState init(std::span<const double>(c.x0), c.mode0);
  const double n_total = static_cast<double>(c.samples);
  std::string csv = "mode,lo,hi,empirical,oracle\n";

  if (tag == "storage") {
    const auto& p = std::get<StorageParams>(*c.model);
    const double shape = p.alpha / p.beta;
    const auto states = terminal_states(ctx, model, init, c.horizon, 0);
    std::vector<double> xs;
    for (const auto& s : states) xs.push_back(s[0]);
    const double d = ks_statistic(xs, [&](double x) { return gamma_cdf(x, shape, 1.0); });
    ctx.rows.push_back(check_below("KS vs Gamma(alpha/beta) at t=" + label(c.horizon), d, kKsLimit,
                                   "p-value " + label(kolmogorov_pvalue(d, n_total))));
    ctx.rows.push_back(check_within_se("mean at t=" + label(c.horizon), mean_estimate(xs),
                                       storage_mean(c.x0[0], c.horizon, p.alpha, p.beta)));
    const double hi = *std::max_element(xs.begin(), xs.end());
    csv += histogram_csv(0, xs, 0.0, hi, c.bins, n_total, [&](double x) {
      return std::exp((shape - 1.0) * std::log(x) - x - std::lgamma(shape));
    });
  } else if (tag == "dim1") {
    const auto& p = std::get<Dim1Params>(*c.model);
    const Dim1Law law = dim1_invariant_law(p.alpha0, p.alpha1, p.lambda0, p.lambda1);
    const auto states = terminal_states(ctx, model, init, c.horizon, 0);
    std::vector<double> by_mode[2];
    const double lo = std::min(0.0, c.x0[0]), hi = std::max(1.0, c.x0[0]);
    bool inside = true;
    for (const auto& s : states) {
      by_mode[s.mode()].push_back(s[0]);
      inside = inside && s[0] >= lo && s[0] <= hi;
    }
    ctx.rows.push_back(check_flag("states within [min(0,x0), max(1,x0)]", inside));
    const MeanEstimate w = frequency_estimate(by_mode[0].size(), states.size());
    ctx.rows.push_back(check_within_se("P(mode=0)", w, law.weight0, "lambda1 / (lambda0 + lambda1)"));
    const double a[2] = {law.a0, law.a1}, b[2] = {law.b0, law.b1};
    for (int i = 0; i < 2; ++i) {
      if (by_mode[i].empty()) {
        ctx.rows.push_back(check_flag("samples in mode " + std::to_string(i), false));
        continue;
      }
      const double d = ks_statistic(by_mode[i], [&](double x) { return beta_cdf(x, a[i], b[i]); });
      ctx.rows.push_back(check_below("KS mode " + std::to_string(i) + " vs Beta(" + label(a[i]) + "," + label(b[i]) + ")",
                                     d, kKsLimit,
                                     "p-value " + label(kolmogorov_pvalue(d, static_cast<double>(by_mode[i].size())))));
      csv += histogram_csv(i, by_mode[i], 0.0, 1.0, c.bins, static_cast<double>(by_mode[i].size()), [&](double x) {
        return dim1_invariant_density(x, i, p.alpha0, p.alpha1, p.lambda0, p.lambda1);
      });
    }
  } else if (tag == "telegraph") {
    const auto& p = std::get<TelegraphParams>(*c.model);
    const auto states = terminal_states(ctx, model, init, c.horizon, 0);
    std::vector<double> dist;
    std::size_t up = 0;
    for (const auto& s : states) {
      dist.push_back(std::abs(s[0]));
      up += s.mode() == 1;
    }
    const double rate = p.b - p.a;
    const double d = ks_statistic(dist, [&](double x) { return exponential_cdf(x, rate); });
    ctx.rows.push_back(check_below("KS |X| vs Exp(b-a) at t=" + label(c.horizon), d, kKsLimit,
                                   "p-value " + label(kolmogorov_pvalue(d, n_total))));
    ctx.rows.push_back(check_within_se("P(V=+1)", frequency_estimate(up, states.size()), 0.5, "uniform velocity"));
    ctx.rows.push_back(check_within_se("mean |X|", mean_estimate(dist), 1.0 / rate, "1 / (b - a)"));
    const double hi = *std::max_element(dist.begin(), dist.end());
    csv += histogram_csv(0, dist, 0.0, hi, c.bins, n_total,
                         [&](double x) { return telegraph_invariant_density(x, p.a, p.b); });
  } else if (tag == "morris-lecar") {
    const auto& p = std::get<MorrisLecarParams>(*c.model);
    const Interval seg = voltage_segment(p);
    struct Containment {
      bool inside = true;
      std::size_t events = 0;
    };
    // V is monotone along each flow piece, so checking every jump point and
    // the end point covers the whole path.
    const auto results = parallel_map(c.samples, ctx.workers, [&](std::size_t k) {
      RandomSource rng(c.seed, stream_index(0, k));
      const Trajectory traj = simulate(model, init, c.horizon, rng);
      Containment out;
      out.events = traj.events.size();
      auto ok = [&](const HybridState& s) { return s[0] >= seg.lo && s[0] <= seg.hi; };
      for (const auto& e : traj.events) out.inside = out.inside && ok(e.pre);
      out.inside = out.inside && ok(traj.terminal) && traj.outcome == Outcome::completed;
      return out;
    });
    std::size_t escaped = 0;
    std::vector<double> counts;
    for (const auto& r : results) {
      escaped += !r.inside;
      counts.push_back(static_cast<double>(r.events));
    }
    ReportRow row = check_flag("trajectories leaving the voltage segment", escaped == 0,
                               "segment [" + label(seg.lo) + ", " + label(seg.hi) + "]");
    row.estimate = static_cast<double>(escaped);
    row.oracle = 0.0;
    ctx.rows.push_back(row);
    const MeanEstimate ev = mean_estimate(counts);
    ctx.rows.push_back(info_row("events per trajectory", ev.mean, ev.se));

    double min_rate = std::numeric_limits<double>::infinity(), worst_identity = 0.0;
    csv = "v,opening1,closing1,opening2,closing2\n";
    for (int k = 0; k < 100; ++k) {
      const double v = seg.lo + (seg.hi - seg.lo) * k / 99.0;
      const ChannelRates r1 = morris_lecar_rates(v, 1, p), r2 = morris_lecar_rates(v, 2, p);
      min_rate = std::min({min_rate, r1.opening, r1.closing, r2.opening, r2.closing});
      for (int i = 0; i < 2; ++i) {
        const ChannelRates r = i == 0 ? r1 : r2;
        const double expected = 2.0 * p.c[i] * std::cosh((v - p.v_mid[i]) / (2.0 * p.v_scale[i]));
        worst_identity = std::max(worst_identity, std::abs(r.opening + r.closing - expected) / expected);
      }
      csv += csv_line({v, r1.opening, r1.closing, r2.opening, r2.closing});
    }
    ReportRow pos = check_flag("minimum channel rate on the segment grid is positive", min_rate > 0.0);
    pos.estimate = min_rate;
    ctx.rows.push_back(pos);
    ctx.rows.push_back(check_close("opening + closing = 2c cosh identity (relative)", worst_identity, 0.0, 1e-12));
  }
  ctx.files.push_back({".csv", csv});
}

}  // namespace pdmp::detail
