#include <algorithm>
#include <cmath>

#include "experiment_internal.hpp"
#include "parallel.hpp"
#include "pdmp/coupling.hpp"
#include "pdmp/error.hpp"
#include "pdmp/stats.hpp"
#include "text_util.hpp"

namespace pdmp::detail {

namespace {

std::string pair_label(double x, double y) { return "x=" + label(x) + " y=" + label(y); }

void shared_noise(RunContext& ctx, std::string& csv) {
  const auto& c = ctx.config;
  const std::string tag = variant_tag(*c.model);
  const std::vector<double> powers = c.powers.empty() ? std::vector<double>{1.0} : c.powers;
  csv = "x,y,t,p,estimate,se,oracle\n";
  for (std::size_t b = 0; b < c.x.size(); ++b) {
    const double x = c.x[b], y = c.y[b], gap = std::abs(x - y);
    const auto runs = parallel_map(c.samples, ctx.workers, [&](std::size_t k) {
      RandomSource rng(c.seed, stream_index(b, k));
      return couple_shared_noise(*c.model, x, y, c.times, rng);
    });
    const double scale = 1.0 + std::abs(x) + std::abs(y) + c.times.back();
    if (tag == "tcp") {
      // |X_t - Y_t| = |x - y| 2^{-N_t} at the horizon.
      double worst = 0.0;
      for (const auto& r : runs)
        worst = std::max(worst, std::abs(r.distances.back() - gap * std::ldexp(1.0, -static_cast<int>(r.jump_count))));
      ctx.rows.push_back(check_close("pathwise |X-Y| = |x-y| 2^-N " + pair_label(x, y), worst, 0.0, 1e-12 * scale,
                                     "largest deviation over all runs"));
    }
    if (tag == "storage") {
      const double beta = std::get<StorageParams>(*c.model).beta;
      double worst = 0.0;
      for (const auto& r : runs)
        for (std::size_t ti = 0; ti < c.times.size(); ++ti)
          worst = std::max(worst, std::abs(r.distances[ti] - gap * std::exp(-beta * c.times[ti])));
      ctx.rows.push_back(check_close("pathwise |X-Y| = |x-y| e^{-beta t} " + pair_label(x, y), worst, 0.0,
                                     1e-12 * scale, "largest deviation over all runs and times"));
    }
    if (x == y) {
      double worst = 0.0;
      for (const auto& r : runs)
        for (double d : r.distances) worst = std::max(worst, d);
      ctx.rows.push_back(check_close("zero distance when x = y", worst, 0.0, 0.0));
    }
    for (std::size_t ti = 0; ti < c.times.size(); ++ti) {
      const double t = c.times[ti];
      for (double p : powers) {
        std::vector<double> values;
        values.reserve(runs.size());
        for (const auto& r : runs) values.push_back(std::pow(r.distances[ti], p));
        const MeanEstimate m = mean_estimate(values);
        const std::string name = "E|X-Y|^" + label(p) + " " + pair_label(x, y) + " t=" + label(t);
        double oracle = std::nan("");
        if (tag == "tcp") {
          const double lambda = std::get<TcpParams>(*c.model).lambda;
          const double rate = lambda * (1.0 - std::pow(2.0, -p)) / p;
          oracle = std::pow(gap, p) * std::exp(-p * rate * t);
          ctx.rows.push_back(check_within_se(name, m, oracle, "|x-y|^p exp(-p lambda_p t)"));
        } else if (tag == "storage") {
          oracle = std::pow(gap * std::exp(-std::get<StorageParams>(*c.model).beta * t), p);
          ctx.rows.push_back(check_within_se(name, m, oracle, "deterministic contraction"));
        } else {
          ctx.rows.push_back(info_row(name, m.mean, m.se));
        }
        csv += csv_line({x, y, t, p, m.mean, m.se, oracle});
      }
    }
  }
}

void tv_coupling(RunContext& ctx, std::string& csv, bool storage) {
  const auto& c = ctx.config;
  csv = "x,y,t,estimate,se,bound\n";
  std::uint64_t block = 0;
  for (std::size_t b = 0; b < c.x.size(); ++b) {
    const double x = c.x[b], y = c.y[b], gap = std::abs(x - y);
    for (double t : c.times) {
      const auto runs = parallel_map(c.samples, ctx.workers, [&](std::size_t k) {
        RandomSource rng(c.seed, stream_index(block, k));
        if (storage) {
          const auto& p = std::get<StorageParams>(*c.model);
          return couple_tv_storage(x, y, t, p.alpha, p.beta, rng);
        }
        return couple_tv_tcp(x, y, t, std::get<TcpParams>(*c.model).lambda, rng);
      });
      ++block;
      std::size_t misses = 0, jumped = 0, jumped_misses = 0, idle_hits = 0;
      for (const auto& r : runs) {
        misses += !r.coalesced;
        if (r.jump_count > 0) {
          ++jumped;
          jumped_misses += !r.coalesced;
        } else {
          idle_hits += r.coalesced;
        }
        if (r.coalesced && !(r.first == r.second))
          fail(ErrorCode::contract_violation, "coalesced run with different terminal states");
      }
      const MeanEstimate m = frequency_estimate(misses, runs.size());
      double bound;
      std::string formula;
      if (storage) {
        const auto& p = std::get<StorageParams>(*c.model);
        if (p.alpha == p.beta) {
          bound = (1.0 + gap * p.alpha * t) * std::exp(-p.alpha * t);
          formula = "(1 + |x-y| alpha t) e^{-alpha t}";
        } else {
          bound = std::exp(-p.alpha * t) +
                  gap * p.alpha * (std::exp(-p.beta * t) - std::exp(-p.alpha * t)) / (p.alpha - p.beta);
          formula = "e^{-alpha t} + |x-y| alpha (e^{-beta t} - e^{-alpha t}) / (alpha - beta)";
        }
      } else {
        const double lambda = std::get<TcpParams>(*c.model).lambda;
        bound = lambda * std::exp(-lambda * t / 2.0) * gap + std::exp(-lambda * t);
        formula = "lambda e^{-lambda t/2} |x-y| + e^{-lambda t}";
      }
      ReportRow row;
      row.name = "P(not coalesced) " + pair_label(x, y) + " t=" + label(t);
      row.estimate = m.mean;
      row.se = m.se;
      row.bound = bound;
      row.tolerance = kSeMultiplier * m.se;
      row.verdict = m.mean <= bound + kSeMultiplier * m.se ? Verdict::pass : Verdict::fail;
      row.note = "bound " + formula;
      ctx.rows.push_back(row);
      csv += csv_line({x, y, t, m.mean, m.se, bound});
      if (x == y) {
        ReportRow exact = check_close("P(not coalesced | N_t >= 1) " + pair_label(x, y) + " t=" + label(t),
                                      jumped ? static_cast<double>(jumped_misses) / static_cast<double>(jumped) : 0.0,
                                      0.0, 0.0);
        ctx.rows.push_back(exact);
      }
      if (!storage && x != y) {
        ReportRow atom = check_close("coalesced runs without jumps " + pair_label(x, y) + " t=" + label(t),
                                     static_cast<double>(idle_hits), 0.0, 0.0, "atom at y + t persists");
        ctx.rows.push_back(atom);
      }
    }
  }
}

void switched(RunContext& ctx, std::string& csv) {
  const auto& c = ctx.config;
  const std::string tag = variant_tag(*c.model);
  const HybridState hx(std::span<const double>(c.x), c.x_mode), hy(std::span<const double>(c.y), c.y_mode);
  const auto runs = parallel_map(c.samples, ctx.workers, [&](std::size_t k) {
    RandomSource rng(c.seed, stream_index(0, k));
    return couple_switched(*c.model, hx, hy, c.times, rng);
  });
  double gap = 0.0;
  for (std::size_t j = 0; j < c.x.size(); ++j) gap += (c.x[j] - c.y[j]) * (c.x[j] - c.y[j]);
  gap = std::sqrt(gap);
  csv = "t,mean_distance,se\n";
  std::vector<double> means;
  for (std::size_t ti = 0; ti < c.times.size(); ++ti) {
    std::vector<double> d;
    for (const auto& r : runs) d.push_back(r.distances[ti]);
    const MeanEstimate m = mean_estimate(d);
    means.push_back(m.mean);
    csv += csv_line({c.times[ti], m.mean, m.se});
    ctx.rows.push_back(info_row("mean |X-Y| + 1{I!=J} at t=" + label(c.times[ti]), m.mean, m.se));
  }
  if (hx == hy) {
    double worst = 0.0;
    for (const auto& r : runs)
      for (double d : r.distances) worst = std::max(worst, d);
    ctx.rows.push_back(check_close("zero distance from identical starts", worst, 0.0, 0.0));
    return;
  }
  if (c.x_mode == c.y_mode && tag == "planar-rotation") {
    double worst = 0.0;
    for (const auto& r : runs)
      for (std::size_t ti = 0; ti < c.times.size(); ++ti)
        worst = std::max(worst, std::abs(r.distances[ti] - gap * std::exp(-c.times[ti])));
    ctx.rows.push_back(check_close("pathwise distance = |x-y| e^{-t}", worst, 0.0, 1e-12 * (1.0 + gap)));
  }
  if (c.x_mode == c.y_mode && tag == "dim1") {
    const auto& p = std::get<Dim1Params>(*c.model);
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& r : runs)
      for (std::size_t ti = 0; ti < c.times.size(); ++ti)
        worst = std::max(worst, r.distances[ti] - gap * std::exp(-std::min(p.alpha0, p.alpha1) * c.times[ti]));
    ctx.rows.push_back(check_below("pathwise excess over |x-y| e^{-min(alpha) t}", worst, 1e-12 * (1.0 + gap)));
  }
  ctx.rows.push_back(check_below("mean distance at the last time vs the first", means.back(), means.front(),
                                 "decay of the coupled distance"));
}

}  // namespace

void run_couple(RunContext& ctx) {
  std::string csv;
  const auto& kind = ctx.config.coupling;
  if (kind == "shared-noise")
    shared_noise(ctx, csv);
  else if (kind == "tv-storage")
    tv_coupling(ctx, csv, true);
  else if (kind == "tv-tcp")
    tv_coupling(ctx, csv, false);
  else
    switched(ctx, csv);
  ctx.files.push_back({".csv", csv});
}

}  // namespace pdmp::detail
