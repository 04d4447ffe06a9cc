#include <algorithm>
#include <cmath>
#include <limits>

#include "experiment_internal.hpp"
#include "parallel.hpp"
#include "pdmp/coupling.hpp"
#include "pdmp/error.hpp"
#include "pdmp/oracles.hpp"
#include "pdmp/quadrature.hpp"
#include "pdmp/stats.hpp"
#include "text_util.hpp"

namespace pdmp::detail {

namespace {

constexpr double kPMin = 1e-3;      // p-value floor of the distributional checks
constexpr double kThinningKs = 0.01;
// Atoms reached through differently split flows differ in the last bits;
// samples are snapped to this grid before a two-sample comparison.
constexpr double kTieGrid = 1e-9;

double snap(double v) { return std::round(v / kTieGrid) * kTieGrid; }

struct NamedModel {
  std::string label;
  ModelSpec spec;
  HybridState start;
};

std::vector<NamedModel> zoo() {
  AimdParams aimd;
  aimd.rate_slope = 2.0;
  aimd.measure = JumpMeasure::uniform;
  aimd.nu_low = 0.2;
  aimd.nu_high = 0.8;
  return {
      {"storage", StorageParams{1.0, 2.0}, HybridState({3.0})},
      {"bandit", BanditParams{}, HybridState({3.0})},
      {"tcp", TcpParams{1.0}, HybridState({2.0})},
      {"aimd", aimd, HybridState({0.5})},
      {"switched-linear", SwitchedLinearParams{0.1, 5.0}, HybridState({0.3, -0.4}, 1)},
      {"dim1", Dim1Params{1.0, 2.0, 1.0, 0.5}, HybridState({0.3}, 0)},
      {"planar-rotation", PlanarRotationParams{1.0, 2.0}, HybridState({0.5, 0.5}, 0)},
      {"telegraph", TelegraphParams{1.0, 2.0}, HybridState({-0.5}, 1)},
      {"morris-lecar", MorrisLecarParams{}, HybridState({30.0}, 8)},
  };
}

bool same_trajectory(const Trajectory& a, const Trajectory& b) {
  if (a.events.size() != b.events.size() || !(a.terminal == b.terminal) || a.end_time != b.end_time) return false;
  for (std::size_t k = 0; k < a.events.size(); ++k)
    if (a.events[k].time != b.events[k].time || !(a.events[k].pre == b.events[k].pre) ||
        !(a.events[k].post == b.events[k].post))
      return false;
  return true;
}

ReportRow p_value_row(std::string name, double d, double n_eff) {
  const double p = kolmogorov_pvalue(d, n_eff);
  ReportRow row;
  row.name = std::move(name);
  row.estimate = p;
  row.bound = kPMin;
  row.verdict = p > kPMin ? Verdict::pass : Verdict::fail;
  row.note = "KS statistic " + label(d);
  return row;
}

class Suite {
 public:
  explicit Suite(RunContext& ctx) : ctx_(ctx), c_(ctx.config) {}

  void run() {
    guarded("reproducibility", [&] { reproducibility(); });
    guarded("worker independence", [&] { worker_independence(); });
    guarded("flow semigroup", [&] { semigroup(); });
    guarded("segment bounds", [&] { bounds(); });
    guarded("bound violation", [&] { bound_violation(); });
    guarded("waiting times", [&] { waiting_times(); });
    guarded("thinning", [&] { thinning(); });
    guarded("telegraph inversion", [&] { telegraph_inversion(); });
    guarded("event counts", [&] { event_counts(); });
    guarded("coupling marginals", [&] { coupling_marginals(); });
    guarded("tv-tcp monotonicity", [&] { tcp_monotone(); });
    guarded("shared-noise tcp", [&] { tcp_pathwise(); });
    guarded("wasserstein metric", [&] { wasserstein_metric(); });
  }

 private:
  template <class F>
  void guarded(const std::string& name, F&& f) {
    try {
      f();
    } catch (const std::exception& e) {
      ctx_.rows.push_back(failed_row(name, e));
    }
  }

  std::uint64_t next_block() { return block_++; }

  void reproducibility() {
    bool all = true;
    for (const auto& m : zoo()) {
      const PdmpModel model = build_model(m.spec);
      RandomSource a(c_.seed, 7), b(c_.seed, 7);
      all = all && same_trajectory(simulate(model, m.start, 20.0, a), simulate(model, m.start, 20.0, b));
    }
    ctx_.rows.push_back(check_flag("bit-identical trajectories for identical (seed, stream)", all, "all nine variants"));
  }

  void worker_independence() {
    const std::string text = "kind = simulate\nseed = " + std::to_string(c_.seed) +
                             "\nvariant = dim1\nalpha0 = 1\nalpha1 = 2\nlambda0 = 1\nlambda1 = 0.5\n"
                             "x0 = 0.3\ntimes = 0.5, 2\nsamples = 3000\n";
    const ExperimentConfig cfg = parse_config(text);
    const ExperimentReport one = run_experiment(cfg, 1), many = run_experiment(cfg, 4);
    bool same = one.to_json() == many.to_json() && one.files.size() == many.files.size();
    for (std::size_t k = 0; same && k < one.files.size(); ++k) same = one.files[k].content == many.files[k].content;
    ctx_.rows.push_back(check_flag("identical outputs with 1 and 4 workers", same));
  }

  void semigroup() {
    double worst = 0.0;
    RandomSource rng(c_.seed, detail::stream_index(next_block(), 0));
    for (const auto& m : zoo()) {
      const PdmpModel model = build_model(m.spec);
      for (int k = 0; k < 200; ++k) {
        HybridState s = m.start;
        for (std::size_t j = 0; j < model.dim; ++j) {
          const auto [lo, hi] = model.sampling_box[j];
          s[j] = lo + (hi - lo) * rng.uniform();
        }
        s.set_mode(static_cast<std::size_t>(rng.uniform() * static_cast<double>(model.mode_count)));
        const double t1 = 2.0 * rng.uniform(), t2 = 2.0 * rng.uniform();
        const HybridState two = advance_flow(model, advance_flow(model, s, t1), t2);
        const HybridState one = advance_flow(model, s, t1 + t2);
        for (std::size_t j = 0; j < model.dim; ++j)
          worst = std::max(worst, std::abs(two[j] - one[j]) / (1.0 + std::abs(one[j])));
        if (!(advance_flow(model, s, 0.0) == s)) worst = std::numeric_limits<double>::infinity();
      }
    }
    ctx_.rows.push_back(check_close("flow semigroup and identity (relative)", worst, 0.0, 1e-9, "all nine variants"));
  }

  void bounds() {
    double worst = -std::numeric_limits<double>::infinity();
    RandomSource rng(c_.seed, detail::stream_index(next_block(), 0));
    for (const auto& m : zoo()) {
      const PdmpModel model = build_model(m.spec);
      if (model.rate.kind != RateKind::bounded) continue;
      for (int k = 0; k < 200; ++k) {
        HybridState s = m.start;
        for (std::size_t j = 0; j < model.dim; ++j) {
          const auto [lo, hi] = model.sampling_box[j];
          s[j] = lo + (hi - lo) * rng.uniform();
        }
        s.set_mode(static_cast<std::size_t>(rng.uniform() * static_cast<double>(model.mode_count)));
        const double window = 3.0 * rng.uniform();
        const double bound = model.rate.segment_bound(s, window);
        for (int q = 0; q <= 20; ++q) {
          const double rate = model.rate.rate(advance_flow(model, s, window * q / 20.0));
          worst = std::max(worst, (rate - bound) / (1.0 + bound));
        }
      }
    }
    ctx_.rows.push_back(check_below("rate minus segment bound along sampled flows", worst, 1e-12,
                                    "bandit, aimd and morris-lecar"));
  }

  void bound_violation() {
    PdmpModel model = build_model(BanditParams{});
    model.rate.segment_bound = [](const HybridState&, double) { return 1e-3; };
    RandomSource rng(c_.seed, detail::stream_index(next_block(), 0));
    bool raised = false;
    try {
      for (int k = 0; k < 1000 && !raised; ++k) (void)sample_next_jump(model, HybridState({5.0}), rng, 1e6);
    } catch (const Error& e) {
      raised = e.code() == ErrorCode::bound_violation;
    }
    ctx_.rows.push_back(check_flag("understated segment bound raises a bound violation", raised));
  }

  void waiting_times() {
    const PdmpModel model = build_model(TcpParams{1.0});
    const std::uint64_t block = next_block();
    const std::size_t n = 10 * c_.samples;
    const auto waits = parallel_map(n, ctx_.workers, [&](std::size_t k) {
      RandomSource rng(c_.seed, detail::stream_index(block, k));
      return sample_next_jump(model, HybridState({1.0}), rng, 1e9)->dt;
    });
    ctx_.rows.push_back(check_within_se("mean waiting time at constant rate 1", mean_estimate(waits), 1.0,
                                        std::to_string(n) + " samples"));
  }

  // First jump times of a state-dependent rate against 1 - exp(-int rate),
  // the integral taken by quadrature along the flow.
  void thinning_case(const std::string& name, const ModelSpec& spec, const HybridState& start) {
    const PdmpModel model = build_model(spec);
    const std::uint64_t block = next_block();
    auto times = parallel_map(c_.samples, ctx_.workers, [&](std::size_t k) {
      RandomSource rng(c_.seed, detail::stream_index(block, k));
      return sample_next_jump(model, start, rng, 1e9)->dt;
    });
    std::sort(times.begin(), times.end());
    auto rate_at = [&](double s) { return model.rate.rate(advance_flow(model, start, s)); };
    const QuadratureOptions q{1e-10, 20};
    double integrated = 0.0, last = 0.0, d = 0.0;
    const auto n = static_cast<double>(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) {
      integrated += integrate(rate_at, last, times[k], q).value;
      last = times[k];
      const double f = -std::expm1(-integrated);
      d = std::max({d, static_cast<double>(k + 1) / n - f, f - static_cast<double>(k) / n});
    }
    ctx_.rows.push_back(check_below("thinning KS " + name, d, kThinningKs,
                                    "p-value " + label(kolmogorov_pvalue(d, n))));
  }

  void thinning() {
    AimdParams aimd;
    aimd.rate_slope = 2.0;
    aimd.rate_power = 1.5;
    aimd.measure = JumpMeasure::power;
    aimd.nu_shape = 2.0;
    thinning_case("bandit from y=3", BanditParams{}, HybridState({3.0}));
    thinning_case("bandit from y=0.2", BanditParams{0.5, 0.25, 1.0}, HybridState({0.2}));
    thinning_case("aimd rate 1 + 2 x^1.5", aimd, HybridState({0.5}));
    thinning_case("morris-lecar from V=30", MorrisLecarParams{}, HybridState({30.0}, 8));
  }

  void telegraph_inversion() {
    const PdmpModel model = build_model(TelegraphParams{1.0, 2.0});
    struct Case {
      std::string name;
      HybridState start;
      std::function<double(double)> cdf;
    };
    const std::vector<Case> cases = {
        {"telegraph from (1, +1) vs Exp(b)", HybridState({1.0}, 1), [](double t) { return exponential_cdf(t, 2.0); }},
        {"telegraph from (-1, +1) with a breakpoint at t=1", HybridState({-1.0}, 1),
         [](double t) { return -std::expm1(-(1.0 * std::min(t, 1.0) + 2.0 * std::max(t - 1.0, 0.0))); }},
    };
    for (const auto& tc : cases) {
      const std::uint64_t block = next_block();
      const auto times = parallel_map(c_.samples, ctx_.workers, [&](std::size_t k) {
        RandomSource rng(c_.seed, detail::stream_index(block, k));
        return sample_next_jump(model, tc.start, rng, 1e9)->dt;
      });
      const double d = ks_statistic(times, tc.cdf);
      ReportRow row = p_value_row(tc.name, d, static_cast<double>(times.size()));
      row.bound = 0.01;
      row.verdict = *row.estimate > 0.01 ? Verdict::pass : Verdict::fail;
      ctx_.rows.push_back(row);
    }
  }

  void event_counts() {
    for (const auto& [name, spec, rate, t] : std::vector<std::tuple<std::string, ModelSpec, double, double>>{
             {"tcp lambda=1.5", TcpParams{1.5}, 1.5, 2.0}, {"storage alpha=0.7", StorageParams{0.7, 1.0}, 0.7, 3.0}}) {
      const PdmpModel model = build_model(spec);
      const std::uint64_t block = next_block();
      const auto counts = parallel_map(c_.samples, ctx_.workers, [&](std::size_t k) {
        RandomSource rng(c_.seed, detail::stream_index(block, k));
        return run_to(model, HybridState({1.0}), t, rng).event_count;
      });
      std::vector<std::size_t> histogram(30, 0);
      for (auto n : counts) ++histogram[std::min<std::size_t>(n, histogram.size() - 1)];
      const ChiSquareResult chi = poisson_chi_square(histogram, rate * t);
      ReportRow row;
      row.name = "event count vs Poisson, " + name;
      row.estimate = chi.p_value;
      row.bound = kPMin;
      row.verdict = chi.p_value > kPMin ? Verdict::pass : Verdict::fail;
      row.note = "chi-square " + label(chi.statistic) + " on " + std::to_string(chi.dof) + " dof";
      ctx_.rows.push_back(row);
    }
  }

  void marginal_case(const std::string& name, const ModelSpec& spec, const HybridState& x, const HybridState& y,
                     double t, const std::function<CoupledRun(RandomSource&)>& couple) {
    const PdmpModel model = build_model(spec);
    const std::uint64_t coupled_block = next_block(), free_block = next_block();
    const auto runs = parallel_map(c_.samples, ctx_.workers, [&](std::size_t k) {
      RandomSource rng(c_.seed, detail::stream_index(coupled_block, k));
      const CoupledRun r = couple(rng);
      return std::pair{r.first[0], r.second[0]};
    });
    const auto free = parallel_map(c_.samples, ctx_.workers, [&](std::size_t k) {
      RandomSource rng(c_.seed, detail::stream_index(free_block, k));
      RandomSource rng2(c_.seed ^ 0x9e3779b97f4a7c15ULL, detail::stream_index(free_block, k));
      return std::pair{run_to(model, x, t, rng).terminal[0], run_to(model, y, t, rng2).terminal[0]};
    });
    std::vector<double> cx, cy, fx, fy;
    for (const auto& [a, b] : runs) {
      cx.push_back(snap(a));
      cy.push_back(snap(b));
    }
    for (const auto& [a, b] : free) {
      fx.push_back(snap(a));
      fy.push_back(snap(b));
    }
    const double n_eff = static_cast<double>(c_.samples) / 2.0;
    ctx_.rows.push_back(p_value_row("marginal of first copy, " + name, ks_two_sample(cx, fx), n_eff));
    ctx_.rows.push_back(p_value_row("marginal of second copy, " + name, ks_two_sample(cy, fy), n_eff));
  }

  void coupling_marginals() {
    const std::vector<double> horizon2{2.0}, horizon3{3.0};
    const StorageParams storage{1.0, 2.0};
    const TcpParams tcp{1.0};
    AimdParams aimd;
    aimd.rate_slope = 1.0;
    aimd.measure = JumpMeasure::uniform;
    marginal_case("shared-noise storage", storage, HybridState({3.0}), HybridState({0.0}), 2.0,
                  [&](RandomSource& rng) { return couple_shared_noise(storage, 3.0, 0.0, horizon2, rng); });
    marginal_case("shared-noise tcp", tcp, HybridState({2.0}), HybridState({1.0}), 3.0,
                  [&](RandomSource& rng) { return couple_shared_noise(tcp, 2.0, 1.0, horizon3, rng); });
    marginal_case("shared-noise aimd", aimd, HybridState({2.0}), HybridState({0.5}), 3.0,
                  [&](RandomSource& rng) { return couple_shared_noise(aimd, 2.0, 0.5, horizon3, rng); });
    marginal_case("tv-storage", storage, HybridState({3.0}), HybridState({0.0}), 2.0,
                  [&](RandomSource& rng) { return couple_tv_storage(3.0, 0.0, 2.0, 1.0, 2.0, rng); });
    marginal_case("tv-tcp", tcp, HybridState({2.0}), HybridState({1.0}), 3.0,
                  [&](RandomSource& rng) { return couple_tv_tcp(2.0, 1.0, 3.0, 1.0, rng); });
    const Dim1Params dim1{1.0, 2.0, 1.0, 0.5};
    const HybridState d0({0.2}, 0), d1({0.9}, 1);
    marginal_case("switched dim1", dim1, d0, d1, 2.0,
                  [&](RandomSource& rng) { return couple_switched(dim1, d0, d1, horizon2, rng); });
    const MorrisLecarParams ml;
    const HybridState m0({30.0}, 8), m1({120.0}, 3);
    marginal_case("switched morris-lecar", ml, m0, m1, 2.0,
                  [&](RandomSource& rng) { return couple_switched(ml, m0, m1, horizon2, rng); });
  }

  void tcp_monotone() {
    const std::vector<double> grid{1.0, 2.0, 3.0, 5.0, 8.0};
    std::vector<MeanEstimate> misses;
    for (double t : grid) {
      const std::uint64_t block = next_block();
      const auto hits = parallel_map(c_.samples, ctx_.workers, [&](std::size_t k) {
        RandomSource rng(c_.seed, detail::stream_index(block, k));
        return couple_tv_tcp(2.0, 1.0, t, 1.0, rng).coalesced ? 0 : 1;
      });
      std::size_t total = 0;
      for (int h : hits) total += static_cast<std::size_t>(h);
      misses.push_back(frequency_estimate(total, hits.size()));
    }
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < misses.size(); ++k) {
      const double slack = 2.0 * std::hypot(misses[k].se, misses[k - 1].se);
      worst = std::max(worst, misses[k].mean - misses[k - 1].mean - slack);
    }
    ctx_.rows.push_back(check_below("tv-tcp non-coalescence increase beyond 2 SE on t in {1,2,3,5,8}", worst, 0.0));
  }

  void tcp_pathwise() {
    const std::vector<double> grid{0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0};
    const std::uint64_t block = next_block();
    const auto ok = parallel_map(c_.samples, ctx_.workers, [&](std::size_t k) {
      RandomSource rng(c_.seed, detail::stream_index(block, k));
      const CoupledRun r = couple_shared_noise(TcpParams{1.0}, 2.0, 1.0, grid, rng);
      for (std::size_t i = 1; i < r.distances.size(); ++i)
        if (r.distances[i] > r.distances[i - 1] * (1.0 + 1e-12)) return 0;
      return 1;
    });
    const bool all = std::all_of(ok.begin(), ok.end(), [](int v) { return v == 1; });
    ctx_.rows.push_back(check_flag("shared-noise tcp distance nonincreasing on every path", all, "up to 1e-12 relative rounding"));
  }

  void wasserstein_metric() {
    RandomSource rng(c_.seed, detail::stream_index(next_block(), 0));
    auto sample = [&] {
      const auto n = 1 + static_cast<std::size_t>(rng.uniform() * 40.0);
      const double shift = 4.0 * rng.uniform() - 2.0;
      std::vector<double> v(n);
      for (auto& x : v) x = shift + rng.exponential() * (rng.uniform() < 0.5 ? -1.0 : 1.0);
      return v;
    };
    bool symmetric = true, identity = true, translation = true;
    double triangle = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < 500; ++k) {
      const auto a = sample(), b = sample(), c = sample();
      const double p = 1.0 + 2.0 * rng.uniform();
      const double ab = empirical_wasserstein(a, b, p).value, ba = empirical_wasserstein(b, a, p).value;
      const double bc = empirical_wasserstein(b, c, p).value, ac = empirical_wasserstein(a, c, p).value;
      symmetric = symmetric && ab == ba;
      identity = identity && empirical_wasserstein(a, a, p).value == 0.0;
      triangle = std::max(triangle, ac - ab - bc);
      std::vector<double> shifted = a;
      for (auto& x : shifted) x += 0.75;
      translation = translation && std::abs(empirical_wasserstein(a, shifted, p).value - 0.75) < 1e-12;
    }
    ctx_.rows.push_back(check_flag("empirical W_p symmetric (exact)", symmetric));
    ctx_.rows.push_back(check_flag("empirical W_p vanishes on identical samples", identity));
    ctx_.rows.push_back(check_flag("empirical W_p of a translate equals the shift", translation));
    ctx_.rows.push_back(check_below("empirical W_p triangle excess", triangle, 1e-12, "500 random triples"));
  }

  RunContext& ctx_;
  const ExperimentConfig& c_;
  std::uint64_t block_ = 100;
};

}  // namespace

void run_property_suite(RunContext& ctx) { Suite(ctx).run(); }

}  // namespace pdmp::detail
