#include "pdmp/models.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "pdmp/error.hpp"
#include "text_util.hpp"

namespace pdmp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check(bool ok, const std::string& constraint) {
  if (!ok) fail(ErrorCode::domain_error, "requires " + constraint);
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

PdmpModel build(const StorageParams& p) {
  PdmpModel m;
  m.name = "storage";
  m.sampling_box = {{0.0, 5.0 * std::max(1.0, p.alpha / p.beta)}};
  const double alpha = p.alpha, beta = p.beta;
  m.flow.closed_form = [beta](std::size_t, std::span<const double> x, double dt, std::span<double> out) {
    out[0] = x[0] * std::exp(-beta * dt);
  };
  m.flow.field = [beta](std::size_t, std::span<const double> x, std::span<double> dx) { dx[0] = -beta * x[0]; };
  m.rate.kind = RateKind::constant;
  m.rate.rate = [alpha](const HybridState&) { return alpha; };
  m.kernel.sample = [](const HybridState& s, RandomSource& rng) {
    HybridState out = s;
    out[0] += rng.exponential();
    return out;
  };
  return m;
}

PdmpModel build(const BanditParams& p) {
  PdmpModel m;
  m.name = "bandit";
  const double pp = p.p, q = p.q, g = p.g;
  const double target = (1.0 - pp) / pp;
  m.sampling_box = {{0.0, 2.0 * target + 2.0 * g}};
  m.flow.closed_form = [pp, target](std::size_t, std::span<const double> x, double dt, std::span<double> out) {
    out[0] = target + (x[0] - target) * std::exp(-pp * dt);
  };
  m.flow.field = [pp](std::size_t, std::span<const double> x, std::span<double> dx) {
    dx[0] = 1.0 - pp - pp * x[0];
  };
  m.rate.kind = RateKind::bounded;
  m.rate.rate = [q, g](const HybridState& s) { return q * std::max(s[0], 0.0) / g; };
  // The drift pushes y monotonically toward (1-p)/p.
  m.rate.segment_bound = [q, g, target](const HybridState& s, double) {
    return q / g * std::max(std::max(s[0], 0.0), target);
  };
  m.kernel.sample = [g](const HybridState& s, RandomSource&) {
    HybridState out = s;
    out[0] += g;
    return out;
  };
  return m;
}

PdmpModel build(const TcpParams& p) {
  PdmpModel m;
  m.name = "tcp";
  m.sampling_box = {{0.0, 10.0 / p.lambda}};
  const double lambda = p.lambda;
  m.flow.closed_form = [](std::size_t, std::span<const double> x, double dt, std::span<double> out) {
    out[0] = x[0] + dt;
  };
  m.flow.field = [](std::size_t, std::span<const double>, std::span<double> dx) { dx[0] = 1.0; };
  m.rate.kind = RateKind::constant;
  m.rate.rate = [lambda](const HybridState&) { return lambda; };
  m.kernel.sample = [](const HybridState& s, RandomSource&) {
    HybridState out = s;
    out[0] *= 0.5;
    return out;
  };
  return m;
}

PdmpModel build(const AimdParams& p) {
  PdmpModel m;
  m.name = "aimd";
  m.sampling_box = {{0.0, 10.0}};
  m.flow.closed_form = [](std::size_t, std::span<const double> x, double dt, std::span<double> out) {
    out[0] = x[0] + dt;
  };
  m.flow.field = [](std::size_t, std::span<const double>, std::span<double> dx) { dx[0] = 1.0; };
  const double base = p.rate_base, slope = p.rate_slope, power = p.rate_power;
  auto lambda = [base, slope, power](double x) {
    return base + slope * std::pow(std::max(x, 0.0), power);
  };
  m.rate.rate = [lambda](const HybridState& s) { return lambda(s[0]); };
  if (slope == 0.0) {
    m.rate.kind = RateKind::constant;
  } else {
    m.rate.kind = RateKind::bounded;
    // Nondecreasing rate along an increasing flow: the window end dominates.
    m.rate.segment_bound = [lambda](const HybridState& s, double dt) { return lambda(s[0] + dt); };
  }
  m.kernel.sample = [p](const HybridState& s, RandomSource& rng) {
    HybridState out = s;
    out[0] *= p.quantile(rng.uniform());
    return out;
  };
  return m;
}

PdmpModel build(const SwitchedLinearParams& p) {
  PdmpModel m;
  m.name = "switched-linear";
  m.dim = 2;
  m.mode_count = 2;
  m.sampling_box = {{-2.0, 2.0}, {-2.0, 2.0}};
  const double alpha = p.alpha, r = p.r;
  m.flow.closed_form = [alpha](std::size_t mode, std::span<const double> x, double dt, std::span<double> out) {
    const double decay = std::exp(-alpha * dt);
    if (mode == 0) {
      out[0] = (x[0] + dt * x[1]) * decay;
      out[1] = x[1] * decay;
    } else {
      out[0] = x[0] * decay;
      out[1] = (x[1] - dt * x[0]) * decay;
    }
  };
  m.flow.field = [alpha](std::size_t mode, std::span<const double> x, std::span<double> dx) {
    if (mode == 0) {
      dx[0] = -alpha * x[0] + x[1];
      dx[1] = -alpha * x[1];
    } else {
      dx[0] = -alpha * x[0];
      dx[1] = -x[0] - alpha * x[1];
    }
  };
  m.mode_rates = [r](const HybridState& s, SwitchRates& out) {
    out.clear();
    out.push(1 - s.mode(), r);
  };
  attach_mode_switching(m, RateKind::constant);
  return m;
}

PdmpModel build(const Dim1Params& p) {
  PdmpModel m;
  m.name = "dim1";
  m.mode_count = 2;
  m.sampling_box = {{-0.5, 1.5}};
  const std::array<double, 2> pull{p.alpha0, p.alpha1};
  const std::array<double, 2> flip{p.lambda0, p.lambda1};
  m.flow.closed_form = [pull](std::size_t mode, std::span<const double> x, double dt, std::span<double> out) {
    const double centre = static_cast<double>(mode);
    out[0] = centre + (x[0] - centre) * std::exp(-pull[mode] * dt);
  };
  m.flow.field = [pull](std::size_t mode, std::span<const double> x, std::span<double> dx) {
    dx[0] = -pull[mode] * (x[0] - static_cast<double>(mode));
  };
  m.mode_rates = [flip](const HybridState& s, SwitchRates& out) {
    out.clear();
    out.push(1 - s.mode(), flip[s.mode()]);
  };
  attach_mode_switching(m, RateKind::constant);
  return m;
}

PdmpModel build(const PlanarRotationParams& p) {
  PdmpModel m;
  m.name = "planar-rotation";
  m.dim = 2;
  m.mode_count = 2;
  m.sampling_box = {{-2.0, 2.0}, {-2.0, 2.0}};
  const std::array<double, 2> flip{p.lambda0, p.lambda1};
  // exp(A t) = e^{-t} * rotation(t) since A = -Id + J.
  m.flow.closed_form = [](std::size_t mode, std::span<const double> x, double dt, std::span<double> out) {
    const double cx = mode == 0 ? 0.0 : 1.0;
    const double dx = x[0] - cx, dy = x[1];
    const double decay = std::exp(-dt), c = std::cos(dt), s = std::sin(dt);
    out[0] = cx + decay * (c * dx - s * dy);
    out[1] = decay * (s * dx + c * dy);
  };
  m.flow.field = [](std::size_t mode, std::span<const double> x, std::span<double> d) {
    const double dx = x[0] - (mode == 0 ? 0.0 : 1.0), dy = x[1];
    d[0] = -dx - dy;
    d[1] = dx - dy;
  };
  m.mode_rates = [flip](const HybridState& s, SwitchRates& out) {
    out.clear();
    out.push(1 - s.mode(), flip[s.mode()]);
  };
  attach_mode_switching(m, RateKind::constant);
  return m;
}

double telegraph_velocity(std::size_t mode) { return mode == 0 ? -1.0 : 1.0; }

PdmpModel build(const TelegraphParams& p) {
  PdmpModel m;
  m.name = "telegraph";
  m.mode_count = 2;
  m.sampling_box = {{-5.0, 5.0}};
  const double a = p.a, b = p.b;
  m.flow.closed_form = [](std::size_t mode, std::span<const double> x, double dt, std::span<double> out) {
    out[0] = x[0] + telegraph_velocity(mode) * dt;
  };
  m.flow.field = [](std::size_t mode, std::span<const double>, std::span<double> dx) {
    dx[0] = telegraph_velocity(mode);
  };
  // Strict indicator 1{xv > 0}: at x = 0 the rate is a.
  m.mode_rates = [a, b](const HybridState& s, SwitchRates& out) {
    out.clear();
    const bool away = s[0] * telegraph_velocity(s.mode()) > 0.0;
    out.push(1 - s.mode(), away ? b : a);
  };
  attach_mode_switching(m, RateKind::piecewise_constant);
  m.rate.piece = [a, b](const HybridState& s) {
    const double xv = s[0] * telegraph_velocity(s.mode());
    if (xv < 0.0) return RatePiece{a, std::abs(s[0])};
    return RatePiece{b, kInf};
  };
  return m;
}

PdmpModel build(const MorrisLecarParams& p) {
  PdmpModel m;
  m.name = "morris-lecar";
  const int k = p.channels;
  m.mode_count = static_cast<std::size_t>((k + 1) * (k + 1));
  const Interval seg = voltage_segment(p);
  m.sampling_box = {{seg.lo, seg.hi}};
  m.flow.closed_form = [p](std::size_t mode, std::span<const double> x, double dt, std::span<double> out) {
    const auto [n1, n2] = morris_lecar_occupancy(mode, p.channels);
    const double u1 = static_cast<double>(n1) / p.channels, u2 = static_cast<double>(n2) / p.channels;
    const double conductance = p.g[0] * u1 + p.g[1] * u2 + p.g[2];
    const double rest = (p.current + p.g[0] * u1 * p.v[0] + p.g[1] * u2 * p.v[1] + p.g[2] * p.v[2]) / conductance;
    out[0] = rest + (x[0] - rest) * std::exp(-conductance * dt / p.capacitance);
  };
  m.flow.field = [p](std::size_t mode, std::span<const double> x, std::span<double> dx) {
    const auto [n1, n2] = morris_lecar_occupancy(mode, p.channels);
    dx[0] = morris_lecar_field(x[0], n1, n2, p);
  };
  // Each of the K channels of type i opens at alpha_i(V) and closes at beta_i(V).
  m.mode_rates = [p](const HybridState& s, SwitchRates& out) {
    out.clear();
    const int kk = p.channels;
    const auto [n1, n2] = morris_lecar_occupancy(s.mode(), kk);
    const ChannelRates r1 = morris_lecar_rates(s[0], 1, p);
    const ChannelRates r2 = morris_lecar_rates(s[0], 2, p);
    if (n1 > 0) out.push(morris_lecar_mode(n1 - 1, n2, kk), n1 * r1.closing);
    if (n2 > 0) out.push(morris_lecar_mode(n1, n2 - 1, kk), n2 * r2.closing);
    if (n2 < kk) out.push(morris_lecar_mode(n1, n2 + 1, kk), (kk - n2) * r2.opening);
    if (n1 < kk) out.push(morris_lecar_mode(n1 + 1, n2, kk), (kk - n1) * r1.opening);
  };
  attach_mode_switching(m, RateKind::bounded);
  // alpha_i increases and beta_i decreases in V, and V is monotone along each
  // flow, so the extremes over a window sit at its two ends.
  auto flow = m.flow.closed_form;
  m.rate.segment_bound = [p, flow](const HybridState& s, double dt) {
    std::array<double, 1> end{};
    flow(s.mode(), s.position(), dt, end);
    const double v_lo = std::min(s[0], end[0]), v_hi = std::max(s[0], end[0]);
    const auto [n1, n2] = morris_lecar_occupancy(s.mode(), p.channels);
    const int kk = p.channels;
    const ChannelRates hi1 = morris_lecar_rates(v_hi, 1, p), lo1 = morris_lecar_rates(v_lo, 1, p);
    const ChannelRates hi2 = morris_lecar_rates(v_hi, 2, p), lo2 = morris_lecar_rates(v_lo, 2, p);
    return (kk - n1) * hi1.opening + n1 * lo1.closing + (kk - n2) * hi2.opening + n2 * lo2.closing;
  };
  return m;
}

double number(const KeyValues& values, const std::string& key, double fallback, bool allow_defaults) {
  const auto it = values.find(key);
  if (it == values.end()) {
    if (allow_defaults) return fallback;
    fail(ErrorCode::parse_error, "missing required key `" + key + "`");
  }
  return detail::parse_double(it->second.text, key, it->second.line);
}

std::string measure_name(JumpMeasure m) {
  switch (m) {
    case JumpMeasure::dirac: return "dirac";
    case JumpMeasure::uniform: return "uniform";
    case JumpMeasure::power: return "power";
  }
  return "dirac";
}

}  // namespace

double AimdParams::quantile(double u) const {
  switch (measure) {
    case JumpMeasure::dirac: return nu_value;
    case JumpMeasure::uniform: return nu_low + (nu_high - nu_low) * u;
    case JumpMeasure::power: return std::pow(u, 1.0 / nu_shape);
  }
  return nu_value;
}

std::string variant_tag(const ModelSpec& spec) {
  return std::visit(overloaded{
                        [](const StorageParams&) { return std::string("storage"); },
                        [](const BanditParams&) { return std::string("bandit"); },
                        [](const TcpParams&) { return std::string("tcp"); },
                        [](const AimdParams&) { return std::string("aimd"); },
                        [](const SwitchedLinearParams&) { return std::string("switched-linear"); },
                        [](const Dim1Params&) { return std::string("dim1"); },
                        [](const PlanarRotationParams&) { return std::string("planar-rotation"); },
                        [](const TelegraphParams&) { return std::string("telegraph"); },
                        [](const MorrisLecarParams&) { return std::string("morris-lecar"); },
                    },
                    spec);
}

std::vector<std::string> constraint_violations(const ModelSpec& spec) {
  std::vector<std::string> out;
  auto need = [&](bool ok, const std::string& constraint) {
    if (!ok) out.push_back("requires " + constraint);
  };
  std::visit(overloaded{
                 [&](const StorageParams& p) {
                   need(p.alpha > 0.0, "alpha > 0");
                   need(p.beta > 0.0, "beta > 0");
                 },
                 [&](const BanditParams& p) {
                   need(p.q > 0.0 && p.q < p.p && p.p < 1.0, "0 < q < p < 1");
                   need(p.g > 0.0, "g > 0");
                 },
                 [&](const TcpParams& p) { need(p.lambda > 0.0, "lambda > 0"); },
                 [&](const AimdParams& p) {
                   need(p.rate_base >= 0.0 && p.rate_slope >= 0.0 && p.rate_power >= 0.0,
                        "nonnegative rate_base, rate_slope and rate_power");
                   need(p.rate_base > 0.0 || p.rate_slope > 0.0, "a jump rate that is not identically zero");
                   switch (p.measure) {
                     case JumpMeasure::dirac: need(p.nu_value >= 0.0 && p.nu_value <= 1.0, "0 <= nu_value <= 1"); break;
                     case JumpMeasure::uniform:
                       need(0.0 <= p.nu_low && p.nu_low <= p.nu_high && p.nu_high <= 1.0,
                            "0 <= nu_low <= nu_high <= 1");
                       break;
                     case JumpMeasure::power: need(p.nu_shape > 0.0, "nu_shape > 0"); break;
                   }
                 },
                 [&](const SwitchedLinearParams& p) {
                   need(p.alpha > 0.0, "alpha > 0");
                   need(p.r > 0.0, "r > 0");
                 },
                 [&](const Dim1Params& p) {
                   need(p.alpha0 > 0.0 && p.alpha1 > 0.0, "alpha0 > 0 and alpha1 > 0");
                   need(p.lambda0 > 0.0 && p.lambda1 > 0.0, "lambda0 > 0 and lambda1 > 0");
                 },
                 [&](const PlanarRotationParams& p) {
                   need(p.lambda0 > 0.0 && p.lambda1 > 0.0, "lambda0 > 0 and lambda1 > 0");
                 },
                 [&](const TelegraphParams& p) {
                   need(p.a > 0.0, "a > 0");
                   need(p.a < p.b, "a < b");
                 },
                 [&](const MorrisLecarParams& p) {
                   need(p.channels >= 1, "channel count K >= 1");
                   need(p.channels <= 10000, "channel count K <= 10000");
                   need(p.capacitance > 0.0, "capacitance C > 0");
                   need(p.g[0] > 0.0 && p.g[1] > 0.0 && p.g[2] > 0.0, "conductances g1, g2, g3 > 0");
                   need(p.v_scale[0] > 0.0 && p.v_scale[1] > 0.0, "v1_scale, v2_scale > 0");
                   need(p.c[0] > 0.0 && p.c[1] > 0.0, "c1, c2 > 0");
                   bool finite = true;
                   for (double x : {p.capacitance, p.current, p.g[0], p.g[1], p.g[2], p.v[0], p.v[1], p.v[2],
                                    p.c[0], p.c[1], p.v_mid[0], p.v_mid[1], p.v_scale[0], p.v_scale[1]})
                     finite = finite && std::isfinite(x);
                   need(finite, "finite Morris-Lecar parameters");
                   if (!out.empty()) return;
                   try {
                     voltage_segment(p);
                   } catch (const Error& e) {
                     out.push_back(e.what());
                   }
                 },
             },
             spec);
  return out;
}

void validate(const ModelSpec& spec) {
  const auto problems = constraint_violations(spec);
  if (problems.empty()) return;
  std::string what = variant_tag(spec) + ": ";
  for (std::size_t k = 0; k < problems.size(); ++k) what += (k ? "; " : "") + problems[k];
  fail(ErrorCode::domain_error, what);
}

PdmpModel build_model(const ModelSpec& spec) {
  validate(spec);
  return std::visit([](const auto& p) { return build(p); }, spec);
}

std::vector<std::string> model_keys(std::string_view tag) {
  if (tag == "storage") return {"alpha", "beta"};
  if (tag == "bandit") return {"p", "q", "g"};
  if (tag == "tcp") return {"lambda"};
  if (tag == "aimd")
    return {"rate_base", "rate_slope", "rate_power", "nu", "nu_value", "nu_low", "nu_high", "nu_shape"};
  if (tag == "switched-linear") return {"alpha", "r"};
  if (tag == "dim1") return {"alpha0", "alpha1", "lambda0", "lambda1"};
  if (tag == "planar-rotation") return {"lambda0", "lambda1"};
  if (tag == "telegraph") return {"a", "b"};
  if (tag == "morris-lecar")
    return {"capacitance", "current", "g1",      "g2",      "g3",       "v1",       "v2",      "v3",
            "c1",          "c2",      "v1_mid",  "v2_mid",  "v1_scale", "v2_scale", "channels"};
  fail(ErrorCode::parse_error, "unknown model variant `" + std::string(tag) + "`");
}

std::vector<std::string> required_model_keys(std::string_view tag) {
  if (tag == "aimd") return {"rate_base", "nu"};
  return model_keys(tag);
}

ModelSpec model_spec_from_keys(std::string_view tag, const KeyValues& v, bool defaults) {
  auto num = [&](const std::string& key, double fallback) { return number(v, key, fallback, defaults); };
  ModelSpec spec;
  if (tag == "storage") {
    StorageParams d;
    spec = StorageParams{num("alpha", d.alpha), num("beta", d.beta)};
  } else if (tag == "bandit") {
    BanditParams d;
    spec = BanditParams{num("p", d.p), num("q", d.q), num("g", d.g)};
  } else if (tag == "tcp") {
    spec = TcpParams{num("lambda", TcpParams{}.lambda)};
  } else if (tag == "aimd") {
    // Optional keys: the shape of nu decides which of them matter.
    AimdParams p;
    p.rate_base = number(v, "rate_base", p.rate_base, true);
    p.rate_slope = number(v, "rate_slope", p.rate_slope, true);
    p.rate_power = number(v, "rate_power", p.rate_power, true);
    if (auto it = v.find("nu"); it != v.end()) {
      const std::string& kind = it->second.text;
      if (kind == "dirac") p.measure = JumpMeasure::dirac;
      else if (kind == "uniform") p.measure = JumpMeasure::uniform;
      else if (kind == "power") p.measure = JumpMeasure::power;
      else
        fail(ErrorCode::parse_error, "line " + std::to_string(it->second.line) +
                                         ": nu must be dirac, uniform or power");
    }
    p.nu_value = number(v, "nu_value", p.nu_value, true);
    p.nu_low = number(v, "nu_low", p.nu_low, true);
    p.nu_high = number(v, "nu_high", p.nu_high, true);
    p.nu_shape = number(v, "nu_shape", p.nu_shape, true);
    spec = p;
  } else if (tag == "switched-linear") {
    SwitchedLinearParams d;
    spec = SwitchedLinearParams{num("alpha", d.alpha), num("r", d.r)};
  } else if (tag == "dim1") {
    Dim1Params d;
    spec = Dim1Params{num("alpha0", d.alpha0), num("alpha1", d.alpha1), num("lambda0", d.lambda0),
                      num("lambda1", d.lambda1)};
  } else if (tag == "planar-rotation") {
    PlanarRotationParams d;
    spec = PlanarRotationParams{num("lambda0", d.lambda0), num("lambda1", d.lambda1)};
  } else if (tag == "telegraph") {
    TelegraphParams d;
    spec = TelegraphParams{num("a", d.a), num("b", d.b)};
  } else if (tag == "morris-lecar") {
    MorrisLecarParams p;
    p.capacitance = num("capacitance", p.capacitance);
    p.current = num("current", p.current);
    p.g = {num("g1", p.g[0]), num("g2", p.g[1]), num("g3", p.g[2])};
    p.v = {num("v1", p.v[0]), num("v2", p.v[1]), num("v3", p.v[2])};
    p.c = {num("c1", p.c[0]), num("c2", p.c[1])};
    p.v_mid = {num("v1_mid", p.v_mid[0]), num("v2_mid", p.v_mid[1])};
    p.v_scale = {num("v1_scale", p.v_scale[0]), num("v2_scale", p.v_scale[1])};
    const double k = num("channels", p.channels);
    if (k != std::floor(k) || std::abs(k) > 1e9)
      fail(ErrorCode::parse_error, "channels must be an integer");
    p.channels = static_cast<int>(k);
    spec = p;
  } else {
    model_keys(tag);  // throws
  }
  return spec;
}

std::string to_text(const ModelSpec& spec) {
  std::ostringstream os;
  auto line = [&](const std::string& key, double value) { os << key << " = " << detail::format_double(value) << '\n'; };
  os << "variant = " << variant_tag(spec) << '\n';
  std::visit(overloaded{
                 [&](const StorageParams& p) {
                   line("alpha", p.alpha);
                   line("beta", p.beta);
                 },
                 [&](const BanditParams& p) {
                   line("p", p.p);
                   line("q", p.q);
                   line("g", p.g);
                 },
                 [&](const TcpParams& p) { line("lambda", p.lambda); },
                 [&](const AimdParams& p) {
                   line("rate_base", p.rate_base);
                   line("rate_slope", p.rate_slope);
                   line("rate_power", p.rate_power);
                   os << "nu = " << measure_name(p.measure) << '\n';
                   line("nu_value", p.nu_value);
                   line("nu_low", p.nu_low);
                   line("nu_high", p.nu_high);
                   line("nu_shape", p.nu_shape);
                 },
                 [&](const SwitchedLinearParams& p) {
                   line("alpha", p.alpha);
                   line("r", p.r);
                 },
                 [&](const Dim1Params& p) {
                   line("alpha0", p.alpha0);
                   line("alpha1", p.alpha1);
                   line("lambda0", p.lambda0);
                   line("lambda1", p.lambda1);
                 },
                 [&](const PlanarRotationParams& p) {
                   line("lambda0", p.lambda0);
                   line("lambda1", p.lambda1);
                 },
                 [&](const TelegraphParams& p) {
                   line("a", p.a);
                   line("b", p.b);
                 },
                 [&](const MorrisLecarParams& p) {
                   line("capacitance", p.capacitance);
                   line("current", p.current);
                   line("g1", p.g[0]);
                   line("g2", p.g[1]);
                   line("g3", p.g[2]);
                   line("v1", p.v[0]);
                   line("v2", p.v[1]);
                   line("v3", p.v[2]);
                   line("c1", p.c[0]);
                   line("c2", p.c[1]);
                   line("v1_mid", p.v_mid[0]);
                   line("v2_mid", p.v_mid[1]);
                   line("v1_scale", p.v_scale[0]);
                   line("v2_scale", p.v_scale[1]);
                   os << "channels = " << p.channels << '\n';
                 },
             },
             spec);
  return os.str();
}

ModelSpec parse_model_spec(std::string_view text) {
  KeyValues values = detail::parse_key_values(text);
  const auto tag_it = values.find("variant");
  if (tag_it == values.end()) fail(ErrorCode::parse_error, "missing required key `variant`");
  const std::string tag = tag_it->second.text;
  const auto keys = model_keys(tag);
  for (const auto& [key, value] : values) {
    if (key == "variant") continue;
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      fail(ErrorCode::parse_error, "line " + std::to_string(value.line) + ": unknown key `" + key + "` for variant " + tag);
  }
  ModelSpec spec = model_spec_from_keys(tag, values);
  validate(spec);
  return spec;
}

ChannelRates morris_lecar_rates(double voltage, int channel, const MorrisLecarParams& params) {
  require(channel == 1 || channel == 2, "Morris-Lecar channel index must be 1 or 2");
  const auto i = static_cast<std::size_t>(channel - 1);
  require(params.v_scale[i] > 0.0, "Morris-Lecar scale V'' must be positive");
  const double z = (voltage - params.v_mid[i]) / params.v_scale[i];
  const double envelope = params.c[i] * std::cosh(0.5 * z);
  const double t = std::tanh(z);
  return ChannelRates{envelope * (1.0 + t), envelope * (1.0 - t)};
}

Interval voltage_segment(const MorrisLecarParams& p) {
  const double hi = std::max({p.v[0], p.v[1], p.v[2] + (p.current + 1.0) / p.g[2]});
  const Interval seg{0.0, hi};
  // Every field must point into the segment at both ends.
  for (int n1 : {0, p.channels})
    for (int n2 : {0, p.channels}) {
      check(morris_lecar_field(seg.lo, n1, n2, p) >= 0.0, "fields pointing inward at V = 0 (I + sum g_i u_i V_i >= 0)");
      check(morris_lecar_field(seg.hi, n1, n2, p) <= 0.0, "fields pointing inward at the upper end of the voltage segment");
    }
  return seg;
}

std::size_t morris_lecar_mode(int open1, int open2, int channels) {
  return static_cast<std::size_t>(open1) * static_cast<std::size_t>(channels + 1) + static_cast<std::size_t>(open2);
}

std::pair<int, int> morris_lecar_occupancy(std::size_t mode, int channels) {
  const auto width = static_cast<std::size_t>(channels + 1);
  return {static_cast<int>(mode / width), static_cast<int>(mode % width)};
}

double morris_lecar_field(double voltage, int open1, int open2, const MorrisLecarParams& p) {
  const double u1 = static_cast<double>(open1) / p.channels, u2 = static_cast<double>(open2) / p.channels;
  const double ionic = p.g[0] * u1 * (voltage - p.v[0]) + p.g[1] * u2 * (voltage - p.v[1]) + p.g[2] * (voltage - p.v[2]);
  return (p.current - ionic) / p.capacitance;
}

WorstCycle worst_trajectory_cycle(double alpha) {
  require(alpha > 0.0, "worst_trajectory_cycle requires alpha > 0");
  const double root = std::sqrt(1.0 + 4.0 * alpha * alpha);
  WorstCycle w{};
  w.gamma_plus = (1.0 + root) / (2.0 * alpha);
  w.gamma_minus = (1.0 - root) / (2.0 * alpha);
  w.t1 = w.gamma_plus;
  w.t2 = w.t1 + w.gamma_plus - w.gamma_minus;
  w.t3 = w.t2 - w.gamma_minus;
  const double gp = w.gamma_plus;
  w.at_t1 = {gp * std::exp(-alpha * gp), std::exp(-alpha * gp)};
  const double e2 = std::exp(-alpha * (2.0 * gp - w.gamma_minus));
  w.at_t2 = {gp * e2, -gp * gp * e2};
  w.terminal = {0.0, -gp * gp * std::exp(-2.0 * alpha * (gp - w.gamma_minus))};
  w.growth = std::abs(w.terminal[1]);
  return w;
}

HybridState follow_schedule(const PdmpModel& model, HybridState state, std::span<const ModeSegment> schedule) {
  for (const ModeSegment& seg : schedule) {
    state.set_mode(seg.mode);
    state = advance_flow(model, state, seg.duration);
  }
  return state;
}

HybridState simulate_worst_trajectory(double alpha) {
  const WorstCycle w = worst_trajectory_cycle(alpha);
  const PdmpModel model = build_model(SwitchedLinearParams{alpha, 1.0});
  const std::array<ModeSegment, 3> schedule{
      ModeSegment{0, w.t1}, ModeSegment{1, w.t2 - w.t1}, ModeSegment{0, w.t3 - w.t2}};
  return follow_schedule(model, HybridState({0.0, 1.0}, 0), schedule);
}

}  // namespace pdmp
