#include <charconv>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "pdmp/error.hpp"
#include "pdmp/experiment.hpp"
#include "text_util.hpp"

namespace pdmp {

namespace {

enum class KeyType { integer, number, list, text };

struct KeyRule {
  const char* key;
  KeyType type;
  bool required;
};

struct KindInfo {
  ExperimentKind kind;
  const char* tag;
  bool needs_model;
  std::vector<KeyRule> keys;
};

const std::vector<KindInfo>& kinds() {
  static const std::vector<KindInfo> table = {
      {ExperimentKind::simulate,
       "simulate",
       true,
       {{"x0", KeyType::list, false},
        {"mode0", KeyType::integer, false},
        {"times", KeyType::list, false},
        {"horizon", KeyType::number, false},
        {"samples", KeyType::integer, true}}},
      {ExperimentKind::couple,
       "couple",
       true,
       {{"coupling", KeyType::text, true},
        {"x", KeyType::list, true},
        {"y", KeyType::list, true},
        {"x_mode", KeyType::integer, false},
        {"y_mode", KeyType::integer, false},
        {"times", KeyType::list, true},
        {"powers", KeyType::list, false},
        {"samples", KeyType::integer, true}}},
      {ExperimentKind::invariant_check,
       "invariant-check",
       true,
       {{"x0", KeyType::list, true},
        {"mode0", KeyType::integer, false},
        {"horizon", KeyType::number, true},
        {"bins", KeyType::integer, false},
        {"samples", KeyType::integer, true}}},
      {ExperimentKind::moments,
       "moments",
       true,
       {{"x0", KeyType::list, true},
        {"times", KeyType::list, true},
        {"orders", KeyType::list, false},
        {"stationary_time", KeyType::number, false},
        {"stationary_orders", KeyType::list, false},
        {"samples", KeyType::integer, true}}},
      {ExperimentKind::lyapunov,
       "lyapunov",
       false,
       {{"alpha", KeyType::list, true},
        {"r", KeyType::list, true},
        {"horizon", KeyType::number, true},
        {"samples", KeyType::integer, false}}},
      {ExperimentKind::stability,
       "stability",
       false,
       {{"alpha", KeyType::list, true}, {"random_checks", KeyType::integer, false}}},
      {ExperimentKind::gcurve,
       "gcurve",
       false,
       {{"r", KeyType::list, true}, {"search_lo", KeyType::number, false}, {"search_hi", KeyType::number, false}}},
      {ExperimentKind::eigen,
       "eigen",
       false,
       {{"max_order", KeyType::integer, false}, {"lambda", KeyType::number, false}}},
      {ExperimentKind::property_suite, "property-suite", false, {{"samples", KeyType::integer, false}}},
  };
  return table;
}

const KindInfo& info(ExperimentKind kind) {
  for (const auto& k : kinds())
    if (k.kind == kind) return k;
  fail(ErrorCode::contract_violation, "unknown experiment kind");
}

std::string at_line(int line) { return line > 0 ? "line " + std::to_string(line) + ": " : ""; }

std::vector<double> parse_list(const ConfigValue& v, const std::string& key) {
  std::vector<double> out;
  std::string_view rest = v.text;
  while (true) {
    const auto comma = rest.find(',');
    out.push_back(detail::parse_double(rest.substr(0, comma), key, v.line));
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return out;
}

}  // namespace

std::string to_string(ExperimentKind kind) { return info(kind).tag; }

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  cfg.entries = detail::parse_key_values(text);
  const KeyValues& e = cfg.entries;
  std::vector<std::string> problems;
  auto line_of = [&](const std::string& key) {
    const auto it = e.find(key);
    return it == e.end() ? 0 : it->second.line;
  };
  auto problem = [&](const std::string& key, const std::string& what) {
    problems.push_back(at_line(line_of(key)) + what);
  };

  // Kind and common keys.
  const KindInfo* kind = nullptr;
  if (auto it = e.find("kind"); it == e.end()) {
    problems.push_back("missing required key `kind`");
  } else {
    for (const auto& k : kinds())
      if (it->second.text == k.tag) kind = &k;
    if (!kind) problem("kind", "unknown experiment kind `" + it->second.text + "`");
  }
  if (auto it = e.find("seed"); it == e.end()) {
    problems.push_back("missing required key `seed`");
  } else {
    const std::string& s = it->second.text;
    std::uint64_t seed = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
    if (ec != std::errc() || end != s.data() + s.size())
      problem("seed", "`seed` expects a nonnegative 64-bit integer, got `" + s + "`");
    cfg.seed = seed;
  }
  if (auto it = e.find("name"); it != e.end()) cfg.name = it->second.text;
  if (auto it = e.find("output"); it != e.end()) {
    cfg.output = it->second.text;
    if (cfg.output.find('/') != std::string::npos) problem("output", "`output` must be a file prefix without '/'");
  }
  if (!kind) {
    std::string what = "invalid config";
    for (const auto& p : problems) what += "\n  " + p;
    fail(ErrorCode::parse_error, what);
  }
  cfg.kind = kind->kind;
  if (cfg.name.empty()) cfg.name = kind->tag;
  if (cfg.output.empty()) cfg.output = cfg.name;

  // Allowed keys: common, kind-specific and the model's.
  std::set<std::string> allowed = {"kind", "seed", "name", "output"};
  for (const auto& rule : kind->keys) allowed.insert(rule.key);
  std::string tag;
  if (kind->needs_model) {
    allowed.insert("variant");
    if (auto it = e.find("variant"); it == e.end()) {
      problems.push_back("missing required key `variant`");
    } else {
      tag = it->second.text;
      try {
        for (const auto& k : model_keys(tag)) allowed.insert(k);
        for (const auto& k : required_model_keys(tag))
          if (!e.count(k)) problems.push_back("missing required key `" + k + "` for variant " + tag);
      } catch (const Error&) {
        problem("variant", "unknown model variant `" + tag + "`");
        tag.clear();
      }
    }
  }
  for (const auto& [key, value] : e)
    if (!allowed.count(key))
      problems.push_back(at_line(value.line) + "unknown key `" + key + "` for kind " + kind->tag);

  // Typed kind-specific values.
  std::map<std::string, std::vector<double>> lists;
  std::map<std::string, double> numbers;
  for (const auto& rule : kind->keys) {
    const auto it = e.find(rule.key);
    if (it == e.end()) {
      if (rule.required) problems.push_back(std::string("missing required key `") + rule.key + "`");
      continue;
    }
    try {
      switch (rule.type) {
        case KeyType::list: lists[rule.key] = parse_list(it->second, rule.key); break;
        case KeyType::number: numbers[rule.key] = detail::parse_double(it->second.text, rule.key, it->second.line); break;
        case KeyType::integer: {
          const double v = detail::parse_double(it->second.text, rule.key, it->second.line);
          if (v != std::floor(v) || v < 0.0 || v > 1e15)
            problem(rule.key, std::string("`") + rule.key + "` expects a nonnegative integer");
          numbers[rule.key] = v;
          break;
        }
        case KeyType::text: break;
      }
    } catch (const Error& err) {
      problems.push_back(err.what());
    }
  }

  if (!tag.empty()) {
    try {
      const ModelSpec spec = model_spec_from_keys(tag, e, true);
      for (const auto& v : constraint_violations(spec)) problems.push_back(at_line(line_of("variant")) + tag + " " + v);
      cfg.model = spec;
    } catch (const Error& err) {
      problems.push_back(err.what());
    }
  }

  auto list = [&](const char* key) { return lists.count(key) ? lists[key] : std::vector<double>{}; };
  auto sorted_nonempty = [&](const char* key, bool strictly_positive) {
    if (!lists.count(key)) return;
    const auto& v = lists[key];
    if (!std::is_sorted(v.begin(), v.end())) problem(key, std::string("`") + key + "` must be sorted ascending");
    for (double x : v)
      if (!std::isfinite(x) || (strictly_positive && !(x > 0.0))) {
        problem(key, std::string("`") + key + "` entries must be finite and positive");
        break;
      }
  };
  if (numbers.count("samples")) {
    cfg.samples = static_cast<std::size_t>(numbers["samples"]);
    if (cfg.samples < 1) problem("samples", "requires samples >= 1");
    if (cfg.samples > (std::size_t{1} << 32)) problem("samples", "requires samples < 2^32");
  }
  if (numbers.count("horizon")) {
    cfg.horizon = numbers["horizon"];
    if (!(cfg.horizon > 0.0) || !std::isfinite(cfg.horizon)) problem("horizon", "requires horizon > 0");
  }
  sorted_nonempty("times", true);
  cfg.times = list("times");
  cfg.x0 = list("x0");
  if (cfg.kind == ExperimentKind::simulate) {
    // A bare horizon is a one-point time grid; with a grid it must be its last point.
    if (cfg.times.empty() && !numbers.count("horizon")) {
      problem("times", "simulate needs `times` or `horizon`");
    } else if (numbers.count("horizon") && cfg.horizon > 0.0) {
      if (cfg.times.empty())
        cfg.times = {cfg.horizon};
      else if (cfg.horizon != cfg.times.back())
        problem("horizon", "`horizon` must equal the last entry of `times`");
    }
  }
  cfg.x = list("x");
  cfg.y = list("y");
  cfg.orders = list("orders");
  cfg.stationary_orders = list("stationary_orders");
  cfg.powers = list("powers");
  sorted_nonempty("alpha", true);
  sorted_nonempty("r", true);
  cfg.alpha_grid = list("alpha");
  cfg.r_grid = list("r");
  if (numbers.count("mode0")) cfg.mode0 = static_cast<std::size_t>(numbers["mode0"]);
  if (numbers.count("x_mode")) cfg.x_mode = static_cast<std::size_t>(numbers["x_mode"]);
  if (numbers.count("y_mode")) cfg.y_mode = static_cast<std::size_t>(numbers["y_mode"]);
  if (numbers.count("bins")) cfg.bins = static_cast<std::size_t>(numbers["bins"]);
  if (numbers.count("random_checks")) cfg.random_checks = static_cast<std::size_t>(numbers["random_checks"]);
  if (numbers.count("max_order")) cfg.max_order = static_cast<int>(numbers["max_order"]);
  if (numbers.count("lambda")) cfg.lambda = numbers["lambda"];
  if (numbers.count("stationary_time")) cfg.stationary_time = numbers["stationary_time"];
  if (numbers.count("search_lo")) cfg.search_lo = numbers["search_lo"];
  if (numbers.count("search_hi")) cfg.search_hi = numbers["search_hi"];
  if (auto it = e.find("coupling"); it != e.end()) cfg.coupling = it->second.text;
  if (cfg.kind == ExperimentKind::lyapunov && cfg.samples == 0) cfg.samples = 1;
  if (cfg.kind == ExperimentKind::property_suite && cfg.samples == 0) cfg.samples = 100000;

  // Cross-field constraints.
  auto integral = [](const std::vector<double>& v, double lo) {
    return std::all_of(v.begin(), v.end(), [lo](double x) { return x == std::floor(x) && x >= lo && x <= 64; });
  };
  if (cfg.model && problems.empty()) {
    const PdmpModel model = build_model(*cfg.model);
    const bool positional = cfg.kind == ExperimentKind::simulate || cfg.kind == ExperimentKind::invariant_check;
    if (cfg.kind == ExperimentKind::simulate && cfg.x0.empty()) cfg.x0.assign(model.dim, 0.0);
    if (positional && cfg.x0.size() != model.dim)
      problem("x0", "`x0` needs " + std::to_string(model.dim) + " coordinate(s) for variant " + tag);
    if (positional && cfg.mode0 >= model.mode_count)
      problem("mode0", "requires mode0 < " + std::to_string(model.mode_count));
    if (cfg.kind == ExperimentKind::moments) {
      if (tag != "storage" && tag != "tcp") problem("variant", "moments supports storage and tcp");
      if (model.dim != 1) problem("variant", "moments needs a one-dimensional model");
      if (!integral(cfg.orders, 1)) problem("orders", "`orders` entries must be integers in [1, 64]");
      if (!integral(cfg.stationary_orders, 1))
        problem("stationary_orders", "`stationary_orders` entries must be integers in [1, 64]");
      if (tag == "storage" && (std::any_of(cfg.orders.begin(), cfg.orders.end(), [](double n) { return n != 1.0; }) ||
                               std::any_of(cfg.stationary_orders.begin(), cfg.stationary_orders.end(),
                                           [](double n) { return n != 1.0; })))
        problem("orders", "storage moments are available for order 1 only");
      if (cfg.stationary_time && !(*cfg.stationary_time > 0.0)) problem("stationary_time", "requires stationary_time > 0");
      if (!cfg.stationary_orders.empty() && !cfg.stationary_time)
        problem("stationary_orders", "`stationary_orders` needs `stationary_time`");
      for (double x : cfg.x0)
        if (x < 0.0) problem("x0", "moments require nonnegative starting points");
    }
    if (cfg.kind == ExperimentKind::couple) {
      const auto& c = cfg.coupling;
      if (c == "shared-noise") {
        if (tag != "storage" && tag != "tcp" && tag != "aimd") problem("coupling", "shared-noise supports storage, tcp and aimd");
      } else if (c == "tv-storage") {
        if (tag != "storage") problem("coupling", "tv-storage needs variant storage");
      } else if (c == "tv-tcp") {
        if (tag != "tcp") problem("coupling", "tv-tcp needs variant tcp");
      } else if (c == "switched") {
        if (tag != "dim1" && tag != "planar-rotation" && tag != "morris-lecar")
          problem("coupling", "switched supports dim1, planar-rotation and morris-lecar");
        if (cfg.x.size() != model.dim || cfg.y.size() != model.dim)
          problem("x", "switched coupling needs `x` and `y` with " + std::to_string(model.dim) + " coordinate(s)");
        if (cfg.x_mode >= model.mode_count || cfg.y_mode >= model.mode_count)
          problem("x_mode", "requires x_mode, y_mode < " + std::to_string(model.mode_count));
      } else {
        problem("coupling", "`coupling` must be shared-noise, tv-storage, tv-tcp or switched");
      }
      if (c != "switched") {
        if (cfg.x.size() != cfg.y.size()) problem("y", "`x` and `y` must list the same number of starting points");
        if (tag == "tcp" || tag == "aimd" || tag == "storage")
          for (double v : cfg.x) if (v < 0.0) { problem("x", "starting points must be nonnegative"); break; }
        if (tag == "tcp" || tag == "aimd" || tag == "storage")
          for (double v : cfg.y) if (v < 0.0) { problem("y", "starting points must be nonnegative"); break; }
      }
      for (double p : cfg.powers)
        if (!(p >= 1.0)) problem("powers", "`powers` entries must be >= 1");
    }
    if (cfg.kind == ExperimentKind::invariant_check) {
      if (tag != "storage" && tag != "dim1" && tag != "telegraph" && tag != "morris-lecar")
        problem("variant", "invariant-check supports storage, dim1, telegraph and morris-lecar");
      if (cfg.bins < 1) problem("bins", "requires bins >= 1");
      if (tag == "morris-lecar" && model.dim == 1 && !cfg.x0.empty()) {
        const Interval seg = voltage_segment(std::get<MorrisLecarParams>(*cfg.model));
        if (cfg.x0[0] < seg.lo || cfg.x0[0] > seg.hi) problem("x0", "morris-lecar containment needs x0 inside the voltage segment");
      }
    }
  }
  if (cfg.kind == ExperimentKind::gcurve && !(0.0 < cfg.search_lo && cfg.search_lo < cfg.search_hi))
    problem("search_lo", "requires 0 < search_lo < search_hi");
  if (cfg.kind == ExperimentKind::eigen) {
    if (cfg.max_order < 0 || cfg.max_order > 40) problem("max_order", "requires 0 <= max_order <= 40");
    if (!(cfg.lambda > 0.0)) problem("lambda", "requires lambda > 0");
  }
  if (cfg.kind == ExperimentKind::lyapunov && cfg.samples < 1) problem("samples", "requires samples >= 1");

  if (!problems.empty()) {
    std::string what = "invalid config";
    for (const auto& p : problems) what += "\n  " + p;
    fail(ErrorCode::parse_error, what);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io_error, "cannot read config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (const Error& e) {
    fail(e.code(), path + ": " + e.what());
  }
}

}  // namespace pdmp
