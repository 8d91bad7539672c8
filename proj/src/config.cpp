#include "config.hpp"

#include "jointsparse/functionals.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace jointsparse::app {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* want) {
  throw ConfigError("key '" + key + "': expected " + want + ", got '" + value + "'");
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0;
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end || !std::isfinite(x)) bad_value(key, v, "a finite number");
  return x;
}

Index to_index(const std::string& key, const std::string& v) {
  long long x = 0;
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end) bad_value(key, v, "an integer");
  return static_cast<Index>(x);
}

Index to_count(const std::string& key, const std::string& v, Index min) {
  const Index x = to_index(key, v);
  if (x < min) bad_value(key, v, min == 0 ? "a nonnegative integer" : "a positive integer");
  return x;
}

double to_positive(const std::string& key, const std::string& v) {
  const double x = to_double(key, v);
  if (!(x > 0)) bad_value(key, v, "a positive number");
  return x;
}

double to_nonnegative(const std::string& key, const std::string& v) {
  const double x = to_double(key, v);
  if (!(x >= 0)) bad_value(key, v, "a nonnegative number");
  return x;
}

using Str = const std::string&;
using Setter = std::function<void(RunConfig&, Str, Str)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"q", [](RunConfig& c, Str k, Str v) {
         try {
           c.q = parse_channel_norm(v);
         } catch (const ContractViolation&) {
           bad_value(k, v, "1, 2 or inf");
         }
       }},
      {"rho", [](RunConfig& c, Str k, Str v) { c.rho = to_nonnegative(k, v); }},
      {"rho_exponent", [](RunConfig& c, Str k, Str v) { c.rho_exponent = to_double(k, v); }},
      {"theta", [](RunConfig& c, Str k, Str v) {
         c.theta.clear();
         std::stringstream ss(v);
         std::string item;
         while (std::getline(ss, item, ',')) c.theta.push_back(to_positive(k, trim(item)));
         if (c.theta.empty()) bad_value(k, v, "a positive number or a comma-separated list");
       }},
      {"omega", [](RunConfig& c, Str k, Str v) { c.omega = to_positive(k, v); }},
      {"gamma", [](RunConfig& c, Str k, Str v) { c.gamma = to_positive(k, v); }},
      {"n_max", [](RunConfig& c, Str k, Str v) { c.n_max = to_count(k, v, 0); }},
      {"inner_iters", [](RunConfig& c, Str k, Str v) { c.inner_iters = to_count(k, v, 0); }},
      {"delta_target", [](RunConfig& c, Str k, Str v) { c.delta_target = to_positive(k, v); }},
      {"inner_step_tol",
       [](RunConfig& c, Str k, Str v) { c.inner_step_tol = to_nonnegative(k, v); }},
      {"outer_tol", [](RunConfig& c, Str k, Str v) { c.outer_tol = to_nonnegative(k, v); }},
      {"target_norm", [](RunConfig& c, Str k, Str v) {
         c.target_norm = to_positive(k, v);
         if (!(c.target_norm < 1)) bad_value(k, v, "a number in (0,1)");
       }},
      {"seed", [](RunConfig& c, Str k, Str v) {
         c.seed = static_cast<std::uint64_t>(to_count(k, v, 0));
       }},
      {"out", [](RunConfig& c, Str, Str v) { c.out = v; }},
      {"problem", [](RunConfig& c, Str, Str v) { c.problem = v; }},
      {"color", [](RunConfig& c, Str, Str v) { c.color = v; }},
      {"gray", [](RunConfig& c, Str, Str v) { c.gray = v; }},
      {"truth", [](RunConfig& c, Str, Str v) { c.truth = v; }},
      {"downsample", [](RunConfig& c, Str k, Str v) { c.downsample = to_count(k, v, 1); }},
      {"depth", [](RunConfig& c, Str k, Str v) {
         c.depth = static_cast<int>(to_count(k, v, 0));
       }},
      {"blur_sigma", [](RunConfig& c, Str k, Str v) { c.blur_sigma = to_positive(k, v); }},
      {"blur_radius", [](RunConfig& c, Str k, Str v) { c.blur_radius = to_count(k, v, 0); }},
      {"intensity_scale",
       [](RunConfig& c, Str k, Str v) { c.intensity_scale = to_positive(k, v); }},
      {"weight_luma", [](RunConfig& c, Str k, Str v) { c.weight_luma = to_positive(k, v); }},
      {"weight_chroma", [](RunConfig& c, Str k, Str v) { c.weight_chroma = to_positive(k, v); }},
      {"kind", [](RunConfig& c, Str k, Str v) {
         if (v != "mmv" && v != "image") bad_value(k, v, "mmv or image");
         c.kind = v;
       }},
      {"lambda_count", [](RunConfig& c, Str k, Str v) { c.lambda_count = to_count(k, v, 1); }},
      {"channels", [](RunConfig& c, Str k, Str v) { c.channels = to_count(k, v, 1); }},
      {"rows", [](RunConfig& c, Str k, Str v) { c.rows = to_count(k, v, 1); }},
      {"full_channels", [](RunConfig& c, Str k, Str v) { c.full_channels = to_count(k, v, 0); }},
      {"sparsity", [](RunConfig& c, Str k, Str v) { c.sparsity = to_count(k, v, 0); }},
      {"overlap", [](RunConfig& c, Str k, Str v) {
         c.overlap = to_nonnegative(k, v);
         if (c.overlap > 1) bad_value(k, v, "a fraction in [0,1]");
       }},
      {"noise", [](RunConfig& c, Str k, Str v) { c.noise = to_nonnegative(k, v); }},
      {"signal_scale", [](RunConfig& c, Str k, Str v) { c.signal_scale = to_nonnegative(k, v); }},
      {"image_side", [](RunConfig& c, Str k, Str v) { c.image_side = to_count(k, v, 1); }},
  };
  return table;
}

}  // namespace

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "tv")
    throw ConfigError(
        "key 'tv': the TV-augmented functional is not supported; it is a heuristic without a "
        "convergence analysis (see the README's non-goals)");
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown key '" + key + "'");
  it->second(cfg, key, value);
  if (key == "out") return;  // where results go does not change them
  for (auto& kv : cfg.echo)
    if (kv.first == key) {
      kv.second = value;
      return;
    }
  cfg.echo.emplace_back(key, value);
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    try {
      set_config_value(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), path.string());
}

RegularizationParams<double> RunConfig::params(const std::vector<int>& scales,
                                               Index nchannels) const {
  const auto n = static_cast<Index>(scales.size());
  if (theta.size() != 1 && static_cast<Index>(theta.size()) != n)
    throw ConfigError("theta lists " + std::to_string(theta.size()) + " values for " +
                      std::to_string(n) + " indices");
  RegularizationParams<double> p;
  p.q = q;
  p.channels = nchannels;
  p.theta.resize(n);
  p.rho.resize(n);
  p.omega = Weights<double>::Constant(n, omega);
  p.gamma = gamma ? *gamma : omega;
  for (Index l = 0; l < n; ++l) {
    p.theta[l] = theta.size() == 1 ? theta[0] : theta[static_cast<std::size_t>(l)];
    p.rho[l] = rho * std::exp2(-double(scales[static_cast<std::size_t>(l)]) * rho_exponent);
  }
  try {
    p.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(e.what());
  }
  return p;
}

void validate_certificates(const RegularizationParams<double>& p) {
  const auto c = check_convexity(p);
  if (!c.strict) {
    std::ostringstream os;
    os << "parameters fail the strict convexity condition: theta*omega = " << c.min_product
       << " at lambda=" << c.worst_index << ", required > kappa/4 = " << c.kappa / 4
       << " (q=" << to_string(p.q) << ", M=" << p.channels << ")";
    throw ConfigError(os.str());
  }
  const auto s = check_strong_rate(p);
  if (!s.ok) {
    std::ostringstream os;
    os << "parameters fail the outer-rate condition: theta*omega = " << s.sigma
       << " at lambda=" << s.worst_index << ", required > phi_q/4 = " << s.phi_q / 4
       << " (q=" << to_string(p.q) << ", M=" << p.channels << ")";
    throw ConfigError(os.str());
  }
}

}  // namespace jointsparse::app
