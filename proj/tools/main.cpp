#include "commands.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using jointsparse::app::RunConfig;

struct Overrides {
  std::string config;
  std::vector<std::string> set;  // key=value
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> q;
  std::optional<long long> downsample;
};

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config, "key = value configuration file");
  sub->add_option("--seed", o.seed, "random seed");
  sub->add_option("--out", o.out, "output directory");
  sub->add_option("--q", o.q, "channel norm: 1, 2 or inf");
  sub->add_option("--downsample", o.downsample, "chroma downsampling factor");
  sub->add_option("--set", o.set, "extra key=value settings")->take_all();
}

RunConfig resolve(const Overrides& o) {
  using jointsparse::app::set_config_value;
  RunConfig cfg = o.config.empty() ? RunConfig{} : jointsparse::app::load_config(o.config);
  for (const auto& kv : o.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw jointsparse::app::ConfigError("--set expects key=value, got '" + kv + "'");
    set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed) set_config_value(cfg, "seed", std::to_string(*o.seed));
  if (o.out) set_config_value(cfg, "out", *o.out);
  if (o.q) set_config_value(cfg, "q", *o.q);
  if (o.downsample) set_config_value(cfg, "downsample", std::to_string(*o.downsample));
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  namespace app = jointsparse::app;
  CLI::App cli{"Joint-sparsity recovery by alternating minimization"};
  cli.require_subcommand(1);

  Overrides gen_o, solve_o, demo_o, rates_o;
  auto* gen = cli.add_subcommand("gen", "write a synthetic problem or test image");
  add_common(gen, gen_o);
  auto* solve = cli.add_subcommand("solve", "solve a problem file");
  add_common(solve, solve_o);
  auto* demo = cli.add_subcommand("demo-color", "recover color from gray plus low-res chroma");
  add_common(demo, demo_o);
  auto* rates = cli.add_subcommand("rates", "print certificates and rate constants");
  add_common(rates, rates_o);

  auto* verify = cli.add_subcommand("verify", "run self-checks: prox, rates, stationarity");
  std::vector<std::string> scopes;
  std::uint64_t verify_seed = 1;
  verify->add_option("scopes", scopes, "scopes to run");
  verify->add_option("--seed", verify_seed, "random seed");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = cli.exit(e);
    return rc == 0 ? app::kOk : app::kUsage;
  }

  try {
    if (*gen) return app::cmd_gen(resolve(gen_o), std::cout);
    if (*solve) return app::cmd_solve(resolve(solve_o), std::cout);
    if (*demo) return app::cmd_demo_color(resolve(demo_o), std::cout);
    if (*rates) return app::cmd_rates(resolve(rates_o), std::cout);
    if (*verify) {
      const int rc = app::cmd_verify(scopes, verify_seed, std::cout);
      if (rc == app::kUsage) std::cerr << verify->help();
      return rc;
    }
  } catch (const app::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return app::kUsage;
  } catch (const std::invalid_argument& e) {  // includes contract violations
    std::cerr << "error: " << e.what() << '\n';
    return app::kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return app::kFailed;
  }
  return app::kUsage;
}
