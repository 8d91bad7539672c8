#include "commands.hpp"

#include "telemetry_io.hpp"
#include "verify.hpp"

#include "jointsparse/solver.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

namespace jointsparse::app {

namespace {

Schedule<double> schedule_from(const RunConfig& cfg) {
  Schedule<double> s;
  s.n_max = cfg.n_max;
  s.inner_iters = cfg.inner_iters;
  s.delta_target = cfg.delta_target;
  s.inner_step_tol = cfg.inner_step_tol;
  s.outer_tol = cfg.outer_tol;
  return s;
}

void append_rates(HeaderLines& h, const SolverTelemetry<double>& t, double scale) {
  h.emplace_back("operator_scale", format_number(scale));
  h.emplace_back("residual_norm", format_number(t.rates.residual_norm));
  h.emplace_back("alpha", format_number(t.rates.alpha));
  h.emplace_back("beta", format_number(t.rates.beta));
  h.emplace_back("delta", format_number(t.rates.delta));
  h.emplace_back("inner_iters_used", std::to_string(t.rates.inner_iters));
}

MeasurementData<double> scaled(MeasurementData<double> g, double s) {
  for (auto& b : g) b *= s;
  return g;
}

Vector<double> column(const Coefficients<double>& u, Index c) { return u.col(c); }

double rms(const Vector<double>& a, const Vector<double>& b) {
  return (a - b).norm() / std::sqrt(static_cast<double>(a.size()));
}

void write_file_checked(const std::filesystem::path& path,
                        const std::function<void(std::ostream&)>& body) {
  auto out = open_output(path);
  body(out);
  out.flush();
  if (!out) throw std::runtime_error("write failed: '" + path.string() + "'");
}

struct ColorInputs {
  Index side = 0;
  Vector<double> luma;                   ///< full resolution, [0,1]
  Vector<double> i_low, q_low;           ///< side/downsample resolution
  std::optional<std::array<Vector<double>, 3>> truth;  ///< full-resolution YIQ
};

Vector<double> luma_of(const Image& img) {
  if (img.channels() == 1) return img.planes[0];
  return rgb_to_yiq(img)[0];
}

ColorInputs load_color_inputs(const RunConfig& cfg, Index side_hint) {
  ColorInputs in;
  std::optional<Image> color;
  if (!cfg.color.empty()) color = read_pnm(cfg.color);
  if (!cfg.gray.empty()) {
    const Image gray = read_pnm(cfg.gray);
    if (gray.width != gray.height)
      throw ConfigError("gray image must be square, got " + std::to_string(gray.width) + "x" +
                        std::to_string(gray.height));
    in.side = gray.width;
    in.luma = luma_of(gray);
  } else if (color) {
    if (color->width != color->height) throw ConfigError("color image must be square");
    in.side = color->width;
    in.luma = rgb_to_yiq(*color)[0];
  } else {
    color = synthetic_color_image(side_hint, cfg.seed);
    in.side = side_hint;
    in.luma = rgb_to_yiq(*color)[0];
  }

  if (!color) throw ConfigError("demo-color needs a color image (key 'color')");
  if (color->channels() != 3) throw ConfigError("color image must have three planes");
  const auto yiq = rgb_to_yiq(*color);
  const Index low = in.side / cfg.downsample;
  if (color->width == in.side && color->height == in.side) {
    in.truth = yiq;  // chroma data is synthesized from the full-resolution image
  } else if (color->width == low && color->height == low) {
    in.i_low = yiq[1];
    in.q_low = yiq[2];
  } else {
    throw ConfigError("color image is " + std::to_string(color->width) + "x" +
                      std::to_string(color->height) + "; expected " + std::to_string(in.side) +
                      " (full) or " + std::to_string(low) + " (downsampled)");
  }
  if (!cfg.truth.empty()) {
    const Image t = read_pnm(cfg.truth);
    if (t.width != in.side || t.height != in.side || t.channels() != 3)
      throw ConfigError("truth image must be a " + std::to_string(in.side) + "x" +
                        std::to_string(in.side) + " color image");
    in.truth = rgb_to_yiq(t);
  }
  return in;
}

}  // namespace

MmvSpec mmv_spec(const RunConfig& cfg) {
  MmvSpec s;
  s.lambda_count = cfg.lambda_count;
  s.channels = cfg.channels;
  s.rows = cfg.rows;
  s.full_channels = cfg.full_channels;
  s.sparsity = cfg.sparsity;
  s.overlap = cfg.overlap;
  s.noise = cfg.noise;
  s.signal_scale = cfg.signal_scale;
  s.target_norm = cfg.target_norm;
  s.seed = cfg.seed;
  return s;
}

SolveResult run_solve(const RunConfig& cfg) {
  if (cfg.problem.empty()) throw ConfigError("solve needs a problem file (key 'problem')");
  const MmvProblem prob = read_problem(cfg.problem);

  SolveResult res;
  res.params = cfg.params(prob.scales(), prob.channels);
  validate_certificates(res.params);

  OperatorPtr<double> op = prob.op();
  MeasurementData<double> g = prob.g;
  if (!(estimate_norm(*op).value < 1.0)) {
    auto r = rescale_to_contraction(op, cfg.target_norm);
    op = r.op;
    res.operator_scale = r.scale;
    g = scaled(std::move(g), r.scale);
  }

  res.solution = jointsparse(Problem<double>{op, g}, res.params, schedule_from(cfg));
  res.header = cfg.echo;
  res.header.emplace_back("command", "solve");
  append_rates(res.header, res.solution.telemetry, res.operator_scale);
  const double tn = prob.truth.norm();
  if (tn > 0) res.relative_error = (res.solution.u - prob.truth).norm() / tn;
  return res;
}

DemoResult run_demo(const RunConfig& cfg) {
  const ColorInputs in = load_color_inputs(cfg, cfg.image_side);
  const Index side = in.side;
  const double s = cfg.intensity_scale;
  if (!(s > 0)) throw ConfigError("intensity_scale must be > 0");

  auto haar = std::make_shared<const HaarSynthesis<double>>(side, cfg.depth);
  const Vector<double> kernel = gaussian_kernel(cfg.blur_sigma, cfg.blur_radius);
  const BlurDecimate<double> reduce(side, kernel, cfg.downsample);
  const std::array<double, 3> w{cfg.weight_luma, cfg.weight_chroma, cfg.weight_chroma};
  OperatorPtr<double> model =
      std::make_shared<BlockOperator<double>>(build_color_model(kernel, cfg.downsample, haar, w));

  Vector<double> i_low = in.i_low, q_low = in.q_low;
  if (i_low.size() == 0) {
    i_low = reduce.apply((*in.truth)[1]);
    q_low = reduce.apply((*in.truth)[2]);
  }
  MeasurementData<double> g{in.luma * (s * std::sqrt(w[0])), i_low * (s * std::sqrt(w[1])),
                            q_low * (s * std::sqrt(w[2]))};

  DemoResult res;
  const auto rescaled = rescale_to_contraction(model, cfg.target_norm);
  res.operator_scale = rescaled.scale;
  g = scaled(std::move(g), rescaled.scale);

  res.params = cfg.params(haar->scales(), 3);
  validate_certificates(res.params);

  Observers<double> obs;
  if (in.truth) {
    const auto& truth = *in.truth;
    auto record = [&res, &truth, haar, s](Index n, Index m, const Coefficients<double>& u) {
      const double ei = rms(haar->apply(column(u, 1)) / s, truth[1]);
      const double eq = rms(haar->apply(column(u, 2)) / s, truth[2]);
      res.errors.push_back({static_cast<double>(n), static_cast<double>(m), ei, eq});
    };
    obs.inner = record;
    obs.outer = [record](Index n, const Coefficients<double>& u, const Weights<double>&) {
      record(n, 0, u);
    };
  }
  res.solution = jointsparse(Problem<double>{rescaled.op, g}, res.params, schedule_from(cfg), obs);

  std::array<Vector<double>, 3> yiq;
  for (Index c = 0; c < 3; ++c) yiq[c] = haar->apply(column(res.solution.u, c)) / s;
  res.reconstruction = yiq_to_rgb(yiq, side, side);

  res.header = cfg.echo;
  res.header.emplace_back("command", "demo-color");
  res.header.emplace_back("side", std::to_string(side));
  append_rates(res.header, res.solution.telemetry, res.operator_scale);
  if (in.truth) {
    res.header.emplace_back("final_error_I", format_number(res.errors.back()[2]));
    res.header.emplace_back("final_error_Q", format_number(res.errors.back()[3]));
  }
  return res;
}

int cmd_gen(const RunConfig& cfg, std::ostream& log) {
  std::filesystem::create_directories(cfg.out);
  if (cfg.kind == "mmv") {
    const auto prob = make_mmv(mmv_spec(cfg));
    const auto path = cfg.out / "problem.json";
    write_problem(path, prob);
    log << "wrote " << path.string() << " (" << prob.lambda_count << " indices, "
        << prob.channels << " channels)\n";
    return kOk;
  }
  if (cfg.kind == "image") {
    const Image color = synthetic_color_image(cfg.image_side, cfg.seed);
    Image gray = Image::blank(color.width, color.height, 1);
    gray.planes[0] = rgb_to_yiq(color)[0];
    write_pnm(cfg.out / "color.ppm", color);
    write_pnm(cfg.out / "gray.pgm", gray);
    log << "wrote " << (cfg.out / "color.ppm").string() << " and "
        << (cfg.out / "gray.pgm").string() << '\n';
    return kOk;
  }
  throw ConfigError("unknown generator kind '" + cfg.kind + "' (expected mmv or image)");
}

int cmd_solve(const RunConfig& cfg, std::ostream& log) {
  const auto res = run_solve(cfg);
  std::filesystem::create_directories(cfg.out);
  write_file_checked(cfg.out / "telemetry.csv", [&](std::ostream& o) {
    write_telemetry_csv(o, res.solution.telemetry, res.header);
  });
  write_file_checked(cfg.out / "u.csv",
                     [&](std::ostream& o) { write_matrix_csv(o, res.solution.u); });
  write_file_checked(cfg.out / "v.csv",
                     [&](std::ostream& o) { write_matrix_csv(o, res.solution.v); });
  const auto& t = res.solution.telemetry;
  log << "outer passes " << t.outer.size() - 1 << ", inner steps " << t.inner_iterations
      << ", J = " << format_number(t.outer.back().objective_j) << '\n';
  if (res.relative_error) log << "relative error " << format_number(*res.relative_error) << '\n';
  return kOk;
}

int cmd_demo_color(const RunConfig& cfg, std::ostream& log) {
  const auto res = run_demo(cfg);
  std::filesystem::create_directories(cfg.out);
  write_pnm(cfg.out / "reconstruction.ppm", res.reconstruction);
  write_file_checked(cfg.out / "telemetry.csv", [&](std::ostream& o) {
    write_telemetry_csv(o, res.solution.telemetry, res.header);
  });
  if (!res.errors.empty()) {
    write_file_checked(cfg.out / "errors.csv", [&](std::ostream& o) {
      o << "n,m,rms_I,rms_Q\n";
      for (const auto& e : res.errors)
        o << static_cast<Index>(e[0]) << ',' << static_cast<Index>(e[1]) << ','
          << format_number(e[2]) << ',' << format_number(e[3]) << '\n';
    });
    log << "final chroma rms error I " << format_number(res.errors.back()[2]) << ", Q "
        << format_number(res.errors.back()[3]) << '\n';
  }
  log << "wrote " << (cfg.out / "reconstruction.ppm").string() << '\n';
  return kOk;
}

int cmd_rates(const RunConfig& cfg, std::ostream& log) {
  RegularizationParams<double> p;
  double residual = 1.0;
  std::string source = "assumed";
  if (!cfg.problem.empty()) {
    const auto prob = read_problem(cfg.problem);
    p = cfg.params(prob.scales(), prob.channels);
    OperatorPtr<double> op = prob.op();
    if (!(estimate_norm(*op).value < 1.0)) op = rescale_to_contraction(op, cfg.target_norm).op;
    residual = estimate_landweber_residual(*op).value;
    source = "estimated";
  } else {
    p = cfg.params(std::vector<int>(static_cast<std::size_t>(cfg.lambda_count), 0), cfg.channels);
  }

  const auto convex = check_convexity(p);
  const auto strong = check_strong_rate(p);
  log << "q=" << to_string(p.q) << '\n'
      << "min_theta_omega=" << format_number(convex.min_product) << '\n'
      << "kappa/4=" << format_number(convex.kappa / 4) << '\n'
      << "strictly_convex=" << (convex.strict ? "yes" : "no") << '\n'
      << "phi_q/4=" << format_number(strong.phi_q / 4) << '\n'
      << "strong_rate=" << (strong.ok ? "yes" : "no") << '\n'
      << "residual_norm=" << format_number(residual) << " (" << source << ")\n";
  if (!strong.ok) {
    log << "no certified rates for these parameters\n";
    return kFailed;
  }
  const auto alpha = rate_alpha(p.gamma, residual);
  const double beta = rate_beta(p, residual);
  const double delta = cfg.delta_target ? *cfg.delta_target : (1 + beta) / 2;
  log << "alpha=" << format_number(alpha.value) << (alpha.budget_risk ? " (close to 1)" : "")
      << '\n'
      << "beta=" << format_number(beta) << '\n'
      << "delta=" << format_number(delta) << '\n';
  if (cfg.inner_iters) {
    const double achieved =
        std::pow(alpha.value, static_cast<double>(*cfg.inner_iters)) * (1 + beta) + beta;
    log << "inner_iters=" << *cfg.inner_iters << " (configured, delta "
        << format_number(achieved) << ")\n";
  } else {
    log << "inner_iters=" << choose_inner_iters(alpha.value, beta, delta) << '\n';
  }
  return kOk;
}

int cmd_verify(const std::vector<std::string>& scopes, std::uint64_t seed, std::ostream& log) {
  if (scopes.empty()) {
    log << "verify: name at least one scope (prox, rates, stationarity)\n";
    return kUsage;
  }
  return run_verify(scopes, seed, log) ? kOk : kFailed;
}

}  // namespace jointsparse::app
