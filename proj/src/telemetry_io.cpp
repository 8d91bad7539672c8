#include "telemetry_io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <locale>
#include <ostream>

namespace jointsparse::app {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc()) throw std::runtime_error("format_number: conversion failed");
  return std::string(buf.data(), end);
}

void write_telemetry_csv(std::ostream& out, const SolverTelemetry<double>& t,
                         const HeaderLines& header) {
  for (const auto& [k, v] : header) out << "# " << k << '=' << v << '\n';
  out << kTelemetryColumns << '\n';
  auto row = [&out](Index n, Index m, double j, double k, double step, double ratio) {
    out << std::to_string(n) << ',' << std::to_string(m) << ',' << format_number(j) << ','
        << format_number(k) << ',' << format_number(step) << ',' << format_number(ratio) << '\n';
  };
  std::size_t i = 0;
  for (const auto& o : t.outer) {
    row(o.outer, 0, o.objective_j, o.objective_k, o.step_norm,
        std::numeric_limits<double>::quiet_NaN());
    for (; i < t.inner.size() && t.inner[i].outer == o.outer; ++i) {
      const auto& r = t.inner[i];
      row(r.outer, r.inner, r.objective_j, r.objective_k, r.step_norm, r.ratio);
    }
  }
}

void write_matrix_csv(std::ostream& out, const Matrix<double>& m) {
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << format_number(m(r, c));
    out << '\n';
  }
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out.imbue(std::locale::classic());
  return out;
}

}  // namespace jointsparse::app
