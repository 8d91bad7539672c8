#include "synthetic.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>

namespace jointsparse::app {

using nlohmann::json;

std::shared_ptr<const LinearOperator<double>> MmvProblem::op() const {
  std::vector<ScalarOperatorPtr<double>> diag;
  for (const auto& b : blocks) diag.push_back(std::make_shared<MatrixOperator<double>>(b));
  return std::make_shared<BlockOperator<double>>(BlockOperator<double>::diagonal(diag));
}

MmvProblem make_mmv(const MmvSpec& s) {
  if (s.lambda_count < 1 || s.channels < 1 || s.rows < 1)
    detail::violate("mmv: lambda_count, channels and rows must be positive");
  if (s.sparsity < 0 || s.sparsity > s.lambda_count)
    detail::violate("mmv: sparsity ", s.sparsity, " exceeds lambda_count ", s.lambda_count);
  if (!(s.overlap >= 0 && s.overlap <= 1)) detail::violate("mmv: overlap must lie in [0,1]");
  if (s.full_channels < 0 || s.full_channels > s.channels)
    detail::violate("mmv: full_channels must lie in [0, channels]");
  const Index shared = static_cast<Index>(std::lround(s.overlap * double(s.sparsity)));
  const Index own = s.sparsity - shared;
  if (shared + s.channels * own > s.lambda_count)
    detail::violate("mmv: ", s.channels, " supports of size ", s.sparsity, " with overlap ",
                    s.overlap, " do not fit in ", s.lambda_count, " indices");

  std::mt19937_64 rng(s.seed);
  std::normal_distribution<double> normal;

  std::vector<Index> perm(static_cast<std::size_t>(s.lambda_count));
  std::iota(perm.begin(), perm.end(), Index(0));
  std::shuffle(perm.begin(), perm.end(), rng);

  MmvProblem p;
  p.lambda_count = s.lambda_count;
  p.channels = s.channels;
  p.truth = Coefficients<double>::Zero(s.lambda_count, s.channels);
  for (Index l = 0; l < s.channels; ++l) {
    std::vector<Index> support(perm.begin(), perm.begin() + shared);
    const auto first = perm.begin() + shared + l * own;
    support.insert(support.end(), first, first + own);
    std::sort(support.begin(), support.end());
    for (Index i : support) p.truth(i, l) = s.signal_scale * normal(rng);
    p.supports.push_back(std::move(support));
  }

  for (Index l = 0; l < s.channels; ++l) {
    if (l < s.full_channels) {
      p.blocks.push_back(Matrix<double>::Identity(s.lambda_count, s.lambda_count));
      continue;
    }
    Matrix<double> a(s.rows, s.lambda_count);
    for (Index i = 0; i < a.size(); ++i) a.data()[i] = normal(rng);
    const MatrixOperator<double> block(a);
    const auto est = power_iteration<double>(
        [&block](const Coefficients<double>& x) {
          return Coefficients<double>(block.adjoint(block.apply(x)));
        },
        s.lambda_count, 1, 1000, 1e-12);
    a /= std::sqrt(est.raw);
    p.blocks.push_back(std::move(a));
  }

  const auto scaled = rescale_to_contraction<double>(p.op(), s.target_norm);
  p.scale = scaled.scale;
  for (auto& b : p.blocks) b *= p.scale;

  for (Index l = 0; l < s.channels; ++l) {
    Vector<double> y = p.blocks[static_cast<std::size_t>(l)] * p.truth.col(l);
    if (s.noise > 0)
      for (Index i = 0; i < y.size(); ++i) y[i] += s.noise * normal(rng);
    p.g.push_back(std::move(y));
  }
  return p;
}

namespace {

json to_json(const Vector<double>& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector<double> vector_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector<double>>(v.data(), static_cast<Index>(v.size()));
}

}  // namespace

void write_problem(const std::filesystem::path& path, const MmvProblem& p) {
  json j;
  j["format"] = "jointsparse-mmv-1";
  j["lambda_count"] = p.lambda_count;
  j["channels"] = p.channels;
  j["scale"] = p.scale;
  json blocks = json::array();
  for (const auto& b : p.blocks) {
    // Row-major entries.
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(b.size()));
    for (Index r = 0; r < b.rows(); ++r)
      for (Index c = 0; c < b.cols(); ++c) flat.push_back(b(r, c));
    blocks.push_back({{"rows", b.rows()}, {"cols", b.cols()}, {"entries", flat}});
  }
  j["blocks"] = blocks;
  json g = json::array();
  for (const auto& b : p.g) g.push_back(to_json(b));
  j["g"] = g;
  json truth = json::array();
  for (Index l = 0; l < p.truth.rows(); ++l) truth.push_back(to_json(p.truth.row(l).transpose()));
  j["truth"] = truth;
  j["supports"] = p.supports;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write problem file '" + path.string() + "'");
  out << j.dump(1) << '\n';
}

MmvProblem read_problem(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read problem file '" + path.string() + "'");
  MmvProblem p;
  try {
    const json j = json::parse(in);
    if (j.at("format") != "jointsparse-mmv-1")
      throw std::runtime_error("unsupported problem format");
    p.lambda_count = j.at("lambda_count").get<Index>();
    p.channels = j.at("channels").get<Index>();
    p.scale = j.at("scale").get<double>();
    for (const auto& b : j.at("blocks")) {
      const Index r = b.at("rows").get<Index>(), c = b.at("cols").get<Index>();
      const auto flat = b.at("entries").get<std::vector<double>>();
      if (static_cast<Index>(flat.size()) != r * c || c != p.lambda_count)
        throw std::runtime_error("block shape mismatch");
      p.blocks.push_back(
          Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
              flat.data(), r, c));
    }
    for (const auto& b : j.at("g")) p.g.push_back(vector_from(b));
    if (static_cast<Index>(p.blocks.size()) != p.channels || p.g.size() != p.blocks.size())
      throw std::runtime_error("expected one block and one data vector per channel");
    p.truth = Coefficients<double>::Zero(p.lambda_count, p.channels);
    if (j.contains("truth")) {
      const auto& t = j.at("truth");
      if (static_cast<Index>(t.size()) != p.lambda_count)
        throw std::runtime_error("truth has the wrong number of rows");
      for (Index l = 0; l < p.lambda_count; ++l) {
        const Vector<double> row = vector_from(t.at(static_cast<std::size_t>(l)));
        if (row.size() != p.channels) throw std::runtime_error("truth row length mismatch");
        p.truth.row(l) = row.transpose();
      }
    }
    if (j.contains("supports"))
      p.supports = j.at("supports").get<std::vector<std::vector<Index>>>();
  } catch (const json::exception& e) {
    throw std::runtime_error(path.string() + ": malformed problem file: " + e.what());
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  for (std::size_t l = 0; l < p.g.size(); ++l)
    if (p.g[l].size() != p.blocks[l].rows())
      throw std::runtime_error(path.string() + ": data block size mismatch");
  return p;
}

Image synthetic_color_image(Index side, std::uint64_t seed) {
  if (side < 1) detail::violate("synthetic image side must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Image img = Image::blank(side, side, 3);

  std::array<double, 3> c0{}, c1{};
  for (auto& c : c0) c = 0.2 + 0.5 * unit(rng);
  for (auto& c : c1) c = 0.2 + 0.5 * unit(rng);
  for (Index r = 0; r < side; ++r)
    for (Index c = 0; c < side; ++c) {
      const double t = double(r + c) / double(2 * side);
      for (std::size_t k = 0; k < 3; ++k) img.planes[k][r * side + c] = (1 - t) * c0[k] + t * c1[k];
    }

  const double s = double(side);
  for (int shape = 0; shape < 5; ++shape) {
    std::array<double, 3> color{};
    for (auto& c : color) c = unit(rng);
    const double cx = s * (0.15 + 0.7 * unit(rng)), cy = s * (0.15 + 0.7 * unit(rng));
    const double size = s * (0.08 + 0.15 * unit(rng));
    const bool disc = shape % 2 == 0;
    for (Index r = 0; r < side; ++r)
      for (Index c = 0; c < side; ++c) {
        const double dx = double(c) + 0.5 - cx, dy = double(r) + 0.5 - cy;
        const bool inside = disc ? dx * dx + dy * dy <= size * size
                                 : std::abs(dx) <= size && std::abs(dy) <= 0.6 * size;
        if (inside)
          for (std::size_t k = 0; k < 3; ++k) img.planes[k][r * side + c] = color[k];
      }
  }
  return img;
}

}  // namespace jointsparse::app
