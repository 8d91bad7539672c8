#include "image_io.hpp"

#include <Eigen/LU>

#include <cmath>
#include <fstream>
#include <string>

namespace jointsparse::app {

namespace {

const Eigen::Matrix3d& yiq_matrix() {
  static const Eigen::Matrix3d m = (Eigen::Matrix3d() << 0.299, 0.587, 0.114,  //
                                    0.596, -0.274, -0.322,                      //
                                    0.211, -0.523, 0.312)
                                       .finished();
  return m;
}

const Eigen::Matrix3d& rgb_matrix() {
  static const Eigen::Matrix3d m = yiq_matrix().inverse();
  return m;
}

// Next header token, skipping whitespace and # comments.
std::string header_token(std::istream& in, const std::string& name) {
  std::string tok;
  int c = in.get();
  while (in) {
    if (c == '#') {
      while (in && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      if (!tok.empty()) return tok;
    } else {
      tok.push_back(static_cast<char>(c));
    }
    c = in.get();
  }
  if (tok.empty()) throw ImageError(name + ": truncated header");
  return tok;
}

Index header_number(std::istream& in, const std::string& name) {
  const std::string tok = header_token(in, name);
  try {
    std::size_t used = 0;
    const long long v = std::stoll(tok, &used);
    if (used != tok.size() || v <= 0) throw std::invalid_argument(tok);
    return static_cast<Index>(v);
  } catch (const std::exception&) {
    throw ImageError(name + ": bad header field '" + tok + "'");
  }
}

}  // namespace

Image Image::blank(Index width, Index height, Index channels) {
  Image img;
  img.width = width;
  img.height = height;
  img.planes.assign(static_cast<std::size_t>(channels), Vector<double>::Zero(width * height));
  return img;
}

Image read_pnm(const std::filesystem::path& path) {
  const std::string name = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageError("cannot open image '" + name + "'");
  const std::string magic = header_token(in, name);
  Index channels = 0;
  if (magic == "P6")
    channels = 3;
  else if (magic == "P5")
    channels = 1;
  else
    throw ImageError(name + ": only binary P5/P6 images are supported, got '" + magic + "'");
  const Index w = header_number(in, name), h = header_number(in, name);
  const Index maxval = header_number(in, name);
  if (maxval != 255) throw ImageError(name + ": only 8-bit images are supported");

  std::vector<unsigned char> raw(static_cast<std::size_t>(w * h * channels));
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size()))
    throw ImageError(name + ": truncated pixel data");

  Image img = Image::blank(w, h, channels);
  for (Index i = 0; i < w * h; ++i)
    for (Index c = 0; c < channels; ++c)
      img.planes[static_cast<std::size_t>(c)][i] =
          raw[static_cast<std::size_t>(i * channels + c)] / 255.0;
  return img;
}

void write_pnm(const std::filesystem::path& path, const Image& img) {
  const Index channels = img.channels();
  if (channels != 1 && channels != 3)
    throw ImageError("write_pnm needs one or three planes, got " + std::to_string(channels));
  for (const auto& p : img.planes)
    if (p.size() != img.width * img.height) throw ImageError("write_pnm: plane size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageError("cannot write image '" + path.string() + "'");
  out << (channels == 3 ? "P6" : "P5") << '\n' << img.width << ' ' << img.height << "\n255\n";
  std::vector<unsigned char> raw(static_cast<std::size_t>(img.width * img.height * channels));
  for (Index i = 0; i < img.width * img.height; ++i)
    for (Index c = 0; c < channels; ++c) {
      const double v = std::clamp(img.planes[static_cast<std::size_t>(c)][i], 0.0, 1.0);
      raw[static_cast<std::size_t>(i * channels + c)] =
          static_cast<unsigned char>(std::lround(v * 255.0));
    }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw ImageError("failed writing '" + path.string() + "'");
}

std::array<Vector<double>, 3> rgb_to_yiq(const Image& rgb) {
  if (rgb.channels() != 3) throw ImageError("rgb_to_yiq needs a three-plane image");
  const auto& m = yiq_matrix();
  std::array<Vector<double>, 3> out;
  for (int k = 0; k < 3; ++k)
    out[static_cast<std::size_t>(k)] =
        m(k, 0) * rgb.planes[0] + m(k, 1) * rgb.planes[1] + m(k, 2) * rgb.planes[2];
  return out;
}

Image yiq_to_rgb(const std::array<Vector<double>, 3>& yiq, Index width, Index height) {
  for (const auto& p : yiq)
    if (p.size() != width * height) throw ImageError("yiq_to_rgb: plane size mismatch");
  const auto& m = rgb_matrix();
  Image img = Image::blank(width, height, 3);
  for (int k = 0; k < 3; ++k)
    img.planes[static_cast<std::size_t>(k)] =
        m(k, 0) * yiq[0] + m(k, 1) * yiq[1] + m(k, 2) * yiq[2];
  return img;
}

}  // namespace jointsparse::app
