#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "capnet/errors.hpp"
#include "capnet/tensor.hpp"

namespace capnet {

// 8-bit binary PPM (P6). The one mandatory image format; everything in the
// core pipeline reads and writes these.
struct PpmImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel
};

namespace detail {
inline int ppm_next_token(std::istream& is, std::string& token) {
  token.clear();
  int c = is.get();
  while (c != EOF) {
    if (c == '#') {  // comment to end of line
      while (c != EOF && c != '\n') c = is.get();
      c = is.get();
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      if (!token.empty()) return c;
      c = is.get();
      continue;
    }
    token.push_back(static_cast<char>(c));
    c = is.get();
  }
  return EOF;
}
}  // namespace detail

inline PpmImage read_ppm(std::istream& is, const std::string& what = "<stream>") {
  std::string tok;
  detail::ppm_next_token(is, tok);
  if (tok != "P6") throw ParseError("not a P6 ppm: " + what);
  const auto read_int = [&](const char* field) -> std::size_t {
    if (detail::ppm_next_token(is, tok) == EOF && tok.empty())
      throw ParseError(std::string("ppm missing ") + field + ": " + what);
    try {
      const long v = std::stol(tok);
      if (v <= 0) throw std::out_of_range("");
      return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      throw ParseError(std::string("bad ppm ") + field + " '" + tok + "': " + what);
    }
  };
  PpmImage img;
  img.width = read_int("width");
  img.height = read_int("height");
  const std::size_t maxval = read_int("maxval");
  if (maxval != 255) throw ParseError("ppm maxval must be 255: " + what);
  img.rgb.resize(img.width * img.height * 3);
  is.read(reinterpret_cast<char*>(img.rgb.data()),
          static_cast<std::streamsize>(img.rgb.size()));
  if (static_cast<std::size_t>(is.gcount()) != img.rgb.size())
    throw ParseError("ppm pixel data truncated: " + what);
  return img;
}

inline PpmImage read_ppm_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path);
  return read_ppm(is, path);
}

inline void write_ppm(const PpmImage& img, std::ostream& os) {
  os << "P6\n" << img.width << " " << img.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(img.rgb.data()),
           static_cast<std::streamsize>(img.rgb.size()));
}

inline void write_ppm_file(const PpmImage& img, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for write: " + path);
  write_ppm(img, os);
  if (!os) throw IoError("write failed: " + path);
}

// Decoded image as a [3 x H x W] tensor with values in [0,1] (byte / 255),
// bilinearly resampled to the requested size when it differs.
inline Tensor image_to_tensor(const PpmImage& img, std::size_t out_h, std::size_t out_w) {
  Tensor out({3, out_h, out_w});
  if (img.width == out_w && img.height == out_h) {
    for (std::size_t y = 0; y < out_h; ++y)
      for (std::size_t x = 0; x < out_w; ++x)
        for (std::size_t c = 0; c < 3; ++c)
          out(c, y, x) = img.rgb[(y * img.width + x) * 3 + c] / 255.0;
    return out;
  }
  const double sy = static_cast<double>(img.height) / static_cast<double>(out_h);
  const double sx = static_cast<double>(img.width) / static_cast<double>(out_w);
  for (std::size_t y = 0; y < out_h; ++y) {
    const double fy = (y + 0.5) * sy - 0.5;
    const std::size_t y0 = fy <= 0.0 ? 0 : static_cast<std::size_t>(fy);
    const std::size_t y1 = y0 + 1 < img.height ? y0 + 1 : img.height - 1;
    const double wy = fy <= 0.0 ? 0.0 : fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < out_w; ++x) {
      const double fx = (x + 0.5) * sx - 0.5;
      const std::size_t x0 = fx <= 0.0 ? 0 : static_cast<std::size_t>(fx);
      const std::size_t x1 = x0 + 1 < img.width ? x0 + 1 : img.width - 1;
      const double wx = fx <= 0.0 ? 0.0 : fx - static_cast<double>(x0);
      for (std::size_t c = 0; c < 3; ++c) {
        const double p00 = img.rgb[(y0 * img.width + x0) * 3 + c];
        const double p01 = img.rgb[(y0 * img.width + x1) * 3 + c];
        const double p10 = img.rgb[(y1 * img.width + x0) * 3 + c];
        const double p11 = img.rgb[(y1 * img.width + x1) * 3 + c];
        const double top = p00 + (p01 - p00) * wx;
        const double bot = p10 + (p11 - p10) * wx;
        out(c, y, x) = (top + (bot - top) * wy) / 255.0;
      }
    }
  }
  return out;
}

inline Tensor load_image_tensor(const std::string& path, std::size_t out_h, std::size_t out_w) {
  return image_to_tensor(read_ppm_file(path), out_h, out_w);
}

}  // namespace capnet
