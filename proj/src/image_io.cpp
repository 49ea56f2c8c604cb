#include "daccn/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "daccn/errors.hpp"

namespace daccn {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return in;
}

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in) {
  std::string tok;
  while (in >> tok) {
    if (tok[0] != '#') return tok;
    std::string rest;
    std::getline(in, rest);
  }
  throw Error("truncated image header");
}

std::int64_t header_int(std::istream& in) {
  const std::string tok = header_token(in);
  try {
    return std::stoll(tok);
  } catch (const std::exception&) {
    throw Error("bad image header field '" + tok + "'");
  }
}

}  // namespace

void write_ppm(const std::string& path, const Tensor& image) {
  const auto& s = image.shape();
  const bool ok = (s.size() == 3 && s[0] == 3) || (s.size() == 4 && s[0] == 1 && s[1] == 3);
  if (!ok) throw DimensionError("write_ppm: expected [3,H,W], got " + shape_to_string(s));
  const auto h = s[s.size() - 2], w = s[s.size() - 1];
  const auto plane = static_cast<std::size_t>(h * w);
  std::vector<unsigned char> bytes(plane * 3);
  const auto v = image.values();
  for (std::size_t p = 0; p < plane; ++p)
    for (std::size_t c = 0; c < 3; ++c)
      bytes[p * 3 + c] =
          static_cast<unsigned char>(std::lround(std::clamp(static_cast<double>(v[c * plane + p]), 0.0, 1.0) * 255));
  auto out = open_out(path);
  out << "P6\n" << w << " " << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path);
}

Tensor read_ppm(const std::string& path) {
  auto in = open_in(path);
  if (header_token(in) != "P6") throw Error(path + ": not a binary PPM");
  const auto w = header_int(in), h = header_int(in), maxval = header_int(in);
  if (w <= 0 || h <= 0 || maxval != 255) throw Error(path + ": unsupported PPM dimensions or maxval");
  in.get();  // single whitespace byte before the raster
  const auto plane = static_cast<std::size_t>(h * w);
  std::vector<unsigned char> bytes(plane * 3);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!in) throw Error(path + ": truncated PPM raster");
  std::vector<Real> values(plane * 3);
  for (std::size_t p = 0; p < plane; ++p)
    for (std::size_t c = 0; c < 3; ++c) values[c * plane + p] = static_cast<Real>(bytes[p * 3 + c]) / 255;
  return Tensor::from_values({3, h, w}, std::move(values));
}

void write_pfm(const std::string& path, const Tensor& map) {
  const auto& s = map.shape();
  if (s.size() < 2 || shape_numel(s) != s[s.size() - 2] * s[s.size() - 1])
    throw DimensionError("write_pfm: expected a single-channel map, got " + shape_to_string(s));
  const auto h = s[s.size() - 2], w = s[s.size() - 1];
  const auto v = map.values();
  std::vector<std::uint32_t> words(static_cast<std::size_t>(h * w));
  std::size_t k = 0;
  for (auto i = h - 1; i >= 0; --i)
    for (std::int64_t j = 0; j < w; ++j) {
      std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(v[static_cast<std::size_t>(i * w + j)]));
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
      words[k++] = bits;
    }
  auto out = open_out(path);
  out << "Pf\n" << w << " " << h << "\n-1.0\n";
  out.write(reinterpret_cast<const char*>(words.data()), static_cast<std::streamsize>(words.size() * 4));
  if (!out) throw Error("failed writing " + path);
}

Tensor read_pfm(const std::string& path) {
  auto in = open_in(path);
  if (header_token(in) != "Pf") throw Error(path + ": not a greyscale PFM");
  const auto w = header_int(in), h = header_int(in);
  const double scale = std::stod(header_token(in));
  if (w <= 0 || h <= 0 || scale == 0) throw Error(path + ": bad PFM header");
  in.get();
  std::vector<std::uint32_t> words(static_cast<std::size_t>(h * w));
  in.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(words.size() * 4));
  if (!in) throw Error(path + ": truncated PFM raster");
  const bool file_little = scale < 0;
  const bool swap = file_little != (std::endian::native == std::endian::little);
  std::vector<Real> values(words.size());
  std::size_t k = 0;
  for (auto i = h - 1; i >= 0; --i)
    for (std::int64_t j = 0; j < w; ++j) {
      std::uint32_t bits = words[k++];
      if (swap) bits = __builtin_bswap32(bits);
      values[static_cast<std::size_t>(i * w + j)] = static_cast<Real>(std::bit_cast<float>(bits));
    }
  return Tensor::from_values({1, 1, h, w}, std::move(values));
}

}  // namespace daccn
