#pragma once

// Binary 16-bit PGM frames with a key = value sidecar (<image>.meta) and CSV centroid tables.

#include "cqed/lattice.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cqed::lattice {

class ImageIoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline std::filesystem::path sidecar_path(const std::filesystem::path& image) {
  auto p = image;
  p += ".meta";
  return p;
}

/// Counts are rounded and clamped to [0, 65535]; samples are big-endian per the PGM format.
inline void write_pgm16(const std::filesystem::path& path, const AtomImage& img) {
  img.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageIoError("cannot open " + path.string() + " for writing");
  out << "P5\n" << img.width << ' ' << img.height << "\n65535\n";
  for (double c : img.counts) {
    const auto v = static_cast<std::uint16_t>(std::clamp(std::lround(c), 0L, 65535L));
    const char bytes[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xff)};
    out.write(bytes, 2);
  }
  std::ofstream meta(sidecar_path(path));
  if (!meta) throw ImageIoError("cannot write sidecar for " + path.string());
  meta.precision(17);
  meta << "width = " << img.width << '\n'
       << "height = " << img.height << '\n'
       << "pixel_scale_um = " << img.pixel_scale << '\n'
       << "exposure_s = " << img.exposure_s << '\n'
       << "background_counts = " << img.background << '\n'
       << "atom_amplitude_counts = " << img.amplitude << '\n';
}

namespace detail {
inline std::string next_token(std::istream& in) {
  std::string tok;
  while (in) {
    const int c = in.peek();
    if (c == '#') {
      std::string skip;
      std::getline(in, skip);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  in >> tok;
  return tok;
}
}  // namespace detail

inline AtomImage read_pgm16(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageIoError("cannot open " + path.string());
  if (detail::next_token(in) != "P5") throw ImageIoError(path.string() + ": not a binary PGM");
  AtomImage img;
  int maxval = 0;
  try {
    img.width = std::stoi(detail::next_token(in));
    img.height = std::stoi(detail::next_token(in));
    maxval = std::stoi(detail::next_token(in));
  } catch (const std::exception&) {
    throw ImageIoError(path.string() + ": malformed PGM header");
  }
  if (img.width <= 0 || img.height <= 0 || maxval <= 0 || maxval > 65535)
    throw ImageIoError(path.string() + ": unsupported PGM header");
  in.get();  // single whitespace before the raster
  const bool wide = maxval > 255;
  img.counts.resize(static_cast<std::size_t>(img.width) * img.height);
  for (double& c : img.counts) {
    unsigned char b[2] = {0, 0};
    in.read(reinterpret_cast<char*>(b), wide ? 2 : 1);
    if (!in) throw ImageIoError(path.string() + ": truncated raster");
    c = wide ? static_cast<double>((b[0] << 8) | b[1]) : static_cast<double>(b[0]);
  }

  std::ifstream meta(sidecar_path(path));
  if (meta) {
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(meta, line)) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
      };
      kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    auto num = [&](const char* key, double& dst) {
      if (auto it = kv.find(key); it != kv.end()) dst = std::stod(it->second);
    };
    num("pixel_scale_um", img.pixel_scale);
    num("exposure_s", img.exposure_s);
    num("background_counts", img.background);
    num("atom_amplitude_counts", img.amplitude);
  }
  return img;
}

inline void write_centroids_csv(std::ostream& out, const std::vector<PsfFit>& fits, double pixel_scale) {
  out << "atom,x_px,y_px,x_um,y_um,fwhm_x_px,fwhm_y_px,amplitude_counts,background_counts\n";
  char buf[256];
  for (std::size_t k = 0; k < fits.size(); ++k) {
    const auto& f = fits[k];
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f,%.6f,%.5f,%.5f,%.2f,%.3f\n", k, f.x_px, f.y_px,
                  f.x_px * pixel_scale, f.y_px * pixel_scale, f.fwhm_x_px, f.fwhm_y_px, f.amplitude,
                  f.background);
    out << buf;
  }
}

}  // namespace cqed::lattice
