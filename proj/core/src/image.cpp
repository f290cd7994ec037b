#include "hieraf/image.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <string>

#include "hieraf/error.hpp"

namespace hieraf {

double Plane::clamped(int x, int y) const {
  x = std::clamp(x, 0, width_ - 1);
  y = std::clamp(y, 0, height_ - 1);
  return data_[index(x, y)];
}

Plane SensorImage::to_plane() const {
  Plane plane(width_, height_);
  auto out = plane.data();
  for (std::size_t i = 0; i < pixels_.size(); ++i) out[i] = pixels_[i];
  return plane;
}

SensorImage SensorImage::crop(const Rect& region) const {
  SensorImage out(region.w, region.h);
  for (int y = 0; y < region.h; ++y) {
    for (int x = 0; x < region.w; ++x) {
      const int sx = region.x + x;
      const int sy = region.y + y;
      if (sx >= 0 && sy >= 0 && sx < width_ && sy < height_) {
        out.at(x, y) = at(sx, sy);
      }
    }
  }
  return out;
}

SensorImage pad_to_min(const SensorImage& image, int min_w, int min_h) {
  if (image.width() >= min_w && image.height() >= min_h) return image;
  return image.crop({0, 0, std::max(image.width(), min_w),
                     std::max(image.height(), min_h)});
}

void write_pgm(const std::filesystem::path& path, const SensorImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "P5\n" << image.width() << ' ' << image.height() << "\n255\n";
  const auto px = image.pixels();
  out.write(reinterpret_cast<const char*>(px.data()),
            static_cast<std::streamsize>(px.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

namespace {

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::istream& in) {
  std::string token;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(static_cast<char>(c));
  }
  return token;
}

int parse_dim(const std::string& token, const std::filesystem::path& path) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(token, &used);
    if (used != token.size() || v <= 0) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    throw IoError("bad PGM header field '" + token + "' in " + path.string());
  }
}

}  // namespace

SensorImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  if (next_token(in) != "P5") throw IoError("not a binary PGM: " + path.string());
  const int w = parse_dim(next_token(in), path);
  const int h = parse_dim(next_token(in), path);
  if (parse_dim(next_token(in), path) != 255) {
    throw IoError("only maxval 255 is supported: " + path.string());
  }
  // next_token consumed exactly one whitespace byte after maxval.
  SensorImage image(w, h);
  auto px = image.pixels();
  in.read(reinterpret_cast<char*>(px.data()),
          static_cast<std::streamsize>(px.size()));
  if (in.gcount() != static_cast<std::streamsize>(px.size())) {
    throw IoError("truncated PGM payload: " + path.string());
  }
  return image;
}

}  // namespace hieraf
