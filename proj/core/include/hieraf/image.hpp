#ifndef HIERAF_IMAGE_HPP_
#define HIERAF_IMAGE_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace hieraf {

// Axis-aligned integer rectangle in pixel units.
struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  bool inside(int width, int height) const {
    return x >= 0 && y >= 0 && w > 0 && h > 0 && x + w <= width &&
           y + h <= height;
  }
  friend bool operator==(const Rect&, const Rect&) = default;
};

// Row-major real-valued image plane.
class Plane {
 public:
  Plane() = default;
  Plane(int width, int height, double fill = 0.0)
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(width) * height, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }

  double& at(int x, int y) { return data_[index(x, y)]; }
  double at(int x, int y) const { return data_[index(x, y)]; }

  // Edge-replicated read; coordinates outside the plane clamp to the border.
  double clamped(int x, int y) const;

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

// 8-bit grayscale frame; the only thing agents ever observe.
class SensorImage {
 public:
  SensorImage() = default;
  SensorImage(int width, int height, std::uint8_t fill = 0)
      : width_(width), height_(height),
        pixels_(static_cast<std::size_t>(width) * height, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return pixels_.size(); }

  std::uint8_t& at(int x, int y) {
    return pixels_[static_cast<std::size_t>(y) * width_ + x];
  }
  std::uint8_t at(int x, int y) const {
    return pixels_[static_cast<std::size_t>(y) * width_ + x];
  }

  std::span<std::uint8_t> pixels() { return pixels_; }
  std::span<const std::uint8_t> pixels() const { return pixels_; }

  Plane to_plane() const;
  // Copy of the region; pixels outside the image are zero.
  SensorImage crop(const Rect& region) const;

  friend bool operator==(const SensorImage&, const SensorImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

// Zero-pads the image (anchored top-left) up to at least min_w x min_h.
SensorImage pad_to_min(const SensorImage& image, int min_w, int min_h);

// Binary PGM ("P5", maxval 255). Writes `P5\n<w> <h>\n255\n` then raw bytes.
void write_pgm(const std::filesystem::path& path, const SensorImage& image);
SensorImage read_pgm(const std::filesystem::path& path);

}  // namespace hieraf

#endif  // HIERAF_IMAGE_HPP_
