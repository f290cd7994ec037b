#include "hieraf/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "hieraf/error.hpp"

namespace hieraf {

Plane procedural_reflectance(std::uint64_t seed, Rect* box_out,
                             std::optional<Rect> box, int size) {
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + 17);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Wall: a base gray with gentle shading and a faint fine texture.
  const double base = 0.38 + 0.14 * unit(rng);
  struct Wave {
    double fx, fy, phase, amp;
  };
  std::vector<Wave> waves;
  for (int i = 0; i < 3; ++i) {
    waves.push_back({(0.5 + 2.0 * unit(rng)) / size, (0.5 + 2.0 * unit(rng)) / size,
                     2.0 * std::numbers::pi * unit(rng), 0.015 + 0.01 * unit(rng)});
  }
  constexpr int kCell = 4;
  const int grid = size / kCell + 2;
  std::vector<double> lattice(static_cast<std::size_t>(grid) * grid);
  for (double& v : lattice) v = 0.03 * (unit(rng) - 0.5);

  Plane r(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      double v = base;
      for (const auto& w : waves) {
        v += w.amp * std::sin(2.0 * std::numbers::pi * (w.fx * x + w.fy * y) + w.phase);
      }
      const double gx = static_cast<double>(x) / kCell;
      const double gy = static_cast<double>(y) / kCell;
      const int ix = static_cast<int>(gx);
      const int iy = static_cast<int>(gy);
      const double tx = gx - ix;
      const double ty = gy - iy;
      auto l = [&](int i, int j) { return lattice[static_cast<std::size_t>(j) * grid + i]; };
      v += (1 - ty) * ((1 - tx) * l(ix, iy) + tx * l(ix + 1, iy)) +
           ty * ((1 - tx) * l(ix, iy + 1) + tx * l(ix + 1, iy + 1));
      r.at(x, y) = v;
    }
  }

  // Object: blocky patch over eight reflectance levels.
  Rect b;
  if (box) {
    b = *box;
  } else {
    std::uniform_int_distribution<int> extent(36, 48);
    b.w = extent(rng);
    b.h = extent(rng);
    std::uniform_int_distribution<int> px(8, size - 8 - b.w);
    std::uniform_int_distribution<int> py(8, size - 8 - b.h);
    b.x = px(rng);
    b.y = py(rng);
  }
  if (!b.inside(size, size)) throw RangeError("object box outside procedural scene");
  std::uniform_int_distribution<int> cell_size(4, 8);
  std::uniform_int_distribution<int> level(0, 7);
  const int cell = cell_size(rng);
  const int cols = (b.w + cell - 1) / cell;
  const int rows = (b.h + cell - 1) / cell;
  std::vector<double> levels(static_cast<std::size_t>(cols) * rows);
  for (std::size_t i = 0; i < levels.size(); ++i) {
    // Neighbouring cells always differ so every cell boundary is an edge.
    double v;
    do {
      v = 0.06 + 0.12 * level(rng);
    } while (i > 0 && v == levels[i - 1]);
    levels[i] = v;
  }
  for (int y = 0; y < b.h; ++y) {
    for (int x = 0; x < b.w; ++x) {
      r.at(b.x + x, b.y + y) = levels[static_cast<std::size_t>(y / cell) * cols + x / cell];
    }
  }

  // Multi-octave wall detail on its own stream; 2 px up to 32 px cells.
  std::mt19937_64 detail_rng(seed * 31 + 7);
  std::uniform_real_distribution<double> centred(-0.5, 0.5);
  for (int octave_cell = 2; octave_cell <= 32; octave_cell *= 2) {
    const int g = size / octave_cell + 2;
    std::vector<double> lat(static_cast<std::size_t>(g) * g);
    for (double& v : lat) v = centred(detail_rng);
    const double amp = 0.02 * std::pow(octave_cell / 2.0, 0.25);
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        if (x >= b.x && x < b.x + b.w && y >= b.y && y < b.y + b.h) continue;
        const double gx = static_cast<double>(x) / octave_cell;
        const double gy = static_cast<double>(y) / octave_cell;
        const int ix = static_cast<int>(gx);
        const int iy = static_cast<int>(gy);
        const double tx = gx - ix;
        const double ty = gy - iy;
        auto l = [&](int i, int j) { return lat[static_cast<std::size_t>(j) * g + i]; };
        r.at(x, y) += amp * ((1 - ty) * ((1 - tx) * l(ix, iy) + tx * l(ix + 1, iy)) +
                             ty * ((1 - tx) * l(ix, iy + 1) + tx * l(ix + 1, iy + 1)));
      }
    }
  }

  for (double& v : r.data()) v = std::clamp(v, 0.0, 1.0);
  if (box_out) *box_out = b;
  return r;
}

Scene procedural_scene(std::uint64_t seed, double distance_cm,
                       double illuminance_lx, std::optional<Rect> box) {
  Rect b;
  Plane r = procedural_reflectance(seed, &b, box);
  return Scene(std::move(r), b, distance_cm, illuminance_lx);
}

std::vector<Scene> bundled_scenes() {
  std::vector<Scene> scenes;
  scenes.reserve(kBundledSceneCount);
  for (int i = 0; i < kBundledSceneCount; ++i) {
    // Spread the defaults over the working ranges.
    const double distance = kDistanceMinCm + (kDistanceMaxCm - kDistanceMinCm) * ((i * 3) % 8) / 7.0;
    const double lux = kIlluminanceMinLx + (kIlluminanceMaxLx - kIlluminanceMinLx) * i / 7.0;
    scenes.push_back(procedural_scene(static_cast<std::uint64_t>(i), distance, lux));
  }
  return scenes;
}

Scene parse_scene_descriptor(const std::string& text,
                             const std::filesystem::path& base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("scene descriptor is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw IoError("scene descriptor must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key != "proc_seed" && key != "reflectance_path" && key != "box" &&
        key != "distance_cm" && key != "illuminance_lx") {
      throw IoError("unknown scene descriptor key '" + key + "'");
    }
  }
  try {
    const double distance = j.at("distance_cm").get<double>();
    const double lux = j.at("illuminance_lx").get<double>();
    std::optional<Rect> box;
    if (j.contains("box")) {
      const auto v = j.at("box").get<std::vector<int>>();
      if (v.size() != 4) throw IoError("box must be [x, y, w, h]");
      box = Rect{v[0], v[1], v[2], v[3]};
    }
    if (j.contains("proc_seed") == j.contains("reflectance_path")) {
      throw IoError("exactly one of proc_seed / reflectance_path is required");
    }
    if (j.contains("proc_seed")) {
      return procedural_scene(j.at("proc_seed").get<std::uint64_t>(), distance, lux, box);
    }
    if (!box) throw IoError("box is required with reflectance_path");
    std::filesystem::path p = j.at("reflectance_path").get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    const SensorImage img = read_pgm(p);
    Plane r = img.to_plane();
    for (double& v : r.data()) v /= 255.0;
    return Scene(std::move(r), *box, distance, lux);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("bad scene descriptor: ") + e.what());
  }
}

Scene load_scene_descriptor(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scene descriptor " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scene_descriptor(ss.str(), path.parent_path());
}

}  // namespace hieraf
