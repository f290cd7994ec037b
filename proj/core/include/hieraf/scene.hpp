#ifndef HIERAF_SCENE_HPP_
#define HIERAF_SCENE_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "hieraf/optics.hpp"

namespace hieraf {

inline constexpr int kSceneSize = 128;
inline constexpr int kBundledSceneCount = 8;

// Procedural scene: a low-contrast textured wall whose gray level dominates
// the histogram, plus a multi-level blocky object patch. Deterministic in
// `seed`. When `box` is given the object is placed there.
Plane procedural_reflectance(std::uint64_t seed, Rect* box_out,
                             std::optional<Rect> box = std::nullopt,
                             int size = kSceneSize);

Scene procedural_scene(std::uint64_t seed, double distance_cm,
                       double illuminance_lx,
                       std::optional<Rect> box = std::nullopt);

// The repository's fixed scene corpus (seeds 0..7) with per-seed default
// distance and illuminance.
std::vector<Scene> bundled_scenes();

// Scene descriptor: JSON object with keys
//   "proc_seed" (integer) or "reflectance_path" (PGM, value/255),
//   "box" ([x, y, w, h]; required with reflectance_path),
//   "distance_cm", "illuminance_lx".
// Relative reflectance paths resolve against the descriptor's directory.
Scene load_scene_descriptor(const std::filesystem::path& path);
Scene parse_scene_descriptor(const std::string& text,
                             const std::filesystem::path& base_dir = {});

}  // namespace hieraf

#endif  // HIERAF_SCENE_HPP_
