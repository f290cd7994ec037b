#ifndef HIERAF_DETECT_HPP_
#define HIERAF_DETECT_HPP_

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hieraf/image.hpp"
#include "hieraf/optics.hpp"

namespace hieraf {

struct DetectorThresholds {
  double sharp_min = 1.0;      // object-box Tenengrad
  double mean_lo = 25.0;       // object-box mean intensity window
  double mean_hi = 230.0;
  double contrast_min = 1.0;   // object-box intensity std

  // Throws RangeError when an invariant does not hold.
  void validate() const;
  friend bool operator==(const DetectorThresholds&, const DetectorThresholds&) = default;
};

inline constexpr int kWellExposedPeak = 100;
inline constexpr std::size_t kMinDetectorScenes = 5;

// Exposure index whose in-focus, noise-free render has its histogram peak
// closest to `target_peak` (ties to the lower index).
int well_exposed_index(const Scene& scene, int target_peak = kWellExposedPeak);

// Renders each scene in focus at its well-exposed index and sets
// sharp_min = 0.5 * min Tenengrad, contrast_min = 0.25 * min std,
// mean window [25, 230]. Throws CalibrationError below 5 scenes.
DetectorThresholds calibrate_detector(std::span<const Scene> scenes);

// Oracle rule: returns gt_box iff the box is sharp, reasonably exposed and
// has contrast.
std::optional<Rect> detect(const SensorImage& image, const Rect& gt_box,
                           const DetectorThresholds& th);

// Pluggable detector: image in, optional box out.
class ObjectDetector {
 public:
  virtual ~ObjectDetector() = default;
  virtual std::optional<Rect> detect(const SensorImage& image, const Rect& gt_box) const = 0;
};

class OracleDetector final : public ObjectDetector {
 public:
  explicit OracleDetector(DetectorThresholds th) : th_(th) { th_.validate(); }
  std::optional<Rect> detect(const SensorImage& image, const Rect& gt_box) const override {
    return hieraf::detect(image, gt_box, th_);
  }
  const DetectorThresholds& thresholds() const { return th_; }

 private:
  DetectorThresholds th_;
};

// Runs an external detector as a child process speaking a line protocol on
// its standard streams (protocol version 1):
//
//   child -> parent (once, at startup):  "hieraf-detector 1"
//   parent -> child (per frame):         "<absolute path to a P5 PGM>"
//   child -> parent (per frame):         "none"  or  "<x> <y> <w> <h>"
//
// The child exits when its standard input closes.
class ExternalProcessDetector final : public ObjectDetector {
 public:
  static constexpr int kProtocolVersion = 1;

  // `argv[0]` is resolved through PATH. Throws IoError if the process cannot
  // be started or does not greet with the expected protocol line.
  ExternalProcessDetector(std::vector<std::string> argv,
                          std::filesystem::path scratch_dir);
  ~ExternalProcessDetector() override;
  ExternalProcessDetector(const ExternalProcessDetector&) = delete;
  ExternalProcessDetector& operator=(const ExternalProcessDetector&) = delete;

  // Not thread-safe: one request in flight at a time.
  std::optional<Rect> detect(const SensorImage& image, const Rect& gt_box) const override;

 private:
  std::string read_line() const;

  std::filesystem::path scratch_dir_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  mutable std::string pending_;
  mutable unsigned long request_id_ = 0;
};

// Parses one response line; throws IoError on malformed input.
std::optional<Rect> parse_detector_response(const std::string& line);

}  // namespace hieraf

#endif  // HIERAF_DETECT_HPP_
