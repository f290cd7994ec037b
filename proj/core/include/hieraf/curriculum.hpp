#ifndef HIERAF_CURRICULUM_HPP_
#define HIERAF_CURRICULUM_HPP_

#include <cstdint>
#include <vector>

namespace hieraf {

struct CurriculumConfig {
  int period = 1;  // episodes per schedule step

  void validate() const;  // RangeError unless period >= 1
};

struct Conditions {
  double distance_cm = 0.0;
  double illuminance_lx = 0.0;
  friend bool operator==(const Conditions&, const Conditions&) = default;
};

// 140, 145, ..., 200 cm.
const std::vector<double>& curriculum_distances();
// One period of the illuminance triangle wave: 13, 23, ..., 293, 300,
// 293, ..., 23 lx.
const std::vector<double>& curriculum_illuminances();
// Schedule steps after which the (distance, illuminance) pair repeats.
std::int64_t curriculum_cycle();

// Every `period` episodes the distance advances one grid cell and the
// illuminance one phase of its triangle wave. Episode 0 maps to (140, 13).
Conditions curriculum(const CurriculumConfig& config, std::int64_t episode);

}  // namespace hieraf

#endif  // HIERAF_CURRICULUM_HPP_
