#include "hieraf/curriculum.hpp"

#include <numeric>

#include "hieraf/error.hpp"
#include "hieraf/optics.hpp"

namespace hieraf {

void CurriculumConfig::validate() const {
  if (period < 1) throw RangeError("curriculum period must be >= 1");
}

const std::vector<double>& curriculum_distances() {
  static const std::vector<double> grid = [] {
    std::vector<double> g;
    for (double d = kDistanceMinCm; d <= kDistanceMaxCm; d += 5.0) g.push_back(d);
    return g;
  }();
  return grid;
}

const std::vector<double>& curriculum_illuminances() {
  static const std::vector<double> wave = [] {
    std::vector<double> up;
    for (double e = kIlluminanceMinLx; e < kIlluminanceMaxLx; e += 10.0) up.push_back(e);
    std::vector<double> w = up;
    w.push_back(kIlluminanceMaxLx);
    for (std::size_t i = up.size() - 1; i >= 1; --i) w.push_back(up[i]);
    return w;
  }();
  return wave;
}

std::int64_t curriculum_cycle() {
  return std::lcm(static_cast<std::int64_t>(curriculum_distances().size()),
                  static_cast<std::int64_t>(curriculum_illuminances().size()));
}

Conditions curriculum(const CurriculumConfig& config, std::int64_t episode) {
  config.validate();
  if (episode < 0) throw RangeError("curriculum episode index must be non-negative");
  const std::int64_t step = episode / config.period;
  const auto& d = curriculum_distances();
  const auto& e = curriculum_illuminances();
  return {d[static_cast<std::size_t>(step % static_cast<std::int64_t>(d.size()))],
          e[static_cast<std::size_t>(step % static_cast<std::int64_t>(e.size()))]};
}

}  // namespace hieraf
