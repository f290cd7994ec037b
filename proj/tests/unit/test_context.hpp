#ifndef HIERAF_TESTS_TEST_CONTEXT_HPP_
#define HIERAF_TESTS_TEST_CONTEXT_HPP_

#include <memory>

#include "hieraf/harness.hpp"

namespace hieraf::testing {

// Default calibrated system, built once per test binary.
inline const SystemState& default_system() {
  static const SystemState state = calibrate_system(RunConfig{});
  return state;
}

inline std::shared_ptr<const EnvContext> default_context() {
  static const auto ctx = make_context(default_system(), RunConfig{});
  return ctx;
}

}  // namespace hieraf::testing

#endif  // HIERAF_TESTS_TEST_CONTEXT_HPP_
