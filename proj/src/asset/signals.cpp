#include "shellforge/asset/signals.hpp"

#include <cmath>
#include <numbers>

#include "shellforge/util/error.hpp"

namespace shellforge::asset {

bool is_signal_variable(std::string_view var) {
  return var == "temp" || var == "rpm" || var == "jobs";
}

double sim_signal(std::string_view var, double t) {
  if (var == "temp") {
    return 20.0 + 5.0 * std::sin(2.0 * std::numbers::pi * t / 60.0);
  }
  if (var == "rpm") {
    return 1000.0 + std::fmod(t, 10.0) * 50.0;
  }
  if (var == "jobs") {
    return std::floor(t / 30.0);
  }
  throw Error(ErrorCode::UnknownVariable, std::string(var));
}

}  // namespace shellforge::asset
