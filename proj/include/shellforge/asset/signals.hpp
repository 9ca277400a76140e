#pragma once

#include <string_view>

namespace shellforge::asset {

// Deterministic closed-form signals of the simulated machine:
//   temp(t) = 20 + 5*sin(2*pi*t/60)
//   rpm(t)  = 1000 + fmod(t, 10)*50
//   jobs(t) = floor(t/30)
// Pure functions of simulated time in seconds.
// Throws Error{UnknownVariable} for anything else.
double sim_signal(std::string_view var, double t);

bool is_signal_variable(std::string_view var);

}  // namespace shellforge::asset
