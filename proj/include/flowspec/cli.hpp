#pragma once

#include <string>
#include <vector>

namespace flowspec {

// Grid spec "lo:hi:step": inclusive endpoints, fixed step.
std::vector<double> parse_step_grid(const std::string& spec);

// Grid spec "log:a:b:n" or "lin:a:b:n": n points including both endpoints.
std::vector<double> parse_spaced_grid(const std::string& spec);

// Entry point behind the flowspec binary. Returns 0 on success, 1 on a
// usage or configuration error, 2 on a numerical failure.
int run(int argc, const char* const* argv);

}  // namespace flowspec
