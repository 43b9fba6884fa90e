#pragma once

#include <functional>
#include <string>

namespace rheoflow {

/// Advisory messages (CFL, admissibility thresholds). Defaults to stderr.
void warn(const std::string& msg);
/// Replaces the warning sink; pass nullptr to restore stderr. Returns the previous sink.
std::function<void(const std::string&)> set_warning_sink(std::function<void(const std::string&)> sink);

}  // namespace rheoflow
