#include "rheoflow/log.hpp"

#include <iostream>
#include <mutex>

namespace rheoflow {

namespace {
std::mutex sink_mutex;
std::function<void(const std::string&)> sink;
}  // namespace

void warn(const std::string& msg) {
  std::lock_guard<std::mutex> lock(sink_mutex);
  if (sink)
    sink(msg);
  else
    std::cerr << "rheoflow: warning: " << msg << '\n';
}

std::function<void(const std::string&)> set_warning_sink(std::function<void(const std::string&)> s) {
  std::lock_guard<std::mutex> lock(sink_mutex);
  auto old = std::move(sink);
  sink = std::move(s);
  return old;
}

}  // namespace rheoflow
