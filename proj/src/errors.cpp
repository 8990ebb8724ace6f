#include "floodaid/errors.hpp"

#include <atomic>
#include <iostream>

namespace floodaid {

namespace {
std::atomic<bool> g_warnings_enabled{true};
}

void warn(const std::string& message) {
  if (g_warnings_enabled.load()) std::cerr << "warning: " << message << '\n';
}

void set_warnings_enabled(bool enabled) { g_warnings_enabled.store(enabled); }

bool warnings_enabled() { return g_warnings_enabled.load(); }

}  // namespace floodaid
