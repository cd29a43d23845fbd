#include "revgen/log.hpp"

#include <atomic>
#include <iostream>

namespace revgen {

namespace {
std::atomic<bool> g_enabled{true};
}

void log_info(std::string_view message) {
  if (g_enabled.load(std::memory_order_relaxed)) std::cerr << "[revgen] " << message << '\n';
}

void set_log_enabled(bool enabled) { g_enabled.store(enabled, std::memory_order_relaxed); }

}  // namespace revgen
