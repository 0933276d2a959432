#include "ekrom/errors.hpp"

#include <iostream>
#include <mutex>

namespace ekrom {

namespace {

std::mutex& handler_mutex() {
  static std::mutex m;
  return m;
}

warning_handler& current_handler() {
  static warning_handler h = [](std::string_view msg) { std::cerr << "warning: " << msg << '\n'; };
  return h;
}

}  // namespace

warning_handler set_warning_handler(warning_handler handler) {
  std::lock_guard lock(handler_mutex());
  auto previous = std::move(current_handler());
  current_handler() = std::move(handler);
  return previous;
}

void warn(std::string_view message) {
  std::lock_guard lock(handler_mutex());
  if (current_handler()) current_handler()(message);
}

}  // namespace ekrom
