#include "rescav/log.hpp"

#include <iostream>
#include <mutex>
#include <utility>

namespace rescav {

namespace {

std::mutex g_mutex;

void default_sink(LogLevel level, std::string_view message) {
  if (level == LogLevel::warning) std::cerr << "warning: " << message << '\n';
}

LogSink& sink() {
  static LogSink s = default_sink;
  return s;
}

void emit(LogLevel level, std::string_view message) {
  std::lock_guard lock(g_mutex);
  if (sink()) sink()(level, message);
}

}  // namespace

LogSink set_log_sink(LogSink s) {
  std::lock_guard lock(g_mutex);
  return std::exchange(sink(), std::move(s));
}

void log_info(std::string_view message) { emit(LogLevel::info, message); }
void log_warning(std::string_view message) { emit(LogLevel::warning, message); }

}  // namespace rescav
