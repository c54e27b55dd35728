#pragma once

#include <functional>
#include <string_view>

namespace rescav {

enum class LogLevel { info, warning };

using LogSink = std::function<void(LogLevel, std::string_view)>;

// Replaces the process-wide sink (default writes warnings to stderr). Returns the old sink.
LogSink set_log_sink(LogSink sink);

void log_info(std::string_view message);
void log_warning(std::string_view message);

}  // namespace rescav
