#pragma once

#include <functional>
#include <string>

namespace touchdigits::log {

using Sink = std::function<void(const std::string&)>;

// Routes warnings to `sink`; the default writes "warning: ..." to stderr.
// Returns the previous sink.
Sink set_warning_sink(Sink sink);

void warn(const std::string& message);

}  // namespace touchdigits::log
