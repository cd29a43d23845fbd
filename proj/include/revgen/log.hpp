#ifndef REVGEN_LOG_HPP_
#define REVGEN_LOG_HPP_

#include <string_view>

namespace revgen {

/// Diagnostics go to stderr so stdout stays machine-readable.
void log_info(std::string_view message);
void set_log_enabled(bool enabled);

}  // namespace revgen

#endif  // REVGEN_LOG_HPP_
