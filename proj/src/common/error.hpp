#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace ssdsim {

// Invalid user input (config file, CLI flags, trace files). CLI exit code 1.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Broken model invariant: scheduling in the past, overlapping busy intervals,
// NAND constraint violations inside a full run. Always fatal; CLI exit code 2.
class SimError : public std::logic_error {
 public:
  explicit SimError(const std::string& what) : std::logic_error(what) {}
};

namespace detail {
[[noreturn]] inline void check_failed(const char* expr, const char* file, int line,
                                      const std::string& msg) {
  std::ostringstream os;
  os << "model invariant violated: " << expr << " at " << file << ":" << line;
  if (!msg.empty()) os << " (" << msg << ")";
  throw SimError(os.str());
}
}  // namespace detail

// Active in all build types; model bugs must not pass silently in Release.
#define SSDSIM_CHECK(expr)                                                 \
  do {                                                                     \
    if (!(expr)) ::ssdsim::detail::check_failed(#expr, __FILE__, __LINE__, ""); \
  } while (0)

#define SSDSIM_CHECK_MSG(expr, msg)                                        \
  do {                                                                     \
    if (!(expr)) {                                                         \
      std::ostringstream os_;                                              \
      os_ << msg;                                                          \
      ::ssdsim::detail::check_failed(#expr, __FILE__, __LINE__, os_.str()); \
    }                                                                      \
  } while (0)

}  // namespace ssdsim
