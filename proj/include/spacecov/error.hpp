#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace spacecov {

// Validation and precondition failures. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& message) : std::runtime_error(message) {}
};

template <class... Parts>
[[noreturn]] void fail(const Parts&... parts) {
  std::ostringstream os;
  (os << ... << parts);
  throw Error(os.str());
}

}  // namespace spacecov
