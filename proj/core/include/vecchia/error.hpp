#pragma once

#include <stdexcept>
#include <string>

namespace vecchia {

/// Invalid arguments or inconsistent inputs (bad parameters, size mismatches).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed: non-SPD block, rank-deficient design, etc.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Warnings (duplicate locations, optimizer hitting bounds) go through a
/// replaceable sink. The default writes to std::cerr.
using WarningHandler = void (*)(const std::string& message);

WarningHandler set_warning_handler(WarningHandler handler);
void warn(const std::string& message);

}  // namespace vecchia
