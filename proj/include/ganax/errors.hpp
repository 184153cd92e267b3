#pragma once

#include <stdexcept>
#include <string>

namespace ganax {

// Caller passed something inconsistent (bad layer, bad file, bad arguments).
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// Text or binary input that does not parse. Carries a location when known.
struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, int line = 0, int col = 0)
      : std::runtime_error(format(msg, line, col)), line(line), col(col) {}
  int line = 0;
  int col = 0;

 private:
  static std::string format(const std::string& msg, int line, int col) {
    if (line <= 0) return msg;
    std::string s = "line " + std::to_string(line);
    if (col > 0) s += ", col " + std::to_string(col);
    return s + ": " + msg;
  }
};

// Internal simulation contract violated (malformed program, deadlock, ...).
struct SimFault : std::runtime_error {
  explicit SimFault(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ganax
