#pragma once

#include <stdexcept>
#include <string>

namespace qmf {

/// Malformed input text (JSON syntax, missing or mistyped fields).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Structurally invalid network, cut or argument.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An enumeration or memory budget would be exceeded.
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A combinatorial identity that must hold failed. Never expected on valid
/// input; indicates a bug.
class LemmaViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Process exit codes used by the command-line tool.
enum class ExitCode : int {
  ok = 0,
  failure = 1,
  validation = 2,
  budget = 3,
  assertion = 4,
};

}  // namespace qmf
