#ifndef PIKL_ERRORS_H_
#define PIKL_ERRORS_H_

#include <stdexcept>
#include <string>

namespace pikl {

// Rules parameterization or file/config contents are invalid.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An operation was called outside its precondition (terminal state, wrong
// player, out-of-range argument).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// An action was rejected by the rules. The state it was applied to is
// unchanged.
class IllegalActionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed serialized data. line() is 1-based, or 0 when not line-oriented.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what
                                    : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Inference produced no usable result (empty belief support, exhausted
// rejection budget, enumeration cap exceeded).
class BeliefError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training failed a runtime guard.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pikl

#endif  // PIKL_ERRORS_H_
