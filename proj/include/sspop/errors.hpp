#ifndef SSPOP_ERRORS_HPP
#define SSPOP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sspop {

// Requested (mean, sd) or other targets cannot be realized by the chosen family.
struct FeasibilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Prior elicitation target is below the sample size or otherwise unattainable.
struct ElicitationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The MCMC reached a state it cannot continue from (non-finite density,
// degenerate weights, rejection-sampler retry cap).
struct ChainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input file; carries the 1-based line number when known.
struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, long line = -1)
      : std::runtime_error(line >= 0 ? msg + " (line " + std::to_string(line) + ")" : msg),
        line_number(line) {}
  long line_number;
};

// Filesystem-level failure (missing path, unwritable output).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace sspop

#endif
