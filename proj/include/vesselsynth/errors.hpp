#pragma once

#include <stdexcept>
#include <string>

namespace vsynth {

/// Argument outside the operation's mathematical domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Mismatched image or tensor dimensions.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Geometric quantity undefined at the requested point (e.g. zero tangent).
class SingularityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Local orientation requested where the skeleton has no pixels.
class NoSignalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No skeleton pixel left on the branch to anchor a curve end.
class BranchExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file (PGM, JSON report).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vsynth
