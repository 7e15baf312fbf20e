#pragma once

#include <stdexcept>

namespace bethe {

// Error taxonomy shared by all modules. Input problems (parse, shape,
// negative entries, domain violations) are distinct from size/feasibility
// problems so the CLI can map them to different exit codes.

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NegativeEntryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SizeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SupportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BoundaryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PositivityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace bethe
