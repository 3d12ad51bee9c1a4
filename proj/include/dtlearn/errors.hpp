#pragma once

#include <stdexcept>
#include <string>

namespace dtl {

// Error taxonomy shared by all modules. Each maps to one failure class the
// interfaces document, so callers can catch narrowly.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct IndexError : std::out_of_range {
  using std::out_of_range::out_of_range;
};
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};
struct InvariantError : std::logic_error {
  using std::logic_error::logic_error;
};
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dtl
