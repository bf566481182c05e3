#pragma once

#include <stdexcept>
#include <string>

namespace helm {

// Input outside the mathematical domain of a formula (e.g. C_F at Rn <= 100).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Parameter outside its permitted range.
struct RangeError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

struct NoEquilibrium : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Setpoint variant does not belong to the active control mode.
struct ModeMismatch : std::logic_error {
  using std::logic_error::logic_error;
};

struct EncodeError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

// Configuration document failed validation. path() names the offending field
// as a JSON pointer style path, e.g. "/control/loiter/radius".
class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace helm
