#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pofmkl {

enum class ErrorKind {
  Config,
  Shape,
  Numeric,
  UnsupportedKernel,
  Protocol,
  Invariant,
  Parse,
  Schema,
  Capacity,
  Data,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; `kind()` lets callers (the CLI in
/// particular) map failures onto exit codes without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  /// `field` names the offending config key, column or constraint.
  Error(ErrorKind kind, std::string field, const std::string& message)
      : std::runtime_error(message), kind_(kind), field_(std::move(field)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& field() const noexcept { return field_; }

 private:
  ErrorKind kind_;
  std::string field_;
};

}  // namespace pofmkl
