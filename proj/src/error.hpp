#pragma once

#include <stdexcept>
#include <string>

namespace mbfuse {

enum class ErrorCategory {
  InvalidArgument,
  Parse,
  Config,
  Io,
  Data,
};

const char* category_name(ErrorCategory c) noexcept;

/// Every failure raised by the core carries a category so the C boundary and
/// the CLI can report it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

}  // namespace mbfuse
