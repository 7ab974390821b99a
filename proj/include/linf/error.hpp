#pragma once

#include <stdexcept>
#include <string>

namespace linf {

enum class ErrorKind {
  Domain,
  SeriesNotSummable,
  NotFinitelyCellCoverable,
  SampleOutsideOverlap,
  FormNotExact,
  BudgetExceeded,
  UnknownSupport,
  SplitUnsupported,
  Parse,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace linf
