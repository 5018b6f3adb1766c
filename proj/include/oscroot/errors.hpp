#pragma once

#include <stdexcept>
#include <string>

namespace oscroot {

// Error categories. Each maps to a fixed CLI exit code:
//   0 ok, 2 no dominant mode, 3 data quality, 4 configuration, 5 numerical.
enum class ErrorKind {
  no_dominant_mode,
  data_quality,
  config,
  numerical,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  int exit_code() const noexcept {
    switch (kind_) {
      case ErrorKind::no_dominant_mode: return 2;
      case ErrorKind::data_quality: return 3;
      case ErrorKind::config: return 4;
      case ErrorKind::numerical: return 5;
    }
    return 1;
  }

 private:
  ErrorKind kind_;
};

}  // namespace oscroot
