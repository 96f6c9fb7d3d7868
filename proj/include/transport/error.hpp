#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace transport {

// Error taxonomy maps onto CLI exit codes: Config/Data -> 1, Numeric -> 2.
enum class ErrorKind { Config, Data, Numeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string component, const std::string& what)
      : std::runtime_error(component + ": " + what),
        kind_(kind),
        component_(std::move(component)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& component() const noexcept { return component_; }

 private:
  ErrorKind kind_;
  std::string component_;
};

[[noreturn]] inline void fail_config(const std::string& component, const std::string& msg) {
  throw Error(ErrorKind::Config, component, msg);
}

[[noreturn]] inline void fail_data(const std::string& component, const std::string& msg) {
  throw Error(ErrorKind::Data, component, msg);
}

[[noreturn]] inline void fail_numeric(const std::string& component, const std::string& msg) {
  throw Error(ErrorKind::Numeric, component, msg);
}

}  // namespace transport
