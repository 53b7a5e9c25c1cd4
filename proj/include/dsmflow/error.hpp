#pragma once

#include <stdexcept>
#include <string>

namespace dsmflow {

// Every numerical failure carries the module and the check that tripped so
// the CLI can report "module/check: detail" and map it to exit code 2.
class Error : public std::runtime_error {
public:
  Error(std::string module, std::string check, const std::string& detail)
      : std::runtime_error(module + "/" + check + ": " + detail),
        module_(std::move(module)),
        check_(std::move(check)) {}

  const std::string& module() const noexcept { return module_; }
  const std::string& check() const noexcept { return check_; }

private:
  std::string module_;
  std::string check_;
};

struct InvalidParam : Error {
  InvalidParam(std::string module, const std::string& detail)
      : Error(std::move(module), "InvalidParam", detail) {}
};

struct DomainError : Error {
  DomainError(std::string module, const std::string& detail)
      : Error(std::move(module), "DomainError", detail) {}
};

struct OutOfImage : Error {
  OutOfImage(std::string module, const std::string& detail)
      : Error(std::move(module), "OutOfImage", detail) {}
};

struct NonInvertible : Error {
  NonInvertible(std::string module, const std::string& detail)
      : Error(std::move(module), "NonInvertible", detail) {}
};

struct BackendError : Error {
  BackendError(std::string module, const std::string& detail)
      : Error(std::move(module), "BackendError", detail) {}
};

struct NonPositiveMetric : Error {
  NonPositiveMetric(std::string module, const std::string& detail)
      : Error(std::move(module), "NonPositiveMetric", detail) {}
};

}  // namespace dsmflow
