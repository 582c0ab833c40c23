#pragma once

#include <stdexcept>
#include <string>

namespace prokd {

// Runtime failure attributed to one module of the pipeline. The CLI maps
// these to exit status 2 and prints the module name.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& what)
      : std::runtime_error(module + ": " + what), module_(std::move(module)) {}

  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

// Bad configuration or usage (exit status 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace prokd
