#pragma once

#include <stdexcept>
#include <string>

namespace ttcast {

// Error taxonomy shared by all modules. The CLI maps these onto exit codes:
// ConfigError -> 2, IoError -> 3, NumericError -> 4.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ShapeError : Error {
  explicit ShapeError(const std::string& msg) : Error("shape error: " + msg) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error("config error: " + msg) {}
};

struct ContractError : Error {
  explicit ContractError(const std::string& msg) : Error("contract error: " + msg) {}
};

struct LookupError : Error {
  explicit LookupError(const std::string& msg) : Error("lookup error: " + msg) {}
};

struct NumericError : Error {
  explicit NumericError(const std::string& msg) : Error("numeric error: " + msg) {}
};

struct IoError : Error {
  explicit IoError(const std::string& msg) : Error("io error: " + msg) {}
};

}  // namespace ttcast
