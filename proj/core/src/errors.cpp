#include "lgre/errors.hpp"

namespace lgre {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage: return "usage error";
    case ErrorKind::config: return "configuration error";
    case ErrorKind::io: return "I/O error";
    case ErrorKind::parse: return "parse error";
    case ErrorKind::dimension: return "dimension error";
    case ErrorKind::integrity: return "integrity error";
    case ErrorKind::divergence: return "divergence error";
    case ErrorKind::generation: return "generation error";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage:
    case ErrorKind::config: return 2;
    case ErrorKind::io:
    case ErrorKind::parse: return 3;
    case ErrorKind::dimension:
    case ErrorKind::integrity: return 4;
    case ErrorKind::divergence: return 5;
    case ErrorKind::generation: return 6;
  }
  return 1;
}

}  // namespace lgre
