#pragma once

#include <stdexcept>
#include <string>

namespace pbsolv {

// Error categories map onto CLI exit codes:
//   2 parse/config, 3 geometry/registration, 4 solver, 5 extension/energy.
enum class ErrorKind {
  parse,
  config,
  geometry,
  registration,
  model,
  topology,
  dimension,
  format,
  domain,
  singularity,
  degeneracy,
  conditioning,
  solver,
  stencil,
  extension,
  interpolation,
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

  int exit_code() const {
    switch (kind_) {
      case ErrorKind::parse:
      case ErrorKind::config:
        return 2;
      case ErrorKind::geometry:
      case ErrorKind::registration:
      case ErrorKind::model:
      case ErrorKind::topology:
      case ErrorKind::dimension:
      case ErrorKind::format:
      case ErrorKind::domain:
      case ErrorKind::singularity:
      case ErrorKind::degeneracy:
        return 3;
      case ErrorKind::conditioning:
      case ErrorKind::solver:
        return 4;
      case ErrorKind::stencil:
      case ErrorKind::extension:
      case ErrorKind::interpolation:
        return 5;
    }
    return 1;
  }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

} // namespace pbsolv
