#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cortexforge {

enum class ErrorCode {
  InvalidInput,
  InvalidMode,
  EmptyMask,
  MissingLabel,
  GeometryMismatch,
  Topology,
  TopologyRepairFailed,
  DegenerateGeometry,
  OutOfDomain,
  FitStalled,
  Format,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Process exit status for a given error kind: 2 invalid input, 3 topology
/// repair failed, 4 fit stalled, 5 I/O.
int exit_code_for(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class TopologyRepairError : public Error {
 public:
  TopologyRepairError(long final_euler, const std::string& message)
      : Error(ErrorCode::TopologyRepairFailed, message), final_euler_(final_euler) {}

  long final_euler() const noexcept { return final_euler_; }

 private:
  long final_euler_;
};

}  // namespace cortexforge
