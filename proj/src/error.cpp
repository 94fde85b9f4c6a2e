#include "cortexforge/error.hpp"

namespace cortexforge {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "invalid_input";
    case ErrorCode::InvalidMode: return "invalid_mode";
    case ErrorCode::EmptyMask: return "empty_mask";
    case ErrorCode::MissingLabel: return "missing_label";
    case ErrorCode::GeometryMismatch: return "geometry_mismatch";
    case ErrorCode::Topology: return "topology";
    case ErrorCode::TopologyRepairFailed: return "topology_repair_failed";
    case ErrorCode::DegenerateGeometry: return "degenerate_geometry";
    case ErrorCode::OutOfDomain: return "out_of_domain";
    case ErrorCode::FitStalled: return "fit_stalled";
    case ErrorCode::Format: return "format";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::TopologyRepairFailed: return 3;
    case ErrorCode::FitStalled: return 4;
    case ErrorCode::Io: return 5;
    default: return 2;
  }
}

}  // namespace cortexforge
