#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mixtime {

enum class ErrorKind {
  DuplicateEdge,
  SelfLoop,
  Disconnected,
  LabelOutOfRange,
  InvalidParameters,
  DegenerateGraph,
  BipartiteGraph,
  ParseError,
  NonAdjacentSend,
  BandwidthExceeded,
  MaxLengthExceeded,
  ConvergenceFailure,
  InvalidConfig,
  UnknownFlag,
  MalformedRational,
  MissingGraphSource,
  ConflictingGraphSource,
  IoError,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DuplicateEdge: return "DuplicateEdge";
    case ErrorKind::SelfLoop: return "SelfLoop";
    case ErrorKind::Disconnected: return "Disconnected";
    case ErrorKind::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorKind::InvalidParameters: return "InvalidParameters";
    case ErrorKind::DegenerateGraph: return "DegenerateGraph";
    case ErrorKind::BipartiteGraph: return "BipartiteGraph";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::NonAdjacentSend: return "NonAdjacentSend";
    case ErrorKind::BandwidthExceeded: return "BandwidthExceeded";
    case ErrorKind::MaxLengthExceeded: return "MaxLengthExceeded";
    case ErrorKind::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::UnknownFlag: return "UnknownFlag";
    case ErrorKind::MalformedRational: return "MalformedRational";
    case ErrorKind::MissingGraphSource: return "MissingGraphSource";
    case ErrorKind::ConflictingGraphSource: return "ConflictingGraphSource";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

/// Base exception for every failure raised by the library. The kind is the
/// machine-readable part; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised by walk validation; carries a proper 2-coloring as the witness.
class BipartiteError : public Error {
 public:
  BipartiteError(const std::string& message, std::vector<int> coloring)
      : Error(ErrorKind::BipartiteGraph, message),
        coloring_(std::move(coloring)) {}

  const std::vector<int>& coloring() const noexcept { return coloring_; }

 private:
  std::vector<int> coloring_;
};

}  // namespace mixtime
