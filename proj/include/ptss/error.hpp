#pragma once

#include <stdexcept>
#include <string>

namespace ptss {

enum class ErrorCode {
  UnknownOperator,
  ArityMismatch,
  SortMismatch,
  OpenTerm,
  BadWeights,
  SyntaxError,
  UnresolvedName,
  SortError,
  RebindingError,
  LayerError,
  IncompleteModel,
  NoSuchAction,
  UnknownState,
  TooLarge,
  FragmentMismatch,
  NonWellFounded,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::UnknownOperator: return "UnknownOperator";
    case ErrorCode::ArityMismatch: return "ArityMismatch";
    case ErrorCode::SortMismatch: return "SortMismatch";
    case ErrorCode::OpenTerm: return "OpenTerm";
    case ErrorCode::BadWeights: return "BadWeights";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UnresolvedName: return "UnresolvedName";
    case ErrorCode::SortError: return "SortError";
    case ErrorCode::RebindingError: return "RebindingError";
    case ErrorCode::LayerError: return "LayerError";
    case ErrorCode::IncompleteModel: return "IncompleteModel";
    case ErrorCode::NoSuchAction: return "NoSuchAction";
    case ErrorCode::UnknownState: return "UnknownState";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::FragmentMismatch: return "FragmentMismatch";
    case ErrorCode::NonWellFounded: return "NonWellFounded";
  }
  return "Error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + msg),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ptss
